//! Grid-search reference solver.
//!
//! Never uses the score-effect algebra: every candidate is judged by a full
//! counterfactual plus prediction. All but the last support coordinate run
//! over a grid (bounds and zero included); the last coordinate is found by
//! bisection on the feasibility predicate, which is monotone for linear
//! structural equations. The best grid point is then refined by repeatedly
//! zooming a small grid in around it.

use std::cmp::Ordering;

use super::{
    already_favorable, compare_solutions, evaluate_action, select, RecourseError, RecourseProblem,
    RecourseSolution, SupportOutcome, MAX_GRID_POINTS,
};
use crate::scm::Action;

const BISECTION_STEPS: usize = 200;
/// Refinement rounds after the coarse grid; each shrinks the spacing by
/// `(ZOOM_POINTS - 1) / 2`.
const ZOOM_ROUNDS: usize = 24;
const ZOOM_POINTS: usize = 9;

pub fn brute_force_solve(problem: &RecourseProblem<'_>) -> Result<RecourseSolution, RecourseError> {
    problem.validate()?;
    if problem.grid_resolution < 2 {
        return Err(RecourseError::InvalidProblem("grid resolution must be at least 2".into()));
    }
    let supports = super::admissible_supports(problem)?;
    let r = problem.grid_resolution as u64 + 1;
    let points: u64 = supports
        .iter()
        .map(|s| r.saturating_pow(s.len() as u32 - 1))
        .fold(0u64, |a, b| a.saturating_add(b));
    if points > MAX_GRID_POINTS {
        return Err(RecourseError::GridTooLarge { points, limit: MAX_GRID_POINTS });
    }
    if let Some(sol) = already_favorable(problem, "already_favorable")? {
        return Ok(sol);
    }
    let outcomes = problem.exec.map_slice(&supports, |s| search_support(problem, s));
    select(outcomes, supports.len(), "grid")
}

fn grid(problem: &RecourseProblem<'_>, name: &str) -> Vec<f64> {
    let (lo, hi) = problem.bound(name);
    let n = problem.grid_resolution;
    let mut g: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    g.push(0.0);
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn search_support(problem: &RecourseProblem<'_>, support: &[String]) -> Result<SupportOutcome, RecourseError> {
    let (last, head) = support.split_last().expect("supports are non-empty");
    let grids: Vec<Vec<f64>> = head.iter().map(|n| grid(problem, n)).collect();
    let (mut best, budget_ok) = scan(problem, head, &grids, last)?;

    // The cost of the cheapest completion is convex in the head coordinates,
    // so zooming in around the best grid point cannot skip the optimum.
    if let Some((center, _)) = best.as_ref().filter(|_| !head.is_empty()) {
        let mut center = center.clone();
        let mut width: Vec<f64> = head.iter().map(|n| problem.grid_step(n)).collect();
        for _ in 0..ZOOM_ROUNDS {
            let grids: Vec<Vec<f64>> = head
                .iter()
                .enumerate()
                .map(|(k, n)| {
                    let (lo, hi) = problem.bound(n);
                    let mut g: Vec<f64> = (0..ZOOM_POINTS)
                        .map(|i| {
                            let t = 2.0 * i as f64 / (ZOOM_POINTS - 1) as f64 - 1.0;
                            (center[k] + t * width[k]).clamp(lo, hi)
                        })
                        .collect();
                    g.dedup();
                    g
                })
                .collect();
            if let (Some((c, sol)), _) = scan(problem, head, &grids, last)? {
                if best.as_ref().is_none_or(|(_, b)| compare_solutions(&sol, b) == Ordering::Less) {
                    center.clone_from(&c);
                    best = Some((c, sol));
                }
            }
            for w in &mut width {
                *w *= 2.0 / (ZOOM_POINTS - 1) as f64;
            }
        }
    }
    Ok(match best {
        Some((_, sol)) => SupportOutcome::Found(sol),
        None if budget_ok => SupportOutcome::Unreachable,
        None => SupportOutcome::OverBudget,
    })
}

/// Every combination of head grid values, each completed by a line search
/// on the last coordinate. Returns the best head point with its solution,
/// and whether any candidate met the time budget.
#[allow(clippy::type_complexity)]
fn scan(
    problem: &RecourseProblem<'_>,
    head: &[String],
    grids: &[Vec<f64>],
    last: &str,
) -> Result<(Option<(Vec<f64>, RecourseSolution)>, bool), RecourseError> {
    let mut best: Option<(Vec<f64>, RecourseSolution)> = None;
    let mut budget_ok = false;
    let mut fixed = vec![0.0; head.len()];
    let mut idx = vec![0usize; head.len()];
    loop {
        for (k, &i) in idx.iter().enumerate() {
            fixed[k] = grids[k][i];
        }
        if let Some(sol) = line_search(problem, head, &fixed, last)? {
            budget_ok |= sol.1;
            if let Some(sol) = sol.0 {
                if best.as_ref().is_none_or(|(_, b)| compare_solutions(&sol, b) == Ordering::Less) {
                    best = Some((fixed.clone(), sol));
                }
            }
        }
        // odometer over the head grids
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok((best, budget_ok));
            }
            idx[k] += 1;
            if idx[k] < grids[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Finds the smallest `|δ_last|` making the action feasible with the head
/// coordinates fixed. Returns `(solution, within_budget)`.
fn line_search(
    problem: &RecourseProblem<'_>,
    head: &[String],
    fixed: &[f64],
    last: &str,
) -> Result<Option<(Option<RecourseSolution>, bool)>, RecourseError> {
    let build = |d: f64| Action::new(head.iter().cloned().zip(fixed.iter().copied()).chain([(last.to_string(), d)]));
    let favourable = |d: f64| -> Result<RecourseSolution, RecourseError> { evaluate_action(problem, &build(d)) };

    let at_zero = favourable(0.0)?;
    let flips = |s: &RecourseSolution| s.probability >= problem.system.scm().target().threshold;
    let (lo, hi) = problem.bound(last);

    let mut found = if flips(&at_zero) {
        Some(at_zero)
    } else {
        let mut side = None;
        for bound in [hi, lo] {
            if bound != 0.0 && flips(&favourable(bound)?) {
                side = Some(bound);
                break;
            }
        }
        match side {
            None => None,
            Some(bound) => {
                let (mut inside, mut outside) = (bound, 0.0);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (inside + outside);
                    if mid == inside || mid == outside {
                        break;
                    }
                    if flips(&favourable(mid)?) {
                        inside = mid;
                    } else {
                        outside = mid;
                    }
                }
                Some(favourable(inside)?)
            }
        }
    };
    let Some(sol) = found.take() else {
        return Ok(Some((None, true)));
    };
    let in_budget = sol.feasible || problem.cost.time_budget.is_none_or(|b| sol.cost.c_t <= b);
    Ok(Some((sol.feasible.then_some(sol), in_budget)))
}
