//! Minimal-cost recourse: find the cheapest admissible action whose
//! counterfactual flips the classifier, under the classic, time-aware and
//! time-budgeted cost regimes.

mod oracle;
mod projection;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{self, CostBreakdown, CostError, CostSpec};
use crate::graph::{CausalDag, GraphError, ResponseTimes};
use crate::parallel::Exec;
use crate::scm::{Action, Actionability, Instance, Prediction, Scm, ScmError, VarianceTable, TARGET_NODE};

use projection::Coord;

/// Default half-width of the δ box, in proper standard deviations.
pub const DEFAULT_BOUND_SIGMAS: f64 = 5.0;
pub const DEFAULT_MAX_SUPPORT: usize = 2;
pub const DEFAULT_GRID_RESOLUTION: usize = 101;
/// Upper limit on grid points the brute-force oracle will visit.
pub const MAX_GRID_POINTS: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecourseError {
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("no actionable variables")]
    NoActionableVariables,
    #[error("action not admissible: {0}")]
    NotAdmissible(String),
    #[error("invalid recourse problem: {0}")]
    InvalidProblem(String),
    #[error("no feasible action within bounds ({} supports examined, {} within the time budget)", .0.subsets_examined, .0.subsets_within_budget)]
    NoFeasibleAction(Diagnostics),
    #[error("grid has {points} points, limit is {limit}")]
    GridTooLarge { points: u64, limit: u64 },
    #[error("lambda list is empty")]
    EmptyLambdas,
}

/// An SCM together with its response-time graph and derived quantities.
/// Immutable; share it across threads or requests.
#[derive(Debug, Clone)]
pub struct CausalSystem {
    scm: Scm,
    times: ResponseTimes,
    dag: CausalDag,
    variances: VarianceTable,
    /// Total causal effect of each variable on the classifier score,
    /// declaration order.
    score_effects: Vec<f64>,
}

impl CausalSystem {
    pub fn new(scm: Scm, times: ResponseTimes) -> Result<Self, RecourseError> {
        let dag = CausalDag::from_scm(&scm, &times)?;
        let variances = scm.variances();
        let score_effects = scm
            .names()
            .map(|n| dag.total_causal_effect(n, TARGET_NODE))
            .collect::<Result<_, _>>()?;
        Ok(CausalSystem { scm, times, dag, variances, score_effects })
    }

    pub fn scm(&self) -> &Scm {
        &self.scm
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn response_times(&self) -> &ResponseTimes {
        &self.times
    }

    pub fn variances(&self) -> &VarianceTable {
        &self.variances
    }

    pub fn score_effect(&self, name: &str) -> Option<f64> {
        self.scm.index_of(name).map(|i| self.score_effects[i])
    }

    pub fn actionable(&self) -> Vec<&str> {
        self.scm
            .variables()
            .iter()
            .filter(|v| v.actionability == Actionability::Actionable)
            .map(|v| v.name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RecourseProblem<'a> {
    pub system: &'a CausalSystem,
    pub instance: Instance,
    pub cost: CostSpec,
    /// Largest support size considered.
    pub max_support: usize,
    /// Per-variable `(lo, hi)` box on δ; unlisted variables use ±5 σ̂.
    pub bounds: BTreeMap<String, (f64, f64)>,
    /// Grid points per coordinate for [`brute_force_solve`].
    pub grid_resolution: usize,
    pub exec: Exec,
}

impl<'a> RecourseProblem<'a> {
    pub fn new(system: &'a CausalSystem, instance: Instance, cost: CostSpec) -> Self {
        RecourseProblem {
            system,
            instance,
            cost,
            max_support: DEFAULT_MAX_SUPPORT,
            bounds: BTreeMap::new(),
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            exec: Exec::default(),
        }
    }

    pub fn with_max_support(mut self, k: usize) -> Self {
        self.max_support = k;
        self
    }

    pub fn with_cost(mut self, cost: CostSpec) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_grid_resolution(mut self, r: usize) -> Self {
        self.grid_resolution = r;
        self
    }

    pub fn with_bound(mut self, name: &str, lo: f64, hi: f64) -> Self {
        self.bounds.insert(name.to_string(), (lo, hi));
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn bound(&self, name: &str) -> (f64, f64) {
        if let Some(b) = self.bounds.get(name) {
            return *b;
        }
        let s = self.system.variances.get(name).map_or(0.0, |v| v.proper_sigma());
        (-DEFAULT_BOUND_SIGMAS * s, DEFAULT_BOUND_SIGMAS * s)
    }

    /// Grid spacing the oracle uses for `name`.
    pub fn grid_step(&self, name: &str) -> f64 {
        let (lo, hi) = self.bound(name);
        (hi - lo) / (self.grid_resolution.max(2) - 1) as f64
    }

    fn validate(&self) -> Result<(), RecourseError> {
        self.cost.validate()?;
        if self.max_support == 0 {
            return Err(RecourseError::InvalidProblem("max support size must be at least 1".into()));
        }
        for (name, (lo, hi)) in &self.bounds {
            self.system.scm.require_index(name)?;
            if !(*lo <= 0.0 && 0.0 <= *hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(RecourseError::InvalidProblem(format!(
                    "bounds for {name} must be finite and contain 0, got [{lo}, {hi}]"
                )));
            }
        }
        self.system.scm.to_values(&self.instance)?;
        Ok(())
    }

    pub fn current_prediction(&self) -> Result<Prediction, RecourseError> {
        Ok(self.system.scm.predict(&self.instance)?)
    }

    fn within_budget(&self, c_t: f64) -> bool {
        self.cost.time_budget.is_none_or(|b| c_t <= b)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: String,
    pub subsets_examined: usize,
    pub subsets_within_budget: usize,
    pub feasible_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecourseSolution {
    pub action: Action,
    pub cost: CostBreakdown,
    pub counterfactual: Instance,
    pub probability: f64,
    pub feasible: bool,
    pub diagnostics: Diagnostics,
}

impl RecourseSolution {
    pub fn support(&self) -> Vec<&str> {
        self.action.support().collect()
    }

    pub fn touches(&self, name: &str) -> bool {
        self.action.shifts().contains_key(name)
    }
}

/// Every non-empty subset of the actionable variables with at most
/// `max_support` members, by size and then lexicographically.
pub fn admissible_supports(problem: &RecourseProblem<'_>) -> Result<Vec<Vec<String>>, RecourseError> {
    let mut names: Vec<String> = problem.system.actionable().into_iter().map(String::from).collect();
    if names.is_empty() {
        return Err(RecourseError::NoActionableVariables);
    }
    names.sort();
    let mut out = Vec::new();
    for size in 1..=problem.max_support.min(names.len()) {
        let mut pick = Vec::with_capacity(size);
        combinations(&names, size, 0, &mut pick, &mut out);
    }
    Ok(out)
}

fn combinations(names: &[String], size: usize, start: usize, pick: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    if pick.len() == size {
        out.push(pick.clone());
        return;
    }
    for i in start..names.len() {
        pick.push(names[i].clone());
        combinations(names, size, i + 1, pick, out);
        pick.pop();
    }
}

/// Counterfactual, prediction and cost of one action.
pub fn evaluate_action(problem: &RecourseProblem<'_>, action: &Action) -> Result<RecourseSolution, RecourseError> {
    let scm = &problem.system.scm;
    if action.support_size() > problem.max_support {
        return Err(RecourseError::NotAdmissible(format!(
            "support size {} exceeds {}",
            action.support_size(),
            problem.max_support
        )));
    }
    for name in action.support() {
        let v = scm.variable(name).ok_or_else(|| ScmError::UnknownVariable(name.into()))?;
        if v.actionability != Actionability::Actionable {
            return Err(RecourseError::NotAdmissible(format!("{name} is not actionable")));
        }
    }
    let values = scm.to_values(&problem.instance)?;
    let shifts = scm.shift_vector(action)?;
    let cf = scm.counterfactual_values(&values, &shifts);
    let pred = scm.predict_values(&cf);
    let cost = cost::total_cost(action, &problem.system.dag, TARGET_NODE, &problem.cost, &problem.system.variances)?;
    let feasible = pred.label == 1 && problem.within_budget(cost.c_t);
    Ok(RecourseSolution {
        action: action.clone(),
        cost,
        counterfactual: scm.to_instance(&cf),
        probability: pred.probability,
        feasible,
        diagnostics: Diagnostics::default(),
    })
}

/// Orders solutions by total cost, then support size, then support names.
pub(crate) fn compare_solutions(a: &RecourseSolution, b: &RecourseSolution) -> Ordering {
    let (ta, tb) = (a.cost.total, b.cost.total);
    let tol = 1e-12 * ta.abs().max(tb.abs()).max(1.0);
    let by_cost = if (ta - tb).abs() <= tol { Ordering::Equal } else { ta.total_cmp(&tb) };
    by_cost
        .then(a.action.support_size().cmp(&b.action.support_size()))
        .then_with(|| a.support().cmp(&b.support()))
}

fn already_favorable(problem: &RecourseProblem<'_>, method: &str) -> Result<Option<RecourseSolution>, RecourseError> {
    if problem.current_prediction()?.label == 1 {
        let mut sol = evaluate_action(problem, &Action::empty())?;
        sol.diagnostics.method = method.to_string();
        return Ok(Some(sol));
    }
    Ok(None)
}

enum SupportOutcome {
    OverBudget,
    Unreachable,
    Found(RecourseSolution),
}

/// Exact solver for linear SCMs.
///
/// Supports whose time cost breaks the budget are dropped first, since
/// `c_t` does not depend on δ. Within a support the favourable region is
/// the half-space `e·δ ≥ gap`, with `e` the total effects on the score and
/// `gap` the distance to the decision threshold; the cheapest point is
/// found in closed form and then re-checked by a full counterfactual.
pub fn solve(problem: &RecourseProblem<'_>) -> Result<RecourseSolution, RecourseError> {
    problem.validate()?;
    if let Some(sol) = already_favorable(problem, "already_favorable")? {
        return Ok(sol);
    }
    let supports = admissible_supports(problem)?;
    let pred = problem.current_prediction()?;
    let gap = problem.system.scm.target().score_threshold() - pred.score;

    let outcomes = problem.exec.map_slice(&supports, |s| solve_support(problem, s, gap));
    select(outcomes, supports.len(), "halfspace")
}

fn select(
    outcomes: Vec<Result<SupportOutcome, RecourseError>>,
    examined: usize,
    method: &str,
) -> Result<RecourseSolution, RecourseError> {
    let mut diagnostics =
        Diagnostics { method: method.to_string(), subsets_examined: examined, ..Default::default() };
    let mut best: Option<RecourseSolution> = None;
    for outcome in outcomes {
        match outcome? {
            SupportOutcome::OverBudget => {}
            SupportOutcome::Unreachable => diagnostics.subsets_within_budget += 1,
            SupportOutcome::Found(sol) => {
                diagnostics.subsets_within_budget += 1;
                diagnostics.feasible_candidates += 1;
                if best.as_ref().is_none_or(|b| compare_solutions(&sol, b) == Ordering::Less) {
                    best = Some(sol);
                }
            }
        }
    }
    match best {
        Some(mut sol) => {
            sol.diagnostics = diagnostics;
            Ok(sol)
        }
        None => Err(RecourseError::NoFeasibleAction(diagnostics)),
    }
}

fn solve_support(problem: &RecourseProblem<'_>, support: &[String], gap: f64) -> Result<SupportOutcome, RecourseError> {
    let sys = problem.system;
    let c_t = cost::time_cost(&sys.dag, support.iter().map(String::as_str), TARGET_NODE, &problem.cost)?;
    if !problem.within_budget(c_t) {
        return Ok(SupportOutcome::OverBudget);
    }
    let coords = support
        .iter()
        .map(|name| {
            let (lo, hi) = problem.bound(name);
            Ok(Coord {
                effect: sys.score_effect(name).expect("support drawn from the SCM"),
                scale: problem.cost.scale(name, &sys.variances)?,
                lo,
                hi,
            })
        })
        .collect::<Result<Vec<_>, CostError>>()?;

    // Aim slightly past the threshold so rounding in the counterfactual
    // cannot land on the wrong side.
    let values = sys.scm.to_values(&problem.instance)?;
    let magnitude: f64 = sys
        .scm
        .target()
        .coefficients
        .iter()
        .map(|(n, w)| (w * values[sys.scm.index_of(n).expect("validated")]).abs())
        .sum();
    let mut margin = 1e-12 * (1.0 + gap.abs() + magnitude);
    for _ in 0..4 {
        let Some(deltas) = projection::min_norm_on_halfspace(&coords, gap + margin, problem.cost.p) else {
            return Ok(SupportOutcome::Unreachable);
        };
        let action = Action::new(support.iter().cloned().zip(deltas));
        let sol = evaluate_action(problem, &action)?;
        if sol.feasible {
            return Ok(SupportOutcome::Found(sol));
        }
        margin *= 1e3;
    }
    Ok(SupportOutcome::Unreachable)
}

pub use oracle::brute_force_solve;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub lambda: f64,
    pub solution: RecourseSolution,
    /// Whether the support differs from the previous entry's.
    pub support_changed: bool,
}

/// Solves the problem once per λ, keeping every other setting fixed.
pub fn lambda_frontier(problem: &RecourseProblem<'_>, lambdas: &[f64]) -> Result<Vec<FrontierEntry>, RecourseError> {
    if lambdas.is_empty() {
        return Err(RecourseError::EmptyLambdas);
    }
    let mut out: Vec<FrontierEntry> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let p = problem.clone().with_cost(problem.cost.with_lambda(lambda));
        let solution = solve(&p)?;
        let support_changed = out.last().is_some_and(|prev| prev.solution.support() != solution.support());
        out.push(FrontierEntry { lambda, solution, support_changed });
    }
    Ok(out)
}
