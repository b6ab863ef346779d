//! Fixtures and independent reference computations shared by the
//! integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use timerec_core::graph::Edge;
use timerec_core::scm::{NoiseSpec, StructuralEquation, TargetSpec, Variable};
use timerec_core::{Actionability, CausalDag, CausalSystem, Instance, ResponseTimes, Scm};

/// Education → Skill → Salary, with the classifier reading salary only.
/// `a` is the Education → Skill coefficient.
pub fn chain_system(a: f64) -> CausalSystem {
    let n = NoiseSpec::standard_normal();
    let scm = Scm::new(
        vec![
            Variable::new("X", StructuralEquation::root(0.0), n),
            Variable::new("K", StructuralEquation::linear(0.0, &[("X", a)]), n),
            Variable::new("Z", StructuralEquation::linear(0.0, &[("K", 1.0)]), n)
                .with_actionability(Actionability::Mutable),
        ],
        TargetSpec::new(&[("Z", 1.0)]),
    )
    .unwrap();
    let times = ResponseTimes::new().with("X", "K", 4.0).with("K", "Z", 1.0);
    CausalSystem::new(scm, times).unwrap()
}

pub fn chain_individual() -> Instance {
    [("X", -1.0), ("K", -3.0), ("Z", -3.0)].into_iter().collect()
}

/// `X → Z` with coefficient 2; the classifier reads `Z`.
pub fn two_node_system() -> CausalSystem {
    let scm = Scm::new(
        vec![
            Variable::new("X", StructuralEquation::root(0.0), NoiseSpec::standard_normal()),
            Variable::new("Z", StructuralEquation::linear(0.0, &[("X", 2.0)]), NoiseSpec::normal(0.5)),
        ],
        TargetSpec::new(&[("Z", 1.0)]),
    )
    .unwrap();
    let times = ResponseTimes::new().with("X", "Z", 2.0).with("Z", "Y", 0.5);
    CausalSystem::new(scm, times).unwrap()
}

pub fn two_node_individual() -> Instance {
    [("X", -0.5), ("Z", -1.5)].into_iter().collect()
}

/// The five-node example with `X → W → Z → Y`, `W → Y` and `X → C → Y`,
/// unit coefficients, and either unit or annotated response times.
pub fn example_dag(unit_times: bool) -> CausalDag {
    let taus = [("X", "W", 3.0), ("W", "Z", 5.0), ("W", "Y", 1.0), ("Z", "Y", 1.0), ("X", "C", 0.0), ("C", "Y", 4.0)];
    let edges = taus.iter().map(|&(f, t, tau)| Edge::new(f, t, 1.0, if unit_times { 1.0 } else { tau })).collect();
    CausalDag::new(["X", "W", "Z", "C", "Y"].map(String::from).to_vec(), edges).unwrap()
}

/// One path found by plain recursion over the edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePath {
    pub nodes: Vec<String>,
    pub weight: f64,
    pub time: f64,
}

pub fn oracle_paths(dag: &CausalDag, from: &str, to: &str) -> Vec<OraclePath> {
    fn walk(dag: &CausalDag, at: &str, to: &str, stack: &mut OraclePath, out: &mut Vec<OraclePath>) {
        if at == to {
            out.push(stack.clone());
            return;
        }
        for e in dag.edges().iter().filter(|e| e.from == at) {
            let saved = (stack.weight, stack.time);
            stack.nodes.push(e.to.clone());
            stack.weight *= e.beta;
            stack.time += e.tau;
            walk(dag, &e.to, to, stack, out);
            stack.nodes.pop();
            (stack.weight, stack.time) = saved;
        }
    }
    let mut out = Vec::new();
    let mut stack = OraclePath { nodes: vec![from.to_string()], weight: 1.0, time: 0.0 };
    walk(dag, from, to, &mut stack, &mut out);
    out.sort_by(|a, b| a.nodes.cmp(&b.nodes));
    out
}

/// `(Σ w, Σ w t)` over the oracle paths, optionally with `|w|`.
pub fn oracle_sums(dag: &CausalDag, from: &str, to: &str, absolute: bool) -> (f64, f64) {
    oracle_paths(dag, from, to).iter().fold((0.0, 0.0), |(z, wt), p| {
        let w = if absolute { p.weight.abs() } else { p.weight };
        (z + w, wt + w * p.time)
    })
}

pub fn oracle_longest(dag: &CausalDag, from: &str, to: &str) -> Option<f64> {
    oracle_paths(dag, from, to).iter().map(|p| p.time).reduce(f64::max)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    cov / (vx * vy).sqrt()
}

/// Random DAG on `N0 … N{n-1}` whose edges all point from lower to higher
/// index, so it is acyclic by construction.
pub fn arb_dag(max_nodes: usize) -> impl Strategy<Value = CausalDag> {
    (2..=max_nodes)
        .prop_flat_map(|n| {
            let pairs = n * (n - 1) / 2;
            (Just(n), prop::collection::vec((prop::bool::weighted(0.45), -3.0..3.0f64, 0.0..5.0f64), pairs))
        })
        .prop_map(|(n, slots)| {
            let nodes: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    let (keep, beta, tau) = slots[k];
                    k += 1;
                    if keep {
                        edges.push(Edge::new(&nodes[i], &nodes[j], beta, tau));
                    }
                }
            }
            CausalDag::new(nodes, edges).unwrap()
        })
}
