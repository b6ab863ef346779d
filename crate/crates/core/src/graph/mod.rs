//! The causal DAG induced by an SCM, with a coefficient `β` and a response
//! time `τ` on every edge, and the path algebra over it.

mod paths;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scm::{Scm, TARGET_NODE};

pub use paths::{PathRecord, PathSums, Weighting, DEFAULT_PATH_CAP, MIN_PATH_WEIGHT_SUM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("response time annotated on missing edge {from}->{to}")]
    MissingEdge { from: String, to: String },
    #[error("malformed edge key {0:?}, expected \"from->to\"")]
    MalformedKey(String),
    #[error("response time of {from}->{to} must be finite and non-negative, got {tau}")]
    InvalidTime { from: String, to: String, tau: f64 },
    #[error("duplicate edge {from}->{to}")]
    DuplicateEdge { from: String, to: String },
    #[error("graph has a cycle")]
    Cycle,
    #[error("more than {cap} paths from {from} to {to}")]
    PathCapExceeded { from: String, to: String, cap: usize },
    #[error("no directed path from {from} to {to}")]
    NoPath { from: String, to: String },
    #[error("path weights from {from} to {to} sum to {sum:e}; the weighted average is ill-defined")]
    VanishingWeightSum { from: String, to: String, sum: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub beta: f64,
    pub tau: f64,
}

impl Edge {
    pub fn new(from: &str, to: &str, beta: f64, tau: f64) -> Self {
        Edge { from: from.into(), to: to.into(), beta, tau }
    }
}

/// Response-time annotations keyed by `(parent, child)`. Serialised as a
/// map with `"parent->child"` keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct ResponseTimes(BTreeMap<(String, String), f64>);

impl ResponseTimes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, from: &str, to: &str, tau: f64) {
        self.0.insert((from.to_string(), to.to_string()), tau);
    }

    pub fn with(mut self, from: &str, to: &str, tau: f64) -> Self {
        self.insert(from, to, tau);
        self
    }

    pub fn get(&self, from: &str, to: &str) -> Option<f64> {
        self.0.get(&(from.to_string(), to.to_string())).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.0.iter().map(|((a, b), t)| (a.as_str(), b.as_str(), *t))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parse_key(key: &str) -> Result<(String, String), GraphError> {
        match key.split_once("->") {
            Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
                Ok((a.trim().to_string(), b.trim().to_string()))
            }
            _ => Err(GraphError::MalformedKey(key.to_string())),
        }
    }
}

impl TryFrom<BTreeMap<String, f64>> for ResponseTimes {
    type Error = GraphError;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self, Self::Error> {
        map.into_iter()
            .map(|(k, v)| Ok((ResponseTimes::parse_key(&k)?, v)))
            .collect::<Result<_, _>>()
            .map(ResponseTimes)
    }
}

impl From<ResponseTimes> for BTreeMap<String, f64> {
    fn from(rt: ResponseTimes) -> Self {
        rt.0.into_iter().map(|((a, b), t)| (format!("{a}->{b}"), t)).collect()
    }
}

/// Immutable weighted DAG. Node indices follow a topological order fixed at
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalDag {
    nodes: Vec<String>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
    /// Outgoing edge ids per node, sorted by child name.
    out: Vec<Vec<usize>>,
    from_idx: Vec<usize>,
    to_idx: Vec<usize>,
    topo: Vec<usize>,
}

impl CausalDag {
    pub fn new(nodes: Vec<String>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let index: HashMap<String, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let lookup = |n: &str| index.get(n).copied().ok_or_else(|| GraphError::UnknownNode(n.into()));
        let mut from_idx = Vec::with_capacity(edges.len());
        let mut to_idx = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            let (f, t) = (lookup(&e.from)?, lookup(&e.to)?);
            if !(e.tau.is_finite() && e.tau >= 0.0) {
                return Err(GraphError::InvalidTime { from: e.from.clone(), to: e.to.clone(), tau: e.tau });
            }
            if !seen.insert((f, t)) {
                return Err(GraphError::DuplicateEdge { from: e.from.clone(), to: e.to.clone() });
            }
            from_idx.push(f);
            to_idx.push(t);
        }
        let mut out = vec![Vec::new(); nodes.len()];
        for (k, &f) in from_idx.iter().enumerate() {
            out[f].push(k);
        }
        for list in &mut out {
            list.sort_by(|&a, &b| nodes[to_idx[a]].cmp(&nodes[to_idx[b]]));
        }

        let mut indeg = vec![0usize; nodes.len()];
        for &t in &to_idx {
            indeg[t] += 1;
        }
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
            (0..nodes.len()).filter(|&i| indeg[i] == 0).map(std::cmp::Reverse).collect();
        let mut topo = Vec::with_capacity(nodes.len());
        while let Some(std::cmp::Reverse(i)) = ready.pop() {
            topo.push(i);
            for &k in &out[i] {
                indeg[to_idx[k]] -= 1;
                if indeg[to_idx[k]] == 0 {
                    ready.push(std::cmp::Reverse(to_idx[k]));
                }
            }
        }
        if topo.len() != nodes.len() {
            return Err(GraphError::Cycle);
        }
        Ok(CausalDag { nodes, edges, index, out, from_idx, to_idx, topo })
    }

    /// The SCM's parent relations plus an edge into [`TARGET_NODE`] for every
    /// nonzero target coefficient. Unannotated edges get `τ = 0`.
    pub fn from_scm(scm: &Scm, times: &ResponseTimes) -> Result<Self, GraphError> {
        let mut nodes: Vec<String> = scm.names().map(String::from).collect();
        nodes.push(TARGET_NODE.to_string());
        let mut edges = Vec::new();
        for v in scm.variables() {
            for p in &v.equation.parents {
                edges.push(Edge::new(p, &v.name, v.equation.coefficients[p], 0.0));
            }
        }
        for (name, w) in &scm.target().coefficients {
            if *w != 0.0 {
                edges.push(Edge::new(name, TARGET_NODE, *w, 0.0));
            }
        }
        for (from, to, tau) in times.iter() {
            let edge = edges
                .iter_mut()
                .find(|e| e.from == from && e.to == to)
                .ok_or_else(|| GraphError::MissingEdge { from: from.into(), to: to.into() })?;
            edge.tau = tau;
        }
        CausalDag::new(nodes, edges)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_index(&self, name: &str) -> Result<usize, GraphError> {
        self.index.get(name).copied().ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    /// Edges excluding those into the target node.
    pub fn structural_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.to != TARGET_NODE).count()
    }

    /// Returns a copy with every `β` multiplied by `factor`.
    pub fn scaled_betas(&self, factor: f64) -> CausalDag {
        let mut dag = self.clone();
        for e in &mut dag.edges {
            e.beta *= factor;
        }
        dag
    }

    /// Returns a copy with the `τ` of `from -> to` replaced.
    pub fn with_tau(&self, from: &str, to: &str, tau: f64) -> Result<CausalDag, GraphError> {
        let mut edges = self.edges.clone();
        let e = edges
            .iter_mut()
            .find(|e| e.from == from && e.to == to)
            .ok_or_else(|| GraphError::MissingEdge { from: from.into(), to: to.into() })?;
        e.tau = tau;
        CausalDag::new(self.nodes.clone(), edges)
    }
}

impl fmt::Display for CausalDag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.edges {
            writeln!(f, "{} -> {} (beta {}, tau {})", e.from, e.to, e.beta, e.tau)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::{NoiseSpec, StructuralEquation, TargetSpec, Variable};

    fn chain() -> Scm {
        Scm::new(
            vec![
                Variable::new("X", StructuralEquation::root(0.0), NoiseSpec::standard_normal()),
                Variable::new("Z", StructuralEquation::linear(0.0, &[("X", 2.0)]), NoiseSpec::standard_normal()),
            ],
            TargetSpec::new(&[("Z", 3.0)]),
        )
        .unwrap()
    }

    #[test]
    fn defaults_to_zero_time() {
        let dag = CausalDag::from_scm(&chain(), &ResponseTimes::new()).unwrap();
        assert_eq!(dag.edges().len(), 2);
        assert!(dag.edges().iter().all(|e| e.tau == 0.0));
        assert_eq!(dag.edge("Z", "Y").unwrap().beta, 3.0);
    }

    #[test]
    fn annotation_on_missing_edge() {
        let times = ResponseTimes::new().with("Y", "X", 1.0);
        assert_eq!(
            CausalDag::from_scm(&chain(), &times),
            Err(GraphError::MissingEdge { from: "Y".into(), to: "X".into() })
        );
        let times = ResponseTimes::new().with("X", "Z", -1.0);
        assert!(matches!(CausalDag::from_scm(&chain(), &times), Err(GraphError::InvalidTime { .. })));
    }

    #[test]
    fn response_time_keys() {
        let rt: ResponseTimes = serde_json::from_str(r#"{"E->I": 5, "I->S": 2}"#).unwrap();
        assert_eq!(rt.get("E", "I"), Some(5.0));
        assert!(serde_json::from_str::<ResponseTimes>(r#"{"EI": 5}"#).is_err());
        let back = serde_json::to_string(&rt).unwrap();
        assert_eq!(back, r#"{"E->I":5.0,"I->S":2.0}"#);
    }

    #[test]
    fn rejects_cycles() {
        let nodes = vec!["A".to_string(), "B".to_string()];
        let edges = vec![Edge::new("A", "B", 1.0, 0.0), Edge::new("B", "A", 1.0, 0.0)];
        assert_eq!(CausalDag::new(nodes, edges), Err(GraphError::Cycle));
    }
}
