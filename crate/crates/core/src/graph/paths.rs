use serde::{Deserialize, Serialize};

use super::{CausalDag, GraphError};

/// Default limit on explicitly enumerated paths.
pub const DEFAULT_PATH_CAP: usize = 100_000;

/// Below this magnitude the raw weight sum is treated as cancelled.
pub const MIN_PATH_WEIGHT_SUM: f64 = 1e-9;

/// One directed path with `weight = Π β` and `time = Σ τ` along it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub nodes: Vec<String>,
    pub weight: f64,
    pub time: f64,
}

impl PathRecord {
    pub fn label(&self) -> String {
        self.nodes.join("->")
    }
}

/// `Σ_π w_π` and `Σ_π w_π t_π` over all paths between two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PathSums {
    pub weight: f64,
    pub weighted_time: f64,
}

/// How path weights enter the weighted-average response time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Signed products of coefficients.
    Raw,
    /// Magnitudes of the products, so opposite-signed paths cannot cancel.
    Absolute,
}

impl CausalDag {
    /// All directed paths `from -> to`, ordered lexicographically by node
    /// sequence. Fails once more than `cap` paths are found.
    pub fn enumerate_paths(&self, from: &str, to: &str, cap: usize) -> Result<Vec<PathRecord>, GraphError> {
        let (s, t) = (self.node_index(from)?, self.node_index(to)?);
        let mut found = Vec::new();
        let mut stack = vec![s];
        self.dfs(s, t, 1.0, 0.0, &mut stack, &mut found, cap)
            .map_err(|_| GraphError::PathCapExceeded { from: from.into(), to: to.into(), cap })?;
        Ok(found)
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        at: usize,
        target: usize,
        weight: f64,
        time: f64,
        stack: &mut Vec<usize>,
        found: &mut Vec<PathRecord>,
        cap: usize,
    ) -> Result<(), ()> {
        if at == target {
            if found.len() == cap {
                return Err(());
            }
            found.push(PathRecord {
                nodes: stack.iter().map(|&i| self.nodes[i].clone()).collect(),
                weight,
                time,
            });
            return Ok(());
        }
        for &k in &self.out[at] {
            let next = self.to_idx[k];
            stack.push(next);
            let e = &self.edges[k];
            self.dfs(next, target, weight * e.beta, time + e.tau, stack, found, cap)?;
            stack.pop();
        }
        Ok(())
    }

    /// Longest `Σ τ` over all `from -> to` paths; `None` without a path.
    /// One pass in topological order.
    pub fn longest_path_time(&self, from: &str, to: &str) -> Result<Option<f64>, GraphError> {
        let (s, t) = (self.node_index(from)?, self.node_index(to)?);
        let mut dist: Vec<Option<f64>> = vec![None; self.nodes.len()];
        dist[s] = Some(0.0);
        for &u in &self.topo {
            let Some(du) = dist[u] else { continue };
            for &k in &self.out[u] {
                let v = self.to_idx[k];
                let cand = du + self.edges[k].tau;
                if dist[v].is_none_or(|dv| cand > dv) {
                    dist[v] = Some(cand);
                }
            }
        }
        Ok(dist[t])
    }

    /// Path sums by dynamic programming over `(Σw, Σw·t)` per node, one pass
    /// in topological order. Extending every path into `u` by the edge
    /// `u -> v` maps `(Z, W)` to `(β Z, β (W + τ Z))`.
    pub fn path_weight_sums(&self, from: &str, to: &str, weighting: Weighting) -> Result<PathSums, GraphError> {
        let (s, t) = (self.node_index(from)?, self.node_index(to)?);
        let mut sums = vec![PathSums::default(); self.nodes.len()];
        sums[s] = PathSums { weight: 1.0, weighted_time: 0.0 };
        let mut reached = vec![false; self.nodes.len()];
        reached[s] = true;
        for &u in &self.topo {
            if !reached[u] || u == t {
                continue;
            }
            let su = sums[u];
            for &k in &self.out[u] {
                let v = self.to_idx[k];
                let e = &self.edges[k];
                let beta = match weighting {
                    Weighting::Raw => e.beta,
                    Weighting::Absolute => e.beta.abs(),
                };
                sums[v].weight += beta * su.weight;
                sums[v].weighted_time += beta * (su.weighted_time + e.tau * su.weight);
                reached[v] = true;
            }
        }
        Ok(sums[t])
    }

    /// Total causal effect: the sum of coefficient products over all paths.
    pub fn total_causal_effect(&self, from: &str, to: &str) -> Result<f64, GraphError> {
        Ok(self.path_weight_sums(from, to, Weighting::Raw)?.weight)
    }

    /// Whether any directed path leads from `from` to `to`.
    pub fn has_path(&self, from: &str, to: &str) -> Result<bool, GraphError> {
        Ok(self.longest_path_time(from, to)?.is_some())
    }

    /// Path-weighted average of `t_π`: `Σ w_π t_π / Σ w_π`.
    pub fn expected_response_time(&self, from: &str, to: &str, weighting: Weighting) -> Result<f64, GraphError> {
        if !self.has_path(from, to)? {
            return Err(GraphError::NoPath { from: from.into(), to: to.into() });
        }
        let sums = self.path_weight_sums(from, to, weighting)?;
        if sums.weight.abs() < MIN_PATH_WEIGHT_SUM {
            return Err(GraphError::VanishingWeightSum { from: from.into(), to: to.into(), sum: sums.weight });
        }
        Ok(sums.weighted_time / sums.weight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn dag(nodes: &[&str], edges: &[(&str, &str, f64, f64)]) -> CausalDag {
        CausalDag::new(
            nodes.iter().map(|s| s.to_string()).collect(),
            edges.iter().map(|&(a, b, w, t)| Edge::new(a, b, w, t)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn trivial_and_disconnected() {
        let g = dag(&["A", "B", "C"], &[("A", "B", 2.0, 1.0)]);
        let same = g.enumerate_paths("A", "A", 10).unwrap();
        assert_eq!(same, vec![PathRecord { nodes: vec!["A".into()], weight: 1.0, time: 0.0 }]);
        assert!(g.enumerate_paths("A", "C", 10).unwrap().is_empty());
        assert_eq!(g.longest_path_time("A", "C").unwrap(), None);
        assert_eq!(g.longest_path_time("B", "B").unwrap(), Some(0.0));
        assert_eq!(g.path_weight_sums("A", "C", Weighting::Raw).unwrap(), PathSums::default());
        assert_eq!(g.total_causal_effect("B", "A").unwrap(), 0.0);
        assert!(matches!(g.expected_response_time("A", "C", Weighting::Raw), Err(GraphError::NoPath { .. })));
        assert!(matches!(g.node_index("Q"), Err(GraphError::UnknownNode(_))));
    }

    #[test]
    fn chain_product() {
        let g = dag(&["A", "B", "C"], &[("A", "B", 2.0, 0.0), ("B", "C", 3.0, 0.0)]);
        assert_eq!(g.total_causal_effect("A", "C").unwrap(), 6.0);
    }

    #[test]
    fn cancelling_weights() {
        let g = dag(
            &["A", "B", "C", "Y"],
            &[("A", "B", 1.0, 1.0), ("A", "C", 1.0, 2.0), ("B", "Y", 1.0, 0.0), ("C", "Y", -1.0, 0.0)],
        );
        assert!(matches!(
            g.expected_response_time("A", "Y", Weighting::Raw),
            Err(GraphError::VanishingWeightSum { .. })
        ));
        assert_eq!(g.expected_response_time("A", "Y", Weighting::Absolute).unwrap(), 1.5);
    }

    #[test]
    fn cap_guards_blowup() {
        let g = dag(
            &["A", "B", "C", "Y"],
            &[("A", "B", 1.0, 0.0), ("A", "C", 1.0, 0.0), ("B", "Y", 1.0, 0.0), ("C", "Y", 1.0, 0.0)],
        );
        assert_eq!(g.enumerate_paths("A", "Y", 2).unwrap().len(), 2);
        assert!(matches!(g.enumerate_paths("A", "Y", 1), Err(GraphError::PathCapExceeded { .. })));
    }

    #[test]
    fn single_edge_zero_time() {
        let g = dag(&["S", "Y"], &[("S", "Y", 3.0, 0.0)]);
        assert_eq!(g.expected_response_time("S", "Y", Weighting::Raw).unwrap(), 0.0);
    }
}
