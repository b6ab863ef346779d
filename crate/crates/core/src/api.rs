//! JSON request and response bodies shared by the HTTP service and the CLI,
//! so both produce identical numbers for identical inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bench::{CedOptions, Outcome, Pairing};
use crate::cost::CostSpec;
use crate::file::ScmFile;
use crate::graph::Edge;
use crate::recourse::{CausalSystem, RecourseError, RecourseProblem, DEFAULT_MAX_SUPPORT};
use crate::scm::{Action, Instance, Prediction};

fn default_k() -> usize {
    DEFAULT_MAX_SUPPORT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecourseRequest {
    pub instance: Instance,
    #[serde(default)]
    pub cost_spec: CostSpec,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Overrides `cost_spec.time_budget` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget: Option<f64>,
    /// Per-variable `[lo, hi]` box on δ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BTreeMap<String, [f64; 2]>>,
}

impl RecourseRequest {
    pub fn new(instance: Instance, cost_spec: CostSpec) -> Self {
        RecourseRequest { instance, cost_spec, k: default_k(), time_budget: None, bounds: None }
    }

    pub fn problem<'a>(&self, system: &'a CausalSystem) -> RecourseProblem<'a> {
        let mut cost = self.cost_spec;
        if self.time_budget.is_some() {
            cost.time_budget = self.time_budget;
        }
        let mut problem = RecourseProblem::new(system, self.instance.clone(), cost).with_max_support(self.k);
        for (name, [lo, hi]) in self.bounds.iter().flatten() {
            problem = problem.with_bound(name, *lo, *hi);
        }
        problem
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierRequest {
    #[serde(flatten)]
    pub base: RecourseRequest,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub instance: Instance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualRequest {
    pub instance: Instance,
    #[serde(default)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualResponse {
    pub counterfactual: Instance,
    pub score: f64,
    pub probability: f64,
    pub label: u8,
}

pub fn counterfactual(system: &CausalSystem, req: &CounterfactualRequest) -> Result<CounterfactualResponse, RecourseError> {
    let cf = system.scm().counterfactual(&req.instance, &req.action)?;
    let Prediction { score, probability, label } = system.scm().predict(&cf)?;
    Ok(CounterfactualResponse { counterfactual: cf, score, probability, label })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CedRequest {
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub pairing: Pairing,
    #[serde(default)]
    pub outcome: Outcome,
}

impl CedRequest {
    pub const DEFAULT_ALPHA: f64 = 1.0;
    pub const DEFAULT_N: usize = 10_000;
    pub const DEFAULT_SEED: u64 = 42;

    pub fn resolved(&self) -> (f64, usize, u64, CedOptions) {
        (
            self.alpha.unwrap_or(Self::DEFAULT_ALPHA),
            self.n.unwrap_or(Self::DEFAULT_N),
            self.seed.unwrap_or(Self::DEFAULT_SEED),
            CedOptions { pairing: self.pairing, outcome: self.outcome, ..CedOptions::default() },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct IndividualRequest {
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualResponse {
    pub instance: Instance,
    pub prediction: Prediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigmas {
    pub proper: f64,
    pub marginal: f64,
}

/// The SCM file contents plus the induced edges and derived σ̂ / σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmDescription {
    #[serde(flatten)]
    pub file: ScmFile,
    pub topological_order: Vec<String>,
    pub edges: Vec<Edge>,
    pub sigma: BTreeMap<String, Sigmas>,
}

impl ScmDescription {
    pub fn new(system: &CausalSystem) -> Self {
        ScmDescription {
            file: ScmFile::from_system(system),
            topological_order: system.scm().topological_order().into_iter().map(String::from).collect(),
            edges: system.dag().edges().to_vec(),
            sigma: system
                .variances()
                .iter()
                .map(|(n, v)| (n.to_string(), Sigmas { proper: v.proper_sigma(), marginal: v.marginal_sigma() }))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{demo_individual, german_system};

    #[test]
    fn request_defaults() {
        let req: RecourseRequest = serde_json::from_str(r#"{"instance": {"X": 1}}"#).unwrap();
        assert_eq!(req.k, 2);
        assert_eq!(req.cost_spec, CostSpec::default());
        let req: FrontierRequest = serde_json::from_str(r#"{"instance": {"X": 1}, "lambdas": [0, 1]}"#).unwrap();
        assert_eq!(req.lambdas, vec![0.0, 1.0]);
    }

    #[test]
    fn budget_override_and_bounds() {
        let sys = german_system();
        let mut req = RecourseRequest::new(demo_individual(), CostSpec::default().with_budget(Some(9.0)));
        req.time_budget = Some(1.0);
        req.bounds = Some([("E".to_string(), [-1.0, 2.0])].into_iter().collect());
        let p = req.problem(&sys);
        assert_eq!(p.cost.time_budget, Some(1.0));
        assert_eq!(p.bound("E"), (-1.0, 2.0));
    }

    #[test]
    fn description_mirrors_system() {
        let d = ScmDescription::new(&german_system());
        assert_eq!(d.file.variables.len(), 8);
        assert_eq!(d.sigma["S"].proper, 2.0);
        let json = serde_json::to_value(&d).unwrap();
        assert!(json.get("variables").is_some() && json.get("response_times").is_some());
    }
}
