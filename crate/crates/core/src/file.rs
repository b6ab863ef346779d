//! JSON SCM definition files.
//!
//! ```json
//! {
//!   "variables": [
//!     {"name": "X", "parents": {}, "intercept": 0,
//!      "noise": {"family": "normal", "params": {"mean": 0, "stddev": 1}},
//!      "actionability": "actionable"}
//!   ],
//!   "target": {"coefficients": {"X": 1}, "threshold": 0.5},
//!   "response_times": {"X->Y": 2}
//! }
//! ```

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::ResponseTimes;
use crate::recourse::{CausalSystem, RecourseError};
use crate::scm::{
    validate_parts, Actionability, EquationKind, NoiseSpec, Scm, ScmError, StructuralEquation, TargetSpec,
    ValidationReport, Variable,
};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed SCM file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    System(#[from] RecourseError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDef {
    pub name: String,
    #[serde(default)]
    pub parents: IndexMap<String, f64>,
    #[serde(default)]
    pub intercept: f64,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub actionability: Actionability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmFile {
    pub variables: Vec<VariableDef>,
    pub target: TargetSpec,
    #[serde(default)]
    pub response_times: ResponseTimes,
}

impl ScmFile {
    pub fn from_json(text: &str) -> Result<Self, FileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| FileError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("SCM files always serialise")
    }

    pub fn from_system(system: &CausalSystem) -> Self {
        Self::from_parts(system.scm(), system.response_times())
    }

    pub fn from_parts(scm: &Scm, times: &ResponseTimes) -> Self {
        ScmFile {
            variables: scm
                .variables()
                .iter()
                .map(|v| VariableDef {
                    name: v.name.clone(),
                    parents: v.equation.parents.iter().map(|p| (p.clone(), v.equation.coefficients[p])).collect(),
                    intercept: v.equation.intercept,
                    noise: v.noise,
                    actionability: v.actionability,
                })
                .collect(),
            target: scm.target().clone(),
            response_times: times.clone(),
        }
    }

    fn variables(&self) -> Vec<Variable> {
        self.variables
            .iter()
            .map(|d| Variable {
                name: d.name.clone(),
                equation: StructuralEquation {
                    kind: EquationKind::Linear,
                    parents: d.parents.keys().cloned().collect(),
                    coefficients: d.parents.iter().map(|(k, v)| (k.clone(), *v)).collect(),
                    intercept: d.intercept,
                },
                noise: d.noise,
                actionability: d.actionability,
            })
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_parts(&self.variables(), &self.target)
    }

    pub fn to_scm(&self) -> Result<Scm, ScmError> {
        Scm::new(self.variables(), self.target.clone())
    }

    pub fn to_system(&self) -> Result<CausalSystem, FileError> {
        Ok(CausalSystem::new(self.to_scm()?, self.response_times.clone())?)
    }
}
