//! Action costs: a (normalised) ℓp feature cost `c_s`, a graph-derived time
//! cost `c_t`, and the composite `c_s + λ·c_t`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CausalDag, GraphError, Weighting};
use crate::scm::{Action, VarianceTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("invalid cost spec: {0}")]
    InvalidSpec(String),
    #[error("no variance available to normalise {0:?}")]
    MissingNormalizer(String),
    #[error("normaliser for {0:?} is zero")]
    ZeroNormalizer(String),
    #[error("time cost needs a non-empty support")]
    EmptySupport,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Per-feature scale `s_i` dividing `|δ_i|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// Standard deviation of the variable itself.
    MarginalSigma,
    /// Standard deviation of the variable's own noise.
    ProperSigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeVariant {
    /// `sup_{v ∈ support}` of the longest-path response time to the target.
    LongestPath,
    /// `sup_{v ∈ support}` of the signed path-weighted average time.
    WeightedAverageRaw,
    /// As above with absolute path weights.
    WeightedAverageAbs,
}

fn default_p() -> f64 {
    2.0
}

fn default_normalization() -> Normalization {
    Normalization::ProperSigma
}

fn default_variant() -> TimeVariant {
    TimeVariant::WeightedAverageAbs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_normalization")]
    pub normalization: Normalization,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_variant")]
    pub time_variant: TimeVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget: Option<f64>,
}

impl Default for CostSpec {
    /// p = 2, proper-σ normalisation, absolute weighted-average time, λ = 0.
    fn default() -> Self {
        CostSpec {
            p: default_p(),
            normalization: default_normalization(),
            lambda: 0.0,
            time_variant: default_variant(),
            time_budget: None,
        }
    }
}

impl CostSpec {
    /// Normalised ℓ1 on proper σ with no time term.
    pub fn classic() -> Self {
        CostSpec { p: 1.0, lambda: 0.0, ..CostSpec::default() }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_variant(mut self, variant: TimeVariant) -> Self {
        self.time_variant = variant;
        self
    }

    pub fn with_budget(mut self, budget: Option<f64>) -> Self {
        self.time_budget = budget;
        self
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(CostError::InvalidSpec(format!("p must be a finite value >= 1, got {}", self.p)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(CostError::InvalidSpec(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if let Some(b) = self.time_budget {
            if b.is_nan() || b < 0.0 {
                return Err(CostError::InvalidSpec(format!("time budget must be >= 0, got {b}")));
            }
        }
        Ok(())
    }

    /// Scale for one feature under this spec's normalisation.
    pub fn scale(&self, name: &str, variances: &VarianceTable) -> Result<f64, CostError> {
        let s = match self.normalization {
            Normalization::None => return Ok(1.0),
            Normalization::MarginalSigma => variances.get(name).map(|v| v.marginal_sigma()),
            Normalization::ProperSigma => variances.get(name).map(|v| v.proper_sigma()),
        }
        .ok_or_else(|| CostError::MissingNormalizer(name.to_string()))?;
        if s > 0.0 && s.is_finite() {
            Ok(s)
        } else {
            Err(CostError::ZeroNormalizer(name.to_string()))
        }
    }
}

/// `(Σ_i (|δ_i| / s_i)^p)^{1/p}`, where the sum runs over the support.
pub fn feature_cost(action: &Action, spec: &CostSpec, variances: &VarianceTable) -> Result<f64, CostError> {
    spec.validate()?;
    let scaled = action
        .shifts()
        .iter()
        .map(|(name, d)| Ok(d.abs() / spec.scale(name, variances)?))
        .collect::<Result<Vec<f64>, CostError>>()?;
    Ok(lp_norm(&scaled, spec.p))
}

pub(crate) fn lp_norm(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return values.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    max * values.iter().map(|v| (v.abs() / max).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Response time of acting on `support`: the supremum over its members of
/// the per-variable time to `target`. Members without a directed path to
/// the target contribute nothing; a support with no such path at all costs 0.
pub fn time_cost<'a>(
    dag: &CausalDag,
    support: impl IntoIterator<Item = &'a str>,
    target: &str,
    spec: &CostSpec,
) -> Result<f64, CostError> {
    let mut any = false;
    let mut sup: Option<f64> = None;
    for v in support {
        any = true;
        let t = match spec.time_variant {
            TimeVariant::LongestPath => dag.longest_path_time(v, target)?,
            TimeVariant::WeightedAverageRaw | TimeVariant::WeightedAverageAbs => {
                if !dag.has_path(v, target)? {
                    None
                } else {
                    let w = if spec.time_variant == TimeVariant::WeightedAverageRaw {
                        Weighting::Raw
                    } else {
                        Weighting::Absolute
                    };
                    Some(dag.expected_response_time(v, target, w)?)
                }
            }
        };
        if let Some(t) = t {
            sup = Some(sup.map_or(t, |s: f64| s.max(t)));
        }
    }
    if !any {
        return Err(CostError::EmptySupport);
    }
    Ok(sup.unwrap_or_else(|| {
        tracing::warn!(target, "no support variable has a directed path to the target; time cost is 0");
        0.0
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub c_s: f64,
    pub c_t: f64,
    pub total: f64,
}

/// `c_s + λ·c_t`; the empty action costs nothing.
pub fn total_cost(
    action: &Action,
    dag: &CausalDag,
    target: &str,
    spec: &CostSpec,
    variances: &VarianceTable,
) -> Result<CostBreakdown, CostError> {
    spec.validate()?;
    if action.is_empty() {
        return Ok(CostBreakdown::default());
    }
    let c_s = feature_cost(action, spec, variances)?;
    let c_t = time_cost(dag, action.support(), target, spec)?;
    let total = if spec.lambda == 0.0 { c_s } else { c_s + spec.lambda * c_t };
    Ok(CostBreakdown { c_s, c_t, total })
}
