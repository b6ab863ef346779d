//! Linear additive-noise structural causal models.
//!
//! Every variable is `x_i = intercept_i + Σ_j a_ji x_j + u_i` with independent
//! noise `u_i`. Additive actions shift intercepts; hard interventions replace
//! an equation by a constant.

mod noise;
mod sample;
mod validate;
mod variance;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use noise::NoiseSpec;
pub(crate) use noise::NoiseSampler;
pub use sample::{format_float, Dataset, NoiseDraws, CHUNK_ROWS};
pub use validate::{validate_parts, ValidationIssue, ValidationReport};
pub use variance::{VarianceEntry, VarianceTable};

/// Name of the distinguished outcome node in the induced graph.
pub const TARGET_NODE: &str = "Y";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScmError {
    #[error("invalid SCM: {0}")]
    Invalid(ValidationReport),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("instance does not match the SCM (missing: {missing:?}, unexpected: {unexpected:?})")]
    InstanceMismatch { missing: Vec<String>, unexpected: Vec<String> },
    #[error("non-finite value for {0:?}")]
    NonFinite(String),
    #[error("sample size must be at least 1")]
    EmptySample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Actionability {
    /// May be intervened on directly.
    #[default]
    Actionable,
    /// Changes only as a downstream consequence of other actions.
    Mutable,
    /// Never changes.
    NonActionable,
}

/// Functional form of a structural equation. Only linear is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[non_exhaustive]
pub enum EquationKind {
    #[default]
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralEquation {
    pub kind: EquationKind,
    pub parents: Vec<String>,
    pub coefficients: BTreeMap<String, f64>,
    pub intercept: f64,
}

impl StructuralEquation {
    pub fn linear(intercept: f64, terms: &[(&str, f64)]) -> Self {
        StructuralEquation {
            kind: EquationKind::Linear,
            parents: terms.iter().map(|(p, _)| p.to_string()).collect(),
            coefficients: terms.iter().map(|(p, a)| (p.to_string(), *a)).collect(),
            intercept,
        }
    }

    pub fn root(intercept: f64) -> Self {
        Self::linear(intercept, &[])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub equation: StructuralEquation,
    pub noise: NoiseSpec,
    pub actionability: Actionability,
}

impl Variable {
    pub fn new(name: &str, equation: StructuralEquation, noise: NoiseSpec) -> Self {
        Variable {
            name: name.to_string(),
            equation,
            noise,
            actionability: Actionability::Actionable,
        }
    }

    pub fn with_actionability(mut self, actionability: Actionability) -> Self {
        self.actionability = actionability;
        self
    }
}

fn default_threshold() -> f64 {
    0.5
}

/// Sigmoid-link classifier `h(x) = 1[σ(Σ w_v x_v) ≥ threshold]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub coefficients: BTreeMap<String, f64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

impl TargetSpec {
    pub fn new(terms: &[(&str, f64)]) -> Self {
        TargetSpec {
            coefficients: terms.iter().map(|(v, w)| (v.to_string(), *w)).collect(),
            threshold: default_threshold(),
        }
    }

    /// Score at which the probability equals the decision threshold.
    pub fn score_threshold(&self) -> f64 {
        (self.threshold / (1.0 - self.threshold)).ln()
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(score: f64) -> f64 {
    if score >= 0.0 {
        1.0 / (1.0 + (-score).exp())
    } else {
        let e = score.exp();
        e / (1.0 + e)
    }
}

/// One individual: a value for every SCM variable.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Instance {
    pub values: BTreeMap<String, f64>,
}

impl Instance {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Instance {
    fn from_iter<T: IntoIterator<Item = (S, f64)>>(iter: T) -> Self {
        Instance { values: iter.into_iter().map(|(k, v)| (k.into(), v)).collect() }
    }
}

/// Additive intervention `x_i ← f_i(pa_i, u_i) + δ_i`. Zero shifts are
/// dropped, so the key set is exactly the support.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct Action {
    shifts: BTreeMap<String, f64>,
}

impl Action {
    pub fn empty() -> Self {
        Action::default()
    }

    pub fn new<S: Into<String>>(shifts: impl IntoIterator<Item = (S, f64)>) -> Self {
        Action {
            shifts: shifts
                .into_iter()
                .map(|(k, v)| (k.into(), v))
                .filter(|(_, v)| *v != 0.0)
                .collect(),
        }
    }

    pub fn single(name: &str, delta: f64) -> Self {
        Action::new([(name, delta)])
    }

    pub fn shifts(&self) -> &BTreeMap<String, f64> {
        &self.shifts
    }

    pub fn support(&self) -> impl Iterator<Item = &str> {
        self.shifts.keys().map(String::as_str)
    }

    pub fn support_size(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn get(&self, name: &str) -> f64 {
        self.shifts.get(name).copied().unwrap_or(0.0)
    }
}

impl From<BTreeMap<String, f64>> for Action {
    fn from(map: BTreeMap<String, f64>) -> Self {
        Action::new(map)
    }
}

impl From<Action> for BTreeMap<String, f64> {
    fn from(a: Action) -> Self {
        a.shifts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub score: f64,
    pub probability: f64,
    pub label: u8,
}

/// A validated SCM with its topological order and index tables precomputed.
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct Scm {
    variables: Vec<Variable>,
    target: TargetSpec,
    index: HashMap<String, usize>,
    order: Vec<usize>,
    parents: Vec<Vec<(usize, f64)>>,
    target_terms: Vec<(usize, f64)>,
    samplers: Vec<NoiseSampler>,
}

impl PartialEq for Scm {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.target == other.target
    }
}

impl Scm {
    pub fn new(variables: Vec<Variable>, target: TargetSpec) -> Result<Self, ScmError> {
        let report = validate_parts(&variables, &target);
        if !report.is_ok() {
            return Err(ScmError::Invalid(report));
        }
        let order = validate::topological_indices(&variables).expect("validated acyclic");
        let index: HashMap<String, usize> =
            variables.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
        let parents = variables
            .iter()
            .map(|v| {
                v.equation
                    .parents
                    .iter()
                    .map(|p| (index[p], v.equation.coefficients[p]))
                    .collect()
            })
            .collect();
        let mut target_terms: Vec<(usize, f64)> = target
            .coefficients
            .iter()
            .filter(|(_, w)| **w != 0.0)
            .map(|(name, w)| (index[name], *w))
            .collect();
        target_terms.sort_by_key(|(i, _)| *i);
        let samplers = variables.iter().map(|v| v.noise.sampler()).collect();
        Ok(Scm { variables, target, index, order, parents, target_terms, samplers })
    }

    /// Re-runs validation; always succeeds for a constructed `Scm`.
    pub fn validate(&self) -> ValidationReport {
        validate_parts(&self.variables, &self.target)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn target(&self) -> &TargetSpec {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub(crate) fn require_index(&self, name: &str) -> Result<usize, ScmError> {
        self.index_of(name).ok_or_else(|| ScmError::UnknownVariable(name.to_string()))
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.index_of(name).map(|i| &self.variables[i])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.variables.iter().map(|v| v.name.as_str())
    }

    /// Variable names with every parent before its children; ties keep
    /// declaration order.
    pub fn topological_order(&self) -> Vec<&str> {
        self.order.iter().map(|&i| self.variables[i].name.as_str()).collect()
    }

    pub(crate) fn order_indices(&self) -> &[usize] {
        &self.order
    }

    pub(crate) fn parent_terms(&self, i: usize) -> &[(usize, f64)] {
        &self.parents[i]
    }

    pub(crate) fn samplers(&self) -> &[NoiseSampler] {
        &self.samplers
    }

    /// Converts an instance to a value vector in declaration order.
    pub fn to_values(&self, instance: &Instance) -> Result<Vec<f64>, ScmError> {
        let missing: Vec<String> =
            self.names().filter(|n| !instance.values.contains_key(*n)).map(String::from).collect();
        let unexpected: Vec<String> = instance
            .values
            .keys()
            .filter(|k| !self.index.contains_key(k.as_str()))
            .cloned()
            .collect();
        if !missing.is_empty() || !unexpected.is_empty() {
            return Err(ScmError::InstanceMismatch { missing, unexpected });
        }
        let values: Vec<f64> = self.names().map(|n| instance.values[n]).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ScmError::NonFinite(self.variables[i].name.clone()));
        }
        Ok(values)
    }

    pub fn to_instance(&self, values: &[f64]) -> Instance {
        self.names().zip(values.iter().copied()).collect()
    }

    /// Shift vector in declaration order for an action.
    pub fn shift_vector(&self, action: &Action) -> Result<Vec<f64>, ScmError> {
        let mut shifts = vec![0.0; self.len()];
        for (name, delta) in action.shifts() {
            shifts[self.require_index(name)?] = *delta;
        }
        Ok(shifts)
    }

    /// Evaluates the equations in topological order for given noise values
    /// (declaration order) and optional intercept shifts.
    pub(crate) fn evaluate_into(&self, noise: &[f64], shifts: Option<&[f64]>, out: &mut [f64]) {
        for &i in &self.order {
            let mut v = self.variables[i].equation.intercept;
            if let Some(s) = shifts {
                v += s[i];
            }
            for &(j, a) in &self.parents[i] {
                v += a * out[j];
            }
            out[i] = v + noise[i];
        }
    }

    pub fn evaluate(&self, noise: &[f64], shifts: Option<&[f64]>) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.evaluate_into(noise, shifts, &mut out);
        out
    }

    /// Classifier score `Σ w_v x_v` over a declaration-order value vector.
    #[inline]
    pub fn score_values(&self, values: &[f64]) -> f64 {
        self.target_terms.iter().map(|&(i, w)| w * values[i]).sum()
    }

    pub fn predict_values(&self, values: &[f64]) -> Prediction {
        let score = self.score_values(values);
        let probability = sigmoid(score);
        let label = u8::from(probability >= self.target.threshold);
        Prediction { score, probability, label }
    }

    pub fn predict(&self, instance: &Instance) -> Result<Prediction, ScmError> {
        Ok(self.predict_values(&self.to_values(instance)?))
    }

    /// New SCM whose supported intercepts are shifted by `δ_i`.
    pub fn intervene(&self, action: &Action) -> Result<Scm, ScmError> {
        let mut variables = self.variables.clone();
        for (name, delta) in action.shifts() {
            let i = self.require_index(name)?;
            variables[i].equation.intercept += delta;
        }
        Scm::new(variables, self.target.clone())
    }

    /// `do(X := x)`: each assigned variable loses its parents and becomes
    /// the constant `x` (degenerate noise, zero intercept).
    pub fn hard_intervene(&self, assignments: &BTreeMap<String, f64>) -> Result<Scm, ScmError> {
        let mut variables = self.variables.clone();
        for (name, value) in assignments {
            let i = self.require_index(name)?;
            if !value.is_finite() {
                return Err(ScmError::NonFinite(name.clone()));
            }
            variables[i].equation = StructuralEquation::root(0.0);
            variables[i].noise = NoiseSpec::Degenerate { value: *value };
        }
        Scm::new(variables, self.target.clone())
    }

    pub(crate) fn abduct_values(&self, values: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let mut fitted = self.variables[i].equation.intercept;
                for &(j, a) in &self.parents[i] {
                    fitted += a * values[j];
                }
                values[i] - fitted
            })
            .collect()
    }

    /// Recovers the noise values `u_i = x_i - f_i(pa_i)` of an observed instance.
    pub fn abduct(&self, instance: &Instance) -> Result<BTreeMap<String, f64>, ScmError> {
        let values = self.to_values(instance)?;
        Ok(self.names().map(String::from).zip(self.abduct_values(&values)).collect())
    }

    /// Abduction-action-prediction on a value vector.
    ///
    /// With additive noise the abducted noise cancels, so the counterfactual
    /// is propagated as a difference from the factual values:
    /// `x'_i = x_i + δ_i + Σ_j a_ji (x'_j - x_j)`. Unchanged ancestors
    /// therefore reproduce their factual values bit for bit.
    pub(crate) fn counterfactual_values(&self, values: &[f64], shifts: &[f64]) -> Vec<f64> {
        let mut out = values.to_vec();
        for &i in &self.order {
            let mut change = shifts[i];
            for &(j, a) in &self.parents[i] {
                let dj = out[j] - values[j];
                if dj != 0.0 {
                    change += a * dj;
                }
            }
            if change != 0.0 {
                out[i] = values[i] + change;
            }
        }
        out
    }

    pub fn counterfactual(&self, instance: &Instance, action: &Action) -> Result<Instance, ScmError> {
        let values = self.to_values(instance)?;
        let shifts = self.shift_vector(action)?;
        Ok(self.to_instance(&self.counterfactual_values(&values, &shifts)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Scm {
        Scm::new(
            vec![
                Variable::new("X", StructuralEquation::root(0.0), NoiseSpec::standard_normal()),
                Variable::new(
                    "Z",
                    StructuralEquation::linear(0.0, &[("X", 2.0)]),
                    NoiseSpec::standard_normal(),
                ),
            ],
            TargetSpec::new(&[("Z", 1.0)]),
        )
        .unwrap()
    }

    fn inst(pairs: &[(&str, f64)]) -> Instance {
        pairs.iter().map(|(k, v)| (*k, *v)).collect()
    }

    #[test]
    fn cycle_is_reported() {
        let vars = vec![
            Variable::new("X", StructuralEquation::linear(0.0, &[("Z", 1.0)]), NoiseSpec::normal(1.0)),
            Variable::new("Z", StructuralEquation::linear(0.0, &[("X", 1.0)]), NoiseSpec::normal(1.0)),
        ];
        let report = validate_parts(&vars, &TargetSpec::new(&[("Z", 1.0)]));
        assert!(report.has_cycle());
        assert!(matches!(Scm::new(vars, TargetSpec::new(&[("Z", 1.0)])), Err(ScmError::Invalid(_))));
    }

    #[test]
    fn bad_noise_and_dangling_parent() {
        let vars = vec![
            Variable::new("X", StructuralEquation::root(0.0), NoiseSpec::Gamma { shape: -1.0, scale: 1.0 }),
            Variable::new("Z", StructuralEquation::linear(0.0, &[("Q", 1.0)]), NoiseSpec::normal(1.0)),
        ];
        let report = validate_parts(&vars, &TargetSpec::new(&[("Z", 1.0)]));
        assert!(report.issues.iter().any(|i| matches!(i, ValidationIssue::InvalidNoise { .. })));
        assert!(report.issues.iter().any(|i| matches!(i, ValidationIssue::DanglingParent { .. })));
        assert!(!report.has_cycle());
    }

    #[test]
    fn coefficient_keys_must_match_parents() {
        let mut eq = StructuralEquation::linear(0.0, &[("X", 1.0)]);
        eq.coefficients.insert("W".into(), 2.0);
        let vars = vec![
            Variable::new("X", StructuralEquation::root(0.0), NoiseSpec::normal(1.0)),
            Variable::new("Z", eq, NoiseSpec::normal(1.0)),
        ];
        let report = validate_parts(&vars, &TargetSpec::new(&[("Z", 1.0)]));
        assert_eq!(report.issues, vec![ValidationIssue::CoefficientMismatch { variable: "Z".into() }]);
    }

    #[test]
    fn target_checks() {
        let vars = vec![Variable::new("X", StructuralEquation::root(0.0), NoiseSpec::normal(1.0))];
        let report = validate_parts(&vars, &TargetSpec::new(&[("X", 0.0)]));
        assert_eq!(report.issues, vec![ValidationIssue::EmptyTarget]);
        let mut t = TargetSpec::new(&[("Q", 1.0)]);
        t.threshold = 1.0;
        let report = validate_parts(&vars, &t);
        assert_eq!(report.issues.len(), 2);
        let vars = vec![Variable::new("Y", StructuralEquation::root(0.0), NoiseSpec::normal(1.0))];
        assert!(!validate_parts(&vars, &TargetSpec::new(&[("Y", 1.0)])).is_ok());
    }

    #[test]
    fn topological_order_ties_by_declaration() {
        let scm = Scm::new(
            vec![
                Variable::new("C", StructuralEquation::linear(0.0, &[("B", 1.0)]), NoiseSpec::normal(1.0)),
                Variable::new("B", StructuralEquation::root(0.0), NoiseSpec::normal(1.0)),
                Variable::new("A", StructuralEquation::root(0.0), NoiseSpec::normal(1.0)),
            ],
            TargetSpec::new(&[("C", 1.0)]),
        )
        .unwrap();
        assert_eq!(scm.topological_order(), vec!["B", "C", "A"]);
        let single = Scm::new(
            vec![Variable::new("X", StructuralEquation::root(0.0), NoiseSpec::normal(1.0))],
            TargetSpec::new(&[("X", 1.0)]),
        )
        .unwrap();
        assert_eq!(single.topological_order(), vec!["X"]);
    }

    #[test]
    fn manual_abduction() {
        let scm = chain();
        let u = scm.abduct(&inst(&[("X", 1.0), ("Z", 3.0)])).unwrap();
        assert_eq!(u["X"], 1.0);
        assert_eq!(u["Z"], 1.0);
        let zero = scm.abduct(&inst(&[("X", 0.0), ("Z", 0.0)])).unwrap();
        assert!(zero.values().all(|v| *v == 0.0));
    }

    #[test]
    fn manual_counterfactual() {
        let scm = chain();
        let x = inst(&[("X", 1.0), ("Z", 3.0)]);
        let cf = scm.counterfactual(&x, &Action::single("X", 1.0)).unwrap();
        assert_eq!(cf, inst(&[("X", 2.0), ("Z", 5.0)]));
        assert_eq!(scm.counterfactual(&x, &Action::empty()).unwrap(), x);
        // acting on the sink leaves its ancestor alone
        let cf = scm.counterfactual(&x, &Action::single("Z", -4.0)).unwrap();
        assert_eq!(cf, inst(&[("X", 1.0), ("Z", -1.0)]));
    }

    #[test]
    fn counterfactual_matches_reevaluation_with_abducted_noise() {
        let scm = chain();
        let x = inst(&[("X", 0.3), ("Z", -1.7)]);
        let action = Action::single("X", 0.9);
        let values = scm.to_values(&x).unwrap();
        let noise = scm.abduct_values(&values);
        let intervened = scm.intervene(&action).unwrap();
        let reevaluated = intervened.evaluate(&noise, None);
        let cf = scm.to_values(&scm.counterfactual(&x, &action).unwrap()).unwrap();
        for (a, b) in reevaluated.iter().zip(&cf) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        let scm = chain();
        assert!(matches!(scm.intervene(&Action::single("Q", 1.0)), Err(ScmError::UnknownVariable(_))));
        let mut asg = BTreeMap::new();
        asg.insert("Q".to_string(), 1.0);
        assert!(scm.hard_intervene(&asg).is_err());
        assert!(matches!(scm.predict(&inst(&[("X", 1.0)])), Err(ScmError::InstanceMismatch { .. })));
    }

    #[test]
    fn empty_intervention_is_identity() {
        let scm = chain();
        assert_eq!(scm.intervene(&Action::empty()).unwrap(), scm);
        let shifted = scm.intervene(&Action::single("X", 1.5)).unwrap();
        assert_eq!(shifted.variable("X").unwrap().equation.intercept, 1.5);
        assert_eq!(scm.variable("X").unwrap().equation.intercept, 0.0);
    }

    #[test]
    fn prediction_points() {
        let scm = chain();
        let p = scm.predict(&inst(&[("X", 5.0), ("Z", 0.0)])).unwrap();
        assert_eq!(p.probability, 0.5);
        assert_eq!(p.label, 1);
        let p = scm.predict(&inst(&[("X", 0.0), ("Z", 3f64.ln())])).unwrap();
        assert!((p.probability - 0.75).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) == 1.0);
        assert_eq!(TargetSpec::new(&[("Z", 1.0)]).score_threshold(), 0.0);
    }

    #[test]
    fn action_drops_zero_shifts() {
        let a = Action::new([("X", 0.0), ("Z", 2.0)]);
        assert_eq!(a.support().collect::<Vec<_>>(), vec!["Z"]);
        let parsed: Action = serde_json::from_str(r#"{"X":0,"Z":1.5}"#).unwrap();
        assert_eq!(parsed.support_size(), 1);
    }
}
