use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{TargetSpec, Variable, TARGET_NODE};

/// One violated SCM invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationIssue {
    InvalidName { name: String },
    ReservedName { name: String },
    DuplicateName { name: String },
    SelfParent { variable: String },
    DanglingParent { variable: String, parent: String },
    CoefficientMismatch { variable: String },
    InvalidNoise { variable: String, reason: String },
    NonFiniteCoefficient { variable: String },
    Cycle { variables: Vec<String> },
    UnknownTargetVariable { name: String },
    EmptyTarget,
    InvalidThreshold { threshold: f64 },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::InvalidName { name } => write!(f, "invalid variable name {name:?}"),
            ValidationIssue::ReservedName { name } => {
                write!(f, "variable name {name:?} is reserved for the target node")
            }
            ValidationIssue::DuplicateName { name } => write!(f, "duplicate variable {name:?}"),
            ValidationIssue::SelfParent { variable } => {
                write!(f, "{variable} lists itself as a parent")
            }
            ValidationIssue::DanglingParent { variable, parent } => {
                write!(f, "{variable} has undeclared parent {parent:?}")
            }
            ValidationIssue::CoefficientMismatch { variable } => {
                write!(f, "{variable}: coefficient keys differ from the parent list")
            }
            ValidationIssue::InvalidNoise { variable, reason } => {
                write!(f, "{variable}: invalid noise parameters: {reason}")
            }
            ValidationIssue::NonFiniteCoefficient { variable } => {
                write!(f, "{variable}: non-finite coefficient or intercept")
            }
            ValidationIssue::Cycle { variables } => {
                write!(f, "cycle among {}", variables.join(", "))
            }
            ValidationIssue::UnknownTargetVariable { name } => {
                write!(f, "target references undeclared variable {name:?}")
            }
            ValidationIssue::EmptyTarget => write!(f, "target has no nonzero coefficient"),
            ValidationIssue::InvalidThreshold { threshold } => {
                write!(f, "decision threshold {threshold} outside (0, 1)")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_cycle(&self) -> bool {
        self.issues.iter().any(|i| matches!(i, ValidationIssue::Cycle { .. }))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "ok");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Checks every SCM invariant and collects all violations.
pub fn validate_parts(variables: &[Variable], target: &TargetSpec) -> ValidationReport {
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    for v in variables {
        if !is_identifier(&v.name) {
            issues.push(ValidationIssue::InvalidName { name: v.name.clone() });
        }
        if v.name == TARGET_NODE {
            issues.push(ValidationIssue::ReservedName { name: v.name.clone() });
        }
        if !seen.insert(v.name.as_str()) {
            issues.push(ValidationIssue::DuplicateName { name: v.name.clone() });
        }
    }

    for v in variables {
        let eq = &v.equation;
        if eq.parents.iter().any(|p| p == &v.name) {
            issues.push(ValidationIssue::SelfParent { variable: v.name.clone() });
        }
        for p in &eq.parents {
            if !seen.contains(p.as_str()) {
                issues.push(ValidationIssue::DanglingParent {
                    variable: v.name.clone(),
                    parent: p.clone(),
                });
            }
        }
        let parent_set: HashSet<&str> = eq.parents.iter().map(String::as_str).collect();
        let key_set: HashSet<&str> = eq.coefficients.keys().map(String::as_str).collect();
        if parent_set != key_set || parent_set.len() != eq.parents.len() {
            issues.push(ValidationIssue::CoefficientMismatch { variable: v.name.clone() });
        }
        if !eq.intercept.is_finite() || eq.coefficients.values().any(|c| !c.is_finite()) {
            issues.push(ValidationIssue::NonFiniteCoefficient { variable: v.name.clone() });
        }
        if let Err(reason) = v.noise.check() {
            issues.push(ValidationIssue::InvalidNoise { variable: v.name.clone(), reason });
        }
    }

    if let Err(cycle) = topological_indices(variables) {
        issues.push(ValidationIssue::Cycle { variables: cycle });
    }

    for name in target.coefficients.keys() {
        if !seen.contains(name.as_str()) {
            issues.push(ValidationIssue::UnknownTargetVariable { name: name.clone() });
        }
    }
    if !target.coefficients.values().any(|c| *c != 0.0 && c.is_finite()) {
        issues.push(ValidationIssue::EmptyTarget);
    }
    if !(target.threshold > 0.0 && target.threshold < 1.0) {
        issues.push(ValidationIssue::InvalidThreshold { threshold: target.threshold });
    }

    ValidationReport { issues }
}

/// Kahn's algorithm with ties broken by declaration order. Unknown parents
/// are ignored here (reported separately). On failure returns the names
/// left on a cycle, in declaration order.
pub(crate) fn topological_indices(variables: &[Variable]) -> Result<Vec<usize>, Vec<String>> {
    let index: HashMap<&str, usize> =
        variables.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let n = variables.len();
    let mut children = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for (i, v) in variables.iter().enumerate() {
        let mut parents: Vec<usize> =
            v.equation.parents.iter().filter_map(|p| index.get(p.as_str()).copied()).collect();
        parents.sort_unstable();
        parents.dedup();
        for p in parents {
            children[p].push(i);
            indegree[i] += 1;
        }
    }

    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&i| indegree[i] > 0).map(|i| variables[i].name.clone()).collect())
    }
}
