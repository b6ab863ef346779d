use serde::Serialize;

use super::Scm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEntry {
    /// Variance of the variable's own noise term.
    pub proper: f64,
    /// Exact variance of the variable itself.
    pub marginal: f64,
}

impl VarianceEntry {
    pub fn proper_sigma(&self) -> f64 {
        self.proper.sqrt()
    }

    pub fn marginal_sigma(&self) -> f64 {
        self.marginal.sqrt()
    }
}

/// Per-variable variances in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceTable {
    pub names: Vec<String>,
    pub entries: Vec<VarianceEntry>,
}

impl VarianceTable {
    pub fn get(&self, name: &str) -> Option<&VarianceEntry> {
        self.names.iter().position(|n| n == name).map(|i| &self.entries[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &VarianceEntry)> {
        self.names.iter().map(String::as_str).zip(&self.entries)
    }
}

impl Scm {
    /// Full covariance matrix of the variables (declaration order), by
    /// propagation in topological order:
    /// `Cov(X_i, X_k) = Σ_j a_ji Cov(X_j, X_k)` for earlier `k`, and
    /// `Var(X_i) = Σ_j Σ_l a_ji a_li Cov(X_j, X_l) + Var(U_i)`.
    /// Exact for any independent noise families.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut cov = vec![vec![0.0; n]; n];
        let mut done: Vec<usize> = Vec::with_capacity(n);
        for &i in self.order_indices() {
            let terms = self.parent_terms(i);
            for &k in &done {
                let c: f64 = terms.iter().map(|&(j, a)| a * cov[j][k]).sum();
                cov[i][k] = c;
                cov[k][i] = c;
            }
            let mut var = self.variables()[i].noise.variance();
            for &(j, a) in terms {
                for &(l, b) in terms {
                    var += a * b * cov[j][l];
                }
            }
            cov[i][i] = var;
            done.push(i);
        }
        cov
    }

    pub fn variances(&self) -> VarianceTable {
        let cov = self.covariance();
        VarianceTable {
            names: self.names().map(String::from).collect(),
            entries: self
                .variables()
                .iter()
                .enumerate()
                .map(|(i, v)| VarianceEntry { proper: v.noise.variance(), marginal: cov[i][i] })
                .collect(),
        }
    }

    /// The cruder estimate `σ_i² ≈ Σ_j a_ji σ_j² + σ̂_i²`, which ignores
    /// parent covariances and does not square the coefficient. Kept only
    /// for comparison against [`Scm::variances`].
    pub fn approx_variances(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for &i in self.order_indices() {
            out[i] = self.variables()[i].noise.variance()
                + self.parent_terms(i).iter().map(|&(j, a)| a * out[j]).sum::<f64>();
        }
        out
    }
}
