//! Causal effect derivative: the finite difference
//! `(Ȳ_{do(X_i + α σ̂_i)} − Ȳ_obs) / α` of the mean outcome.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::parallel::Exec;
use crate::scm::{format_float, Actionability, NoiseDraws, Scm, CHUNK_ROWS};

/// How the interventional sample relates to the observational one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Same noise draws for both samples; row-wise paired differences.
    #[default]
    Common,
    /// A fresh seed for every interventional sample.
    Independent,
}

/// Which target column is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    #[default]
    Probability,
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CedOptions {
    pub pairing: Pairing,
    pub outcome: Outcome,
    pub exec: Exec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CedEstimate {
    pub variable: String,
    pub alpha: f64,
    /// Applied shift `α σ̂_i`.
    pub shift: f64,
    pub ced: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CedRow {
    pub variable: String,
    pub actionability: Actionability,
    pub actionable: bool,
    pub alpha: f64,
    pub ced: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CedReport {
    pub alpha: f64,
    pub n: usize,
    pub seed: u64,
    pub pairing: Pairing,
    pub outcome: Outcome,
    pub rows: Vec<CedRow>,
}

impl CedReport {
    pub fn row(&self, variable: &str) -> Option<&CedRow> {
        self.rows.iter().find(|r| r.variable == variable)
    }

    pub fn ced(&self, variable: &str) -> f64 {
        self.row(variable).map_or(f64::NAN, |r| r.ced)
    }

    fn stamp(&self) -> String {
        format!(
            "# seed={} n={} alpha={} pairing={:?} outcome={:?}",
            self.seed, self.n, self.alpha, self.pairing, self.outcome
        )
        .to_lowercase()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.stamp();
        out.push_str("\nvariable,actionable,alpha,ced,stderr\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.variable,
                r.actionable,
                format_float(r.alpha),
                format_float(r.ced),
                format_float(r.stderr)
            );
        }
        out
    }

    /// Aligned table; non-actionable rows are marked with `*`.
    pub fn to_text(&self) -> String {
        let mut out = self.stamp();
        let _ = write!(out, "\n{:<10} {:>10} {:>12} {:>12}\n", "variable", "actionable", "ced", "stderr");
        for r in &self.rows {
            let name = if r.actionable { r.variable.clone() } else { format!("{}*", r.variable) };
            let _ = writeln!(out, "{:<10} {:>10} {:>12.6} {:>12.6}", name, r.actionable, r.ced, r.stderr);
        }
        out
    }
}

fn check(alpha: f64, n: usize) -> Result<(), BenchError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(BenchError::InvalidAlpha(alpha));
    }
    if n < 2 {
        return Err(BenchError::TooFewRows(n));
    }
    Ok(())
}

/// Per-row outcome values for the given draws and intercept shifts.
fn outcomes(scm: &Scm, draws: &NoiseDraws, shifts: Option<&[f64]>, outcome: Outcome, exec: Exec) -> Vec<f64> {
    let chunks = draws.rows().div_ceil(CHUNK_ROWS);
    exec.map_range(chunks, |c| {
        let start = c * CHUNK_ROWS;
        let end = (start + CHUNK_ROWS).min(draws.rows());
        let mut x = vec![0.0; scm.len()];
        (start..end)
            .map(|r| {
                scm.evaluate_into(draws.row(r), shifts, &mut x);
                let p = scm.predict_values(&x).probability;
                match outcome {
                    Outcome::Probability => p,
                    Outcome::Label => f64::from(u8::from(draws.label_uniform(r) < p)),
                }
            })
            .collect::<Vec<_>>()
    })
    .concat()
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Derives an independent seed per interventional sample (splitmix64).
fn derived_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Observational draws plus their outcomes, reused across variables.
struct Baseline {
    draws: NoiseDraws,
    outcomes: Vec<f64>,
}

impl Baseline {
    fn new(scm: &Scm, n: usize, seed: u64, opts: &CedOptions) -> Result<Self, BenchError> {
        let draws = scm.draw_noise(n, seed, opts.exec)?;
        let outcomes = outcomes(scm, &draws, None, opts.outcome, opts.exec);
        Ok(Baseline { draws, outcomes })
    }

    fn estimate(&self, scm: &Scm, index: usize, alpha: f64, seed: u64, opts: &CedOptions) -> CedEstimate {
        let var = &scm.variables()[index];
        let shift = alpha * var.noise.variance().sqrt();
        let mut shifts = vec![0.0; scm.len()];
        shifts[index] = shift;
        let n = self.outcomes.len();
        let (ced, stderr) = match opts.pairing {
            Pairing::Common => {
                let treated = outcomes(scm, &self.draws, Some(&shifts), opts.outcome, opts.exec);
                let diffs: Vec<f64> =
                    treated.iter().zip(&self.outcomes).map(|(t, o)| (t - o) / alpha).collect();
                let (m, v) = mean_var(&diffs);
                (m, (v / n as f64).sqrt())
            }
            Pairing::Independent => {
                let draws = scm
                    .draw_noise(n, derived_seed(seed, index as u64), opts.exec)
                    .expect("n already checked");
                let treated = outcomes(scm, &draws, Some(&shifts), opts.outcome, opts.exec);
                let (mt, vt) = mean_var(&treated);
                let (mo, vo) = mean_var(&self.outcomes);
                ((mt - mo) / alpha, ((vt + vo) / n as f64).sqrt() / alpha)
            }
        };
        CedEstimate { variable: var.name.clone(), alpha, shift, ced, stderr, n, seed }
    }
}

/// CED of one variable with its Monte Carlo standard error.
pub fn ced(scm: &Scm, variable: &str, alpha: f64, n: usize, seed: u64, opts: CedOptions) -> Result<CedEstimate, BenchError> {
    check(alpha, n)?;
    let index = scm.require_index(variable)?;
    let base = Baseline::new(scm, n, seed, &opts)?;
    Ok(base.estimate(scm, index, alpha, seed, &opts))
}

/// CED for every variable, in topological order, sharing one
/// observational sample.
pub fn ced_table(scm: &Scm, alpha: f64, n: usize, seed: u64, opts: CedOptions) -> Result<CedReport, BenchError> {
    check(alpha, n)?;
    let base = Baseline::new(scm, n, seed, &opts)?;
    let inner = CedOptions { exec: Exec::Sequential, ..opts };
    let order = scm.order_indices();
    let estimates = opts.exec.map_slice(order, |&i| base.estimate(scm, i, alpha, seed, &inner));
    let rows = estimates
        .into_iter()
        .zip(order)
        .map(|(e, &i)| {
            let actionability = scm.variables()[i].actionability;
            CedRow {
                variable: e.variable,
                actionability,
                actionable: actionability == Actionability::Actionable,
                alpha,
                ced: e.ced,
                stderr: e.stderr,
            }
        })
        .collect();
    Ok(CedReport { alpha, n, seed, pairing: opts.pairing, outcome: opts.outcome, rows })
}
