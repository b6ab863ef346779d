//! Long-format observational/interventional samples for pair plots.

use std::fmt::Write as _;

use super::BenchError;
use crate::parallel::Exec;
use crate::scm::{format_float, Dataset, Scm};

/// Columns shown by default: the two treatments, the outcome, and two
/// variables that neither treatment affects.
pub const DEFAULT_PAIRPLOT_COLUMNS: [&str; 4] = ["A", "E", "I", "L"];

#[derive(Debug, Clone, PartialEq)]
pub enum PairplotColumns {
    Selected(Vec<String>),
    All,
}

impl Default for PairplotColumns {
    fn default() -> Self {
        PairplotColumns::Selected(DEFAULT_PAIRPLOT_COLUMNS.iter().map(|s| s.to_string()).collect())
    }
}

/// One sample per distribution, all sharing the same noise draws: first
/// `observational`, then `do_<V>` for each `(V, α)` shifting `V` by `α σ̂_V`.
pub fn pairplot_datasets(
    scm: &Scm,
    n: usize,
    seed: u64,
    interventions: &[(String, f64)],
) -> Result<Vec<(String, Dataset)>, BenchError> {
    let exec = Exec::default();
    let draws = scm.draw_noise(n, seed, exec)?;
    let mut out = vec![("observational".to_string(), scm.dataset_from_draws(&draws, None, seed, exec))];
    for (name, alpha) in interventions {
        if !(*alpha > 0.0 && alpha.is_finite()) {
            return Err(BenchError::InvalidAlpha(*alpha));
        }
        let i = scm.require_index(name)?;
        let mut shifts = vec![0.0; scm.len()];
        shifts[i] = alpha * scm.variables()[i].noise.variance().sqrt();
        out.push((format!("do_{name}"), scm.dataset_from_draws(&draws, Some(&shifts), seed, exec)));
    }
    Ok(out)
}

/// CSV with a seed-stamped comment line, then
/// `distribution,<columns…>,Y_prob`, one row per sample per distribution.
pub fn pairplot_export(
    scm: &Scm,
    n: usize,
    seed: u64,
    interventions: &[(String, f64)],
    columns: &PairplotColumns,
) -> Result<String, BenchError> {
    let sets = pairplot_datasets(scm, n, seed, interventions)?;
    let names: Vec<String> = match columns {
        PairplotColumns::All => sets[0].1.columns.clone(),
        PairplotColumns::Selected(c) => c.clone(),
    };
    let idx = names
        .iter()
        .map(|c| sets[0].1.column_index(c).ok_or_else(|| BenchError::UnknownColumn(c.clone())))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = String::new();
    let spec: Vec<String> = interventions.iter().map(|(v, a)| format!("{v}:{a}")).collect();
    let _ = writeln!(out, "# seed={seed} n={n} interventions={}", spec.join(";"));
    let _ = writeln!(out, "distribution,{},Y_prob", names.join(","));
    for (label, ds) in &sets {
        for r in 0..ds.len() {
            out.push_str(label);
            let row = ds.row(r);
            for &j in &idx {
                out.push(',');
                out.push_str(&format_float(row[j]));
            }
            out.push(',');
            out.push_str(&format_float(ds.y_prob[r]));
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::german_scm;

    #[test]
    fn layout() {
        let iv = vec![("E".to_string(), 1.0), ("I".to_string(), 1.0)];
        let csv = pairplot_export(&german_scm(), 3, 4, &iv, &PairplotColumns::default()).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "# seed=4 n=3 interventions=E:1;I:1");
        assert_eq!(lines[1], "distribution,A,E,I,L,Y_prob");
        assert_eq!(lines.len(), 2 + 9);
        assert!(lines[5].starts_with("do_E,"));
        let all = pairplot_export(&german_scm(), 2, 4, &iv, &PairplotColumns::All).unwrap();
        assert_eq!(all.lines().nth(1), Some("distribution,G,A,E,J,L,D,I,S,Y_prob"));
    }

    #[test]
    fn unknown_column() {
        let cols = PairplotColumns::Selected(vec!["Q".into()]);
        assert!(matches!(pairplot_export(&german_scm(), 2, 1, &[], &cols), Err(BenchError::UnknownColumn(_))));
    }
}
