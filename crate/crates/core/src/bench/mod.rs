//! German-Credit benchmark: fixture SCM, response times, CED experiment and
//! pair-plot data.

mod ced;
mod german;
mod pairplot;

use thiserror::Error;

use crate::scm::ScmError;

pub use ced::{ced, ced_table, CedEstimate, CedOptions, CedReport, CedRow, Outcome, Pairing};
pub use german::{demo_individual, german_scm, german_system, german_times, random_unfavorable_individual};
pub use pairplot::{pairplot_datasets, pairplot_export, PairplotColumns, DEFAULT_PAIRPLOT_COLUMNS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error("alpha must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
}
