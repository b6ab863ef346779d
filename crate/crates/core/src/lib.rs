//! Time-aware causal algorithmic recourse.
//!
//! * [`scm`]: linear additive-noise SCMs (sampling, interventions,
//!   counterfactuals, exact variances).
//! * [`graph`]: the induced DAG with coefficients and response times, and
//!   its path algebra (longest path, path-weight sums, total effects).
//! * [`cost`]: ℓp feature costs and the time-aware composite cost.
//! * [`recourse`]: the minimal-cost recourse solver and a grid oracle.
//! * [`bench`]: the German-Credit benchmark and the CED experiment.

pub mod api;
pub mod bench;
pub mod cost;
pub mod file;
pub mod graph;
pub mod parallel;
pub mod recourse;
pub mod scm;

pub use cost::{CostBreakdown, CostSpec, Normalization, TimeVariant};
pub use file::ScmFile;
pub use graph::{CausalDag, ResponseTimes, Weighting};
pub use parallel::Exec;
pub use recourse::{CausalSystem, RecourseProblem, RecourseSolution};
pub use scm::{Action, Actionability, Instance, Scm, TARGET_NODE};
