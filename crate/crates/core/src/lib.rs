//! Multiscale majority algorithm for the symmetric and asymmetric binary
//! perceptron, interpolation paths between its outputs, and small-`n`
//! exhaustive tools for checking both.

pub mod error;
pub mod generate;
pub mod model;
pub mod oracle;
pub mod paths;
pub mod schedule;
pub mod solver;
pub mod spin;
pub mod stats;

pub use error::{Error, Result};
pub use generate::{sample_instance, sample_with_rows, GenConfig};
pub use model::{Instance, MarginReport, ModelKind};
pub use oracle::{cluster_census, enumerate_solutions, margin_census, ClusterCensus};
pub use paths::{
    local_path_first, local_path_second, verify_path, wide_web_path, LocalClusterParams, PathCursor, PathReport,
    PathSample,
};
pub use schedule::{psi, PsiVariant, Schedule};
pub use solver::{solve, SolveOutcome, StartPolicy};
pub use spin::{hamming, SpinVector};
pub use stats::{capacity_sbp, empirical_tail, TailSide};
