//! File formats and the experiment runner behind the `perceptron` binary.

pub mod experiment;
pub mod io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] perceptron::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Machine-readable error name.
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.name(),
            CliError::Io { .. } => "Io",
            CliError::Parse { .. } => "Parse",
            CliError::Csv(_) => "Csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Worker count from `PERCEPTRON_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("PERCEPTRON_THREADS").ok()?.trim().parse().ok().filter(|&t: &usize| t > 0)
}
