use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),

    #[error("invalid margins: {0}")]
    InvalidMargins(String),

    #[error("rounds exhausted: already at round {0}")]
    RoundsExhausted(usize),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("too large: n = {n} exceeds enumeration cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("empty input")]
    EmptyInput,
}

impl Error {
    /// Stable machine-readable name, used by the CLI on failure.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InfeasibleSchedule(_) => "InfeasibleSchedule",
            Error::InvalidMargins(_) => "InvalidMargins",
            Error::RoundsExhausted(_) => "RoundsExhausted",
            Error::OutOfRange(_) => "OutOfRange",
            Error::InvalidInput(_) => "InvalidInput",
            Error::TooLarge { .. } => "TooLarge",
            Error::EmptyInput => "EmptyInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
