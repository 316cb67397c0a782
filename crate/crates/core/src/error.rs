use thiserror::Error;

use crate::system::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {0} is not a grid point")]
    UnknownTime(f64),

    #[error("random variable `{0}` is not defined on this system")]
    UnknownVariable(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid system:\n{0}")]
    InvalidSystem(ValidationReport),

    #[error("configuration count {n} exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("nonzero phases supplied for the transition matrix at time 0")]
    PhasesAtInitialTime,

    #[error("matrix is not doubly stochastic")]
    NotDoublyStochastic,

    #[error("matrix is not of the form [[x, 1-x], [1-x, x]]")]
    NotTwoByTwoDoublyStochastic,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input is not a partial isometry (defect {0:e})")]
    NotIsometric(f64),

    #[error("unitary completion failed: {kept} of {needed} extra columns survived")]
    CompletionFailed { kept: usize, needed: usize },
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
