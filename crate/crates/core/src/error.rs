use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degree overflow: {what} needs degree {needed} but only {available} is available")]
    DegreeOverflow {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("relaxation order {order} is below the minimal order {n_min}")]
    OrderTooLow { order: usize, n_min: usize },

    #[error("instance must be preprocessed first")]
    NotPreprocessed,

    #[error("solver did not return an optimal solution: {0}")]
    SolverStatus(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("malformed conic problem: {0}")]
    MalformedProblem(String),

    #[error("constraint {index} has degree {degree} > 2; the order bound does not apply")]
    ConstraintDegreeTooHigh { index: usize, degree: usize },

    #[error("no feasible sample found among {samples} points")]
    NoFeasibleSample { samples: usize },

    #[error("instance file error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
