//! Error types shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input matrix fails the Hermitian symmetry check.
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e}, tolerance {tolerance:.3e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    /// A factorization pivot fell below the positive-definiteness threshold.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { pivot: f64, index: usize },

    /// A matrix that must have full column rank does not.
    #[error("rank deficient: {0}")]
    RankDeficient(String),

    /// An iterative routine failed to converge or an internal numerical
    /// guarantee was violated.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Caller-supplied data violates a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A closed-form expression was requested outside its validity regime.
    #[error("outside closed-form regime: {0}")]
    RegimeViolation(String),

    /// Unrecognized simulation preset name.
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    /// Underlying I/O failure (file formats, CSV output).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code bucket: 1 usage, 2 numerical/design, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::UnknownScenario(_) => 1,
            Error::NotHermitian { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::RankDeficient(_)
            | Error::NumericalFailure(_)
            | Error::RegimeViolation(_) => 2,
            Error::Io(_) => 3,
        }
    }
}
