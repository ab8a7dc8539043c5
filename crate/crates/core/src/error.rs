use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("pairing matrix is singular")]
    SingularPairing,
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("{what}: requested {requested} exceeds budget {limit}")]
    BudgetExceeded {
        what: &'static str,
        requested: u128,
        limit: u128,
    },
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("POVM elements do not sum to the identity (deviation {0:e})")]
    IncompletePovm(f64),
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("wrong dimension: {0}")]
    WrongDimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;
