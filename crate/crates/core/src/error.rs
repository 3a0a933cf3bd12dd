use thiserror::Error;

use crate::mesh::SpaceKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cells per axis must be at least 1")]
    ZeroCells,
    #[error("degenerate box: max {max:?} must exceed min {min:?} componentwise")]
    DegenerateBox { min: [f64; 3], max: [f64; 3] },
    #[error("polynomial degree must be at least 1, got {0}")]
    InvalidDegree(usize),
    #[error("GLL root finding did not converge for degree {0}")]
    QuadratureNotConverged(usize),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("field of kind {got:?} where {expected:?} was required")]
    KindMismatch { expected: SpaceKind, got: SpaceKind },
    #[error("coefficient vector has length {got}, space has {expected} DOFs")]
    LengthMismatch { expected: usize, got: usize },
    #[error("sparse factorization failed at {context}: {reason}")]
    Factorization { context: String, reason: String },
    #[error("non-finite value in solution at {context}")]
    NonFinite { context: String },
    #[error(
        "spectrum sample count {sample_n} too small: need at least {min} (2 K N) to resolve the polynomial content"
    )]
    SpectrumUndersampled { sample_n: usize, min: usize },
    #[error("{context}: {what} is {value:e}, above the accepted {limit:e}")]
    SolverAccuracy {
        context: String,
        what: &'static str,
        value: f64,
        limit: f64,
    },
    #[error("invalid run parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
