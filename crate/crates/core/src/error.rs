use num_complex::Complex64 as C64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension signature mismatch: {0}")]
    Signature(String),

    #[error("factor index {index} out of range for a signature with {len} factors")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("model validation failed: {0}")]
    ModelValidation(String),

    #[error("dimension {dim} exceeds the configured limit {limit}; {hint}")]
    DimensionLimit { dim: usize, limit: usize, hint: String },

    #[error("step size underflow at t = {attained} (target {target})")]
    Stiffness { attained: f64, target: f64 },

    #[error("Krylov propagation failed at t = {attained}: {reason}")]
    Breakdown { attained: f64, reason: String },

    #[error("truncation not converged: {0}")]
    NonConvergence(String),

    #[error("quadrature accuracy {estimate:.3e} above tolerance {tol:.3e}")]
    Accuracy { estimate: f64, tol: f64 },

    #[error("Hankel matrix has numerical rank {rank} below requested order {order}; retry with order <= {rank}")]
    RankDeficient { rank: usize, order: usize },

    #[error("non-physical fit term {index}: weight {weight}, exponent {exponent}: {reason}")]
    NonPhysicalFit {
        index: usize,
        weight: C64,
        exponent: C64,
        reason: String,
    },

    #[error("frequency window misses spectral mass {tail_mass:.3e} (relative), tolerance {tol:.3e}")]
    Coverage { tail_mass: f64, tol: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
