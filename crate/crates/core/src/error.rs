use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid interval [{a}, {b}]: need b > a")]
    InvalidInterval { a: f64, b: f64 },
    #[error("grid needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("grid points must be finite and strictly increasing (index {0})")]
    UnsortedGrid(usize),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("shape mismatch in {context}")]
    ShapeMismatch { context: String },
    #[error("target point {0} lies outside the source grid")]
    OutOfRange(f64),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cholesky factorization failed: matrix not positive definite even with jitter {jitter:e}")]
    CholeskyFailure { jitter: f64 },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("training diverged at epoch {epoch} (last finite loss {last_finite_loss:e})")]
    Divergence { epoch: usize, last_finite_loss: f64 },
    #[error("latent index {index} out of range for {layers} layers")]
    LatentIndexOutOfRange { index: usize, layers: usize },
    #[error("single-class data: classifier needs both labels present")]
    SingleClass,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn shape_err(context: &str) -> Error {
    Error::ShapeMismatch { context: String::from(context) }
}
