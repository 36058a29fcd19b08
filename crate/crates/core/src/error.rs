use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value is out of range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Cholesky factorization met a non-positive pivot.
    #[error("matrix is not positive definite: pivot {index} = {pivot:e}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// A sparse factorization produced a (numerically) zero pivot.
    #[error("singular system: pivot {index} = {pivot:e} (scale {scale:e}, {size} unknowns)")]
    SingularSystem {
        index: usize,
        pivot: f64,
        scale: f64,
        size: usize,
    },

    /// An eigenvalue iteration failed or produced non-finite output.
    #[error("eigendecomposition failed for {size}x{size} matrix (norm {norm:e})")]
    EigenFailure { size: usize, norm: f64 },

    /// Matrix or vector shapes disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;
