use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{function}: argument {value} is outside the domain ({expected})")]
    Domain {
        function: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error bound {error:e})"
    )]
    QuadratureNotConverged {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("integrand is not finite at z = {at:e}")]
    NonFiniteIntegrand { at: f64 },

    #[error("{what} = {value:e} lies outside [0, 1] beyond the quadrature error bound {error:e}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        error: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not Hermitian positive definite")]
    NotPositiveDefinite,

    #[error("sample too small: {found} values, at least {required} required")]
    SampleTooSmall { found: usize, required: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid sample at offset {offset}: {value}")]
    InvalidSample { offset: usize, value: f64 },

    #[error("malformed raster header {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("payload size mismatch for {path}: expected {expected} bytes, found {actual}")]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("invalid scene tiling: {0}")]
    InvalidTiling(String),

    #[error("{0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the failure comes from a numerical routine rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNotConverged { .. }
                | Error::NonFiniteIntegrand { .. }
                | Error::OutOfRange { .. }
        )
    }
}
