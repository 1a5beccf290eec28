use thiserror::Error;

/// Errors raised by the library.
///
/// The variants fall in two families: usage errors (bad input, violated
/// preconditions, unknown names) and numerical failures (factorization,
/// degenerate constructions). [`Error::is_numerical`] tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("duplicate points at indices {first} and {second}")]
    DuplicatePoints { first: usize, second: usize },

    #[error("{0}")]
    Usage(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid resolution exhausted: {0}")]
    Resolution(String),

    #[error("kernel matrix factorization failed (lambda_min estimate {lambda_min:e}, q_X = {separation:e})")]
    Conditioning { lambda_min: f64, separation: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("rate fit failed: {0}")]
    Fit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Conditioning { .. } | Error::Degenerate(_) | Error::Fit(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
