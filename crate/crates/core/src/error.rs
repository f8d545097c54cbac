use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input shape mismatch: {what} (expected {expected}, got {got})")]
    Shape { what: &'static str, expected: usize, got: usize },

    #[error("Hilbert-space dimension {dim} exceeds the configured cap {cap}")]
    Capacity { dim: usize, cap: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("non-finite local energy at configuration {sigma:?}")]
    NonFiniteLocalEnergy { sigma: Vec<i8> },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("regularized matrix is not positive definite (min eigenvalue of S = {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("variational state is orthogonal to the target; reseed the initial parameters")]
    DegenerateGradient,

    #[error("{stage} stage: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True when the failure is an overflow or NaN rather than a breakdown of a
    /// factorization or bad input.
    pub fn is_non_finite(&self) -> bool {
        match self {
            Error::NonFinite(_) | Error::NonFiniteLocalEnergy { .. } => true,
            Error::Stage { source, .. } => source.is_non_finite(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
