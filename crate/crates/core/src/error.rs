use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("A0 diverges for Matern nu = {nu} (requires nu > 1/2)")]
    A0Diverges { nu: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("design points {first} and {second} are closer than {tolerance:e}")]
    DuplicatePoint {
        first: usize,
        second: usize,
        tolerance: f64,
    },

    #[error("point {index} lies outside the domain")]
    OutOfDomain { index: usize },

    #[error("correlation matrix numerically singular (n = {n}, last jitter {jitter:e})")]
    Singular { n: usize, jitter: f64 },

    #[error("objective returned a non-finite value at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("replication {replication} failed: {source}")]
    Replication {
        replication: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures that come from the numerics rather than from input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singular { .. } | Error::NonFiniteObjective { .. } => true,
            Error::Replication { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
