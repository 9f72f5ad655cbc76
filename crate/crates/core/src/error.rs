use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A kernel was built with a nonpositive signal scale or lengthscale.
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    /// The regularized covariance matrix stayed non-positive-definite after
    /// the full jitter escalation.
    #[error("ill-conditioned model: Cholesky failed after jitter up to {max_jitter:e}")]
    IllConditioned { max_jitter: f64 },

    /// A point violated a domain precondition (wrong dimension or out of bounds).
    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// An inconsistent or incomplete configuration was supplied.
    #[error("configuration error: {0}")]
    Config(String),

    /// A benchmark name was not found in the registry.
    #[error("unknown benchmark: {0}")]
    UnknownBenchmark(String),

    /// File I/O failed; the path is included in the message.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A text record (config, CSV, serialized model) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
