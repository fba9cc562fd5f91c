use thiserror::Error;

/// Errors produced by the library.
///
/// The variants are coarse on purpose: callers mostly need to know whether an
/// input was rejected (`Domain`, `Validation`, `Shape`) or whether a
/// computation broke down while running (`Simulation`, `Singular`, `NoAnomaly`).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("simulation diverged: non-finite field at step {step}")]
    Simulation { step: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("no anomaly found")]
    NoAnomaly,

    #[error("feature length {d} m is below the resolvable extent (intercept {intercept} m)")]
    BelowResolvable { d: f64, intercept: f64 },

    #[error("pipeline step {index} ({op}) failed: {source}")]
    Step {
        index: usize,
        op: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), reason: reason.into() }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True when the error is caused by bad input rather than by a failing run.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Domain(_) | Error::Validation { .. } | Error::Shape(_) => true,
            Error::Step { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
