use thiserror::Error;

/// Command failures, split by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad command line, missing or malformed input: exit status 1.
    #[error("{0}")]
    Invalid(String),
    /// The inputs were fine but the run failed: exit status 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<voidscan::Error> for CliError {
    fn from(e: voidscan::Error) -> Self {
        if e.is_validation() {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
