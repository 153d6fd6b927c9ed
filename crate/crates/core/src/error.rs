use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value or shape violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("step {step} is outside the schedule horizon 1..={horizon}")]
    OutOfHorizon { step: u64, horizon: u64 },

    /// A bound was evaluated outside the parameter range its theorem covers.
    #[error("bound precondition violated: {0}")]
    BoundPrecondition(String),

    #[error("policy {policy} emitted an invalid list at step {step}: {reason}")]
    InvalidList {
        policy: String,
        step: u64,
        reason: String,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
