use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the laboratory. Every variant maps onto one of the CLI
/// exit codes through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("aliasing: frequency {frequency} is not below the anti-alias guard {guard} (N/4)")]
    Aliasing { frequency: f64, guard: f64 },

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("cell budget exceeded: {needed} cells requested, budget is {budget}")]
    Budget { needed: u128, budget: u64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 precondition, 3 resource, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget { .. } => 3,
            Error::Io { .. } | Error::Format { .. } => 4,
            _ => 2,
        }
    }
}
