use std::path::PathBuf;

use crate::preprocess::ReductionReport;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller passed an argument outside the operation's domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A documented precondition on a structured input was violated.
    #[error("contract violated: {0}")]
    Contract(String),

    /// Randomness reduction did not find an acceptable multiset in time.
    #[error("randomness reduction failed after {} attempt(s): max wrong rate {}", .0.attempts, .0.max_wrong_rate)]
    ReductionFailed(Box<ReductionReport>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
