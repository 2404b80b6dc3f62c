use std::path::PathBuf;

use thiserror::Error;

use crate::natural::Natural;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid factor budget: {0}")]
    InvalidBudget(String),

    #[error("factorization budget exhausted with composite cofactor {remaining_composite}")]
    FactorFailure { remaining_composite: Natural },

    #[error("input has {digits} decimal digits, budget allows at most {max_digits}")]
    OversizeInput { digits: u32, max_digits: u32 },

    #[error("start {start} committed after {last_committed}")]
    CommitOrderViolation { start: Natural, last_committed: Natural },

    #[error("start {0} has not been committed")]
    UnknownStart(Natural),

    #[error("not an aliquot cycle: {0}")]
    NotACycle(String),

    #[error("digit bound {requested} exceeds the archive bound {available}")]
    BoundExceeded { requested: u32, available: u32 },

    #[error("invalid campaign configuration: {0}")]
    Config(String),

    #[error("checkpoint was written for configuration {expected}, got {found}")]
    DigestMismatch { expected: String, found: String },

    #[error("corrupt checkpoint {path}: {reason}")]
    CorruptCheckpoint { path: PathBuf, reason: String },

    #[error("corrupt archive {path}: {reason}")]
    CorruptArchive { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
