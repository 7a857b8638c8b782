use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("pairing error: {0}")]
    Pairing(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("stale input: expected fingerprint {expected}, found {found}")]
    Stale { expected: String, found: String },

    #[error("unknown {kind} {id}")]
    Unknown { kind: &'static str, id: String },

    #[error("out-of-order epoch: expected {expected}, got {got}")]
    EpochOrder { expected: usize, got: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
