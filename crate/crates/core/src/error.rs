use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("duplicate id `{id}` in {path}")]
    DuplicateId { id: String, path: PathBuf },
    #[error("id `{id}` present in {present} but missing from {missing}")]
    UnalignedId {
        id: String,
        present: PathBuf,
        missing: PathBuf,
    },
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("label outside {{0,1}}: `{value}` for id `{id}`")]
    InvalidLabel { id: String, value: String },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("projection size {k} must be smaller than input dimension {m}")]
    NotReducing { k: usize, m: usize },
    #[error("only one class present in labels")]
    SingleClass,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("empty pair set")]
    EmptyPairs,
    #[error("input has zero variance")]
    ZeroVariance,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
