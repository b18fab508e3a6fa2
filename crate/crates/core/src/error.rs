use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: unknown label id {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: duplicate document for source_id {source_id:?} in language {lang:?}")]
    DuplicateDocument {
        line: usize,
        source_id: String,
        lang: String,
    },
    #[error("invalid vocabulary: {0}")]
    Vocabulary(String),
    #[error("insufficient source groups: need {needed}, have {available}")]
    InsufficientGroups { needed: usize, available: usize },
    #[error("test group {source_id:?} has no version in language {lang:?}")]
    MissingLanguageVersion { source_id: String, lang: String },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("kendall tau undefined: {0}")]
    TauUndefined(String),
    #[error("translation failed: {0}")]
    Translation(String),
    #[error("model format error: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
