use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("selection produced no samples: {0}")]
    EmptyResult(String),

    #[error("cannot curate balanced set: {0}")]
    Curation(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("feature dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite training loss in epoch {epoch}")]
    NumericalFailure { epoch: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("selection rate undefined: maximum accuracy is zero")]
    UndefinedRatio,

    #[error("group `{0}` not present in records")]
    AbsentGroup(String),

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("malformed file {}: {message}", path.display())]
    Malformed { path: PathBuf, message: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
