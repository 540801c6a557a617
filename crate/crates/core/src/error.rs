use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("class `{label}` has {count} sample(s); at least {required} are needed")]
    ClassTooSmall {
        label: String,
        count: usize,
        required: usize,
    },

    #[error("feature mask selects no features")]
    EmptyMask,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration `{key}`: {message}")]
    Config { key: &'static str, message: String },

    #[error("non-positive fitness {value} at index {index}")]
    NonPositiveFitness { index: usize, value: f64 },

    #[error("malformed front file: {0}")]
    FrontFormat(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: &'static str, message: impl Into<String>) -> Self {
        Error::Config {
            key,
            message: message.into(),
        }
    }
}
