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

    #[error("{file}:{line}: malformed record: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },

    #[error("dangling {kind}: {from} references missing {to}")]
    Dangling {
        kind: &'static str,
        from: String,
        to: String,
    },

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("invalid record: {0}")]
    Invalid(String),

    #[error("no activity: investor {0} has no pledges")]
    NoActivity(String),

    #[error("topic model: {0}")]
    Topics(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("single-class training data: {0}")]
    SingleClass(String),

    #[error("model: {0}")]
    Model(String),

    #[error("evaluation: {0}")]
    Eval(String),

    #[error("statistics: {0}")]
    Stats(String),

    #[error("generator: {0}")]
    Generator(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{0} not found: {1}")]
    MissingInput(&'static str, PathBuf),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(file: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            file: file.to_string(),
            line,
            message: message.into(),
        }
    }
}
