use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("precondition failed before any run started: {0}")]
    Precondition(String),

    #[error(transparent)]
    Core(#[from] gradreg::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("unknown suite `{0}` (expected one of: {1})")]
    UnknownSuite(String, String),

    #[error("thread pool: {0}")]
    Pool(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
