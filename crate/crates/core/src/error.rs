use std::fmt;
use std::path::PathBuf;

use crate::io::manifest::Finding;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("json error in {path}: {message}")]
    Json { path: PathBuf, message: String },

    #[error("manifest validation failed with {} finding(s)", .0.len())]
    Validation(Vec<Finding>),

    #[error("config error: {0}")]
    Config(String),

    #[error("arpa parse error at line {line}: {message}")]
    Arpa { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("wav error in {path}: {message}")]
    Wav { path: PathBuf, message: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Undefined(#[from] Undefined),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn undefined(reason: impl Into<String>) -> Self {
        Error::Undefined(Undefined::new(reason))
    }
}

/// A score that cannot be computed for an input, e.g. too few voiced
/// frames or an infeasible alignment. Such scores are excluded from
/// speaker aggregation rather than treated as failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Undefined {
    pub reason: String,
}

impl Undefined {
    pub fn new(reason: impl Into<String>) -> Self {
        Self {
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "undefined score: {}", self.reason)
    }
}

impl std::error::Error for Undefined {}
