use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing, malformed or outside its admissible range.
    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("invalid transition: incumbent and candidate intensity are both {0}")]
    InvalidTransition(f64),

    #[error("cell {0} has no network neighbours; conforming fraction is undefined")]
    UndefinedFraction(usize),

    #[error("output variance is zero; Sobol indices are undefined")]
    DegenerateVariance,

    #[error("usage error: {0}")]
    Usage(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
