use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the landing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// One or more parameters violate their documented ranges.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    /// An operation was called outside its domain (bad region, too few passes, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An internal invariant of the pipeline does not hold. Indicates a bug upstream.
    #[error("pipeline inconsistency: {0}")]
    Inconsistent(String),

    #[error("parse error in {path} at byte {offset}: {message}")]
    Parse {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("png error on {path}: {message}")]
    Png { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn inconsistent(msg: impl Into<String>) -> Self {
        Error::Inconsistent(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Accumulates configuration violations so they can be reported together.
#[derive(Debug, Default)]
pub(crate) struct Violations(Vec<String>);

impl Violations {
    pub fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(msg());
        }
    }

    pub fn extend(&mut self, other: Result<()>) {
        match other {
            Ok(()) => {}
            Err(Error::Config(v)) => self.0.extend(v),
            Err(e) => self.0.push(e.to_string()),
        }
    }

    pub fn into_result(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(self.0))
        }
    }
}
