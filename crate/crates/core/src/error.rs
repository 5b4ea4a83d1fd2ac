use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data failed validation (non-finite samples, wrong lengths).
    #[error("data validation: {0}")]
    Data(String),

    /// A configuration value is out of range or inconsistent.
    #[error("configuration: {0}")]
    Config(String),

    /// An operation was called with operands of the wrong rank or order.
    #[error("usage: {0}")]
    Usage(String),

    /// A documented precondition on field contents does not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The integrator produced non-finite or runaway values.
    #[error("numerical instability at t = {t}: {reason}")]
    Instability { t: f64, reason: String },

    /// A checkpoint container is malformed.
    #[error("container validation ({path}): {reason}")]
    Container { path: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the data or physics rather than by how
    /// the API was called.
    pub fn is_domain(&self) -> bool {
        !matches!(self, Error::Usage(_))
    }
}
