use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("invalid field model: {0}")]
    InvalidModel(String),

    #[error("field evaluated at its singular point (r = 0)")]
    SingularPoint,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate probe geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid probe configuration: {0}")]
    InvalidProbe(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no signal: {0}")]
    NoSignal(String),

    #[error("bad fit: residual {residual:.3e} exceeds threshold {threshold:.3e}")]
    BadFit { residual: f64, threshold: f64 },

    #[error("singular mixing matrix: {0}")]
    SingularMixing(String),

    #[error("invalid polar scan: {0}")]
    InvalidScan(String),

    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the user's configuration rather than by a
    /// failure while running an experiment.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation { .. } | Error::Parse { .. })
    }
}
