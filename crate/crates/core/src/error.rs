use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    /// Frequency outside the range where the cable model is valid.
    #[error("frequency {f_hz} Hz is outside the cable model validity range (0, {f_valid_max_hz}] Hz")]
    ModelValidity { f_hz: f64, f_valid_max_hz: f64 },

    /// Argument outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent link scenario (mode, operator count, allocation).
    #[error("scenario error: {0}")]
    Scenario(String),

    /// Malformed text input, with 1-based line number.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    /// A syntactically valid value that violates a constraint.
    #[error("invalid `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("{path}: {source}")]
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
}

impl SimError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        SimError::Domain(msg.into())
    }

    pub(crate) fn scenario(msg: impl Into<String>) -> Self {
        SimError::Scenario(msg.into())
    }

    pub(crate) fn validation(key: impl Into<String>, msg: impl Into<String>) -> Self {
        SimError::Validation {
            key: key.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's configuration or input files
    /// rather than by the computation itself.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            SimError::Parse { .. } | SimError::Validation { .. } | SimError::Csv { .. }
        )
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
