use thiserror::Error;

/// Errors produced by the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a mathematical operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value is invalid. `path` is the dotted field path.
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    /// A caller broke an API contract (stepping after done, non-monotone time, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Linear algebra failure inside the filter (non-SPD covariance, singular innovation).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A trace or dataset failed an integrity check.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
