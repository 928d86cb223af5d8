use std::path::PathBuf;

use sublinear::dsl::DslError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {pointer:?}: {reason}")]
    Config { pointer: String, reason: String },

    #[error("payoff error at {pointer:?}: {source}")]
    Payoff {
        pointer: String,
        #[source]
        source: DslError,
    },

    #[error(transparent)]
    Core(#[from] sublinear::Error),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(pointer: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            pointer: pointer.into(),
            reason: reason.into(),
        }
    }

    /// The JSON pointer into the config, when the error has one.
    pub fn pointer(&self) -> Option<&str> {
        match self {
            CliError::Config { pointer, .. } | CliError::Payoff { pointer, .. } => Some(pointer),
            CliError::Core(sublinear::Error::InvalidSpec { pointer, .. }) => Some(pointer),
            _ => None,
        }
    }
}
