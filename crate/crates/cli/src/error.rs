use std::path::PathBuf;

use nora_core::NoraError;
use thiserror::Error;

/// Failures grouped by exit code: 2 config, 3 I/O, 4 numerical.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

impl From<NoraError> for CliError {
    fn from(err: NoraError) -> Self {
        match err {
            NoraError::Shape(_) | NoraError::Argument(_) | NoraError::Config(_) | NoraError::Capacity(_) => {
                CliError::Config(err.to_string())
            }
            NoraError::Io { ref path, .. } => CliError::io(path.clone(), &err),
            NoraError::Format(_) | NoraError::Checksum { .. } => CliError::Io {
                path: PathBuf::new(),
                message: err.to_string(),
            },
            NoraError::Divergence { .. }
            | NoraError::Svd { .. }
            | NoraError::Infeasible { .. }
            | NoraError::NotBracketed { .. } => CliError::Numerical(err.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
