use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NoraError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("container format error: {0}")]
    Format(String),

    #[error("container checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("solver diverged at iteration {iteration}: objective {objective}")]
    Divergence { iteration: usize, objective: f64 },

    #[error("singular value decomposition failed on a {rows}x{cols} matrix (max |entry| = {max_abs})")]
    Svd { rows: usize, cols: usize, max_abs: f64 },

    #[error("noise level {epsilon} is infeasible: residual at smallest lambda is {residual}")]
    Infeasible { epsilon: f64, residual: f64 },

    #[error("discrepancy search failed to bracket the target residual; trace (lambda, residual): {trace:?}")]
    NotBracketed { trace: Vec<(f64, f64)> },
}

impl NoraError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NoraError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, NoraError>;
