use std::path::PathBuf;

use thiserror::Error;

use crate::io::MatrixError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Matrix(#[from] MatrixError),

    #[error("solver error: {0}")]
    Solver(#[from] bsi_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 config, 3 I/O, 4 solver.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Matrix(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
