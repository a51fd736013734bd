use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const CONFIG: u8 = 2;
    pub const SOLVER: u8 = 3;
    pub const NON_STABILIZED: u8 = 4;
    pub const IO: u8 = 5;
    pub const CHECK_FAILED: u8 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] su2_butterfly::Error),
    #[error("census did not stabilize: {0}")]
    NonStabilized(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Solver(su2_butterfly::Error::NonStabilized { .. }) => exit::NON_STABILIZED,
            CliError::Solver(
                su2_butterfly::Error::InvalidSpin(_)
                | su2_butterfly::Error::InvalidParameter { .. },
            ) => exit::CONFIG,
            CliError::Solver(_) => exit::SOLVER,
            CliError::NonStabilized(_) => exit::NON_STABILIZED,
            CliError::Io { .. } => exit::IO,
            CliError::CheckFailed(_) => exit::CHECK_FAILED,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
