use herdlab::rbm::RbmError;
use herdlab::sensing::{DatasetError, SensingError};
use herdlab::{FormatError, ModelError};
use thiserror::Error;

/// Process exit code for a configuration problem.
pub const EXIT_CONFIG: i32 = 2;
/// Process exit code for a failure while running.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Rbm(#[from] RbmError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Sensing(SensingError::InvalidConfig(_)) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}
