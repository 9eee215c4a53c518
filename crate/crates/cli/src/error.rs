use thiserror::Error;

use crate::config::ConfigError;
use crate::io::IoError;

/// Command failure, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input, configuration or files (exit 1).
    #[error("{0}")]
    Validation(String),
    /// The computation itself failed (exit 2).
    #[error("{0}")]
    Computation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Computation(_) => 2,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<cdi_core::Error> for CliError {
    fn from(e: cdi_core::Error) -> Self {
        use cdi_core::Error as E;
        match e {
            E::InvalidCorpus(_) | E::InfeasibleBudget(_) | E::InvalidInput(_) | E::MissingAnnotation { .. } => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Computation(other.to_string()),
        }
    }
}

impl From<cdi_annotator::TranscriptError> for CliError {
    fn from(e: cdi_annotator::TranscriptError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<cdi_annotator::ProviderError> for CliError {
    fn from(e: cdi_annotator::ProviderError) -> Self {
        CliError::Computation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
