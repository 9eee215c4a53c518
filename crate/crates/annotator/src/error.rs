use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("stage {stage} template lacks the {slot} slot")]
    MissingSlot { stage: u8, slot: &'static str },
    #[error("stage 2 template must request the probability only")]
    NoProbabilityRequest,
    #[error("invalid options: {0}")]
    Options(String),
}

/// Failure to obtain a reply from a chat provider.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderError {
    #[error("transport error: {message}")]
    Transport { message: String },
    #[error("provider answered with HTTP status {status}")]
    Status { status: u16 },
    #[error("malformed provider response: {message}")]
    Malformed { message: String },
    #[error("transcript has no reply for request {request_hash}")]
    NotInTranscript { request_hash: String },
    #[error("credentials unavailable: {message}")]
    Credentials { message: String },
}

impl ProviderError {
    /// Worth sending the same request again.
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Transport { .. } => true,
            ProviderError::Status { status } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Why one instance could not be annotated.
#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnnotateError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("no option letter in reply {reply:?}")]
    UnparseableLabel { reply: String },
    #[error("no probability in reply {reply:?}")]
    UnparseableConfidence { reply: String },
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("transcript I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("transcript line {line}: {message}")]
    Parse { line: usize, message: String },
}
