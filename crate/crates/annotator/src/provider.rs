use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ProviderError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }
}

/// A chat-completion request: messages in, text out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub max_tokens: u32,
    /// `None` leaves the provider default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

impl ChatRequest {
    /// Hex SHA-256 of the request's JSON form, the transcript key.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("requests always serialize");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Anything that answers chat requests. Implementations must be usable from
/// several threads at once.
pub trait ChatProvider: Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for &P {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

/// Per-request model settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestSettings {
    pub model: String,
    pub max_tokens: u32,
    pub temperature: Option<f64>,
}

impl RequestSettings {
    pub const DEFAULT_MAX_TOKENS: u32 = 5;

    pub fn new(model: impl Into<String>) -> Self {
        Self { model: model.into(), max_tokens: Self::DEFAULT_MAX_TOKENS, temperature: None }
    }

    pub fn request(&self, prompt: String) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            messages: vec![Message::user(prompt)],
            max_tokens: self.max_tokens,
            temperature: self.temperature,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let s = RequestSettings::new("m");
        let a = s.request("hello".into());
        assert_eq!(a.hash(), s.request("hello".into()).hash());
        assert_ne!(a.hash(), s.request("hello!".into()).hash());
        assert_eq!(a.hash().len(), 64);
        assert_eq!(a.max_tokens, 5);
        assert!(!serde_json::to_string(&a).unwrap().contains("temperature"));
    }
}
