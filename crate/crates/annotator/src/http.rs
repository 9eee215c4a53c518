use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::ProviderError;
use crate::provider::{ChatProvider, ChatRequest, RequestSettings};

/// Live endpoint configuration. The credential itself is read from the
/// environment variable named here and never stored in the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    /// Full URL of an OpenAI-style chat-completions endpoint.
    pub endpoint: String,
    #[serde(flatten)]
    pub request: RequestSettings,
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    pub api_key_env: String,
}

impl ProviderConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            request: RequestSettings::new(model),
            retries: 3,
            backoff_ms: 500,
            timeout_secs: 60,
            api_key_env: "CDI_API_KEY".into(),
        }
    }
}

struct ApiKey(String);

impl fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiKey(<redacted>)")
    }
}

/// Blocking HTTP client for OpenAI-style chat completions.
#[derive(Debug)]
pub struct HttpProvider {
    config: ProviderConfig,
    key: ApiKey,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

impl HttpProvider {
    pub fn from_env(config: ProviderConfig) -> Result<Self, ProviderError> {
        let key = std::env::var(&config.api_key_env).map_err(|_| ProviderError::Credentials {
            message: format!("environment variable {} is not set", config.api_key_env),
        })?;
        Ok(Self::with_key(config, key))
    }

    pub fn with_key(config: ProviderConfig, key: String) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Self { config, key: ApiKey(key), agent }
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn attempt(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let mut response = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", format!("Bearer {}", self.key.0))
            .send_json(request)
            .map_err(|e| match e {
                ureq::Error::StatusCode(status) => ProviderError::Status { status },
                other => ProviderError::Transport { message: other.to_string() },
            })?;
        let body: CompletionResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Malformed { message: e.to_string() })?;
        body.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::Malformed { message: "response has no message content".into() })
    }
}

impl ChatProvider for HttpProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut attempt = 0;
        loop {
            match self.attempt(request) {
                Err(e) if e.is_retryable() && attempt < self.config.retries => {
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_never_shows_in_debug() {
        let p = HttpProvider::with_key(ProviderConfig::new("http://localhost:9/v1/chat/completions", "m"), "sk-secret".into());
        assert!(!format!("{p:?}").contains("sk-secret"));
    }

    #[test]
    fn missing_credentials() {
        let mut cfg = ProviderConfig::new("http://localhost:9", "m");
        cfg.api_key_env = "CDI_TEST_SURELY_UNSET_KEY".into();
        assert!(matches!(HttpProvider::from_env(cfg), Err(ProviderError::Credentials { .. })));
    }

    #[test]
    fn unreachable_endpoint_is_a_transport_error() {
        let mut cfg = ProviderConfig::new("http://127.0.0.1:9/v1/chat/completions", "m");
        cfg.retries = 1;
        cfg.backoff_ms = 1;
        cfg.timeout_secs = 2;
        let p = HttpProvider::with_key(cfg.clone(), "k".into());
        let err = p.complete(&cfg.request.request("hi".into())).unwrap_err();
        assert!(matches!(err, ProviderError::Transport { .. }), "{err:?}");
    }
}
