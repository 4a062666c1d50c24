//! Live backend for OpenAI-compatible chat-completions endpoints. Every
//! call carries a timeout and a bounded retry count with exponential
//! backoff, so it can never block forever.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::backend::{BackendRequest, MessageRole, Reasoner};
use crate::error::BackendError;

pub const API_KEY_ENV: &str = "SOM_API_KEY";
pub const API_KEY_ENV_FALLBACK: &str = "OPENAI_API_KEY";
pub const ENDPOINT_ENV: &str = "SOM_BACKEND_URL";

#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    /// Full chat-completions URL, e.g. `https://api.openai.com/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub backoff_base: Duration,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        HttpBackendConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            timeout: Duration::from_secs(60),
            max_retries: 3,
            backoff_base: Duration::from_millis(250),
        }
    }
}

impl HttpBackendConfig {
    /// Apply the endpoint override from the environment, if set.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(url) = std::env::var(ENDPOINT_ENV) {
            if !url.is_empty() {
                self.endpoint = url;
            }
        }
        self
    }
}

/// Sleep durations between attempts: base * 2^attempt.
pub fn backoff_schedule(base: Duration, max_retries: u32) -> Vec<Duration> {
    (0..max_retries).map(|i| base * 2u32.pow(i)).collect()
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
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

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(HttpBackend { client, config })
    }

    pub fn config(&self) -> &HttpBackendConfig {
        &self.config
    }

    /// API keys come from the environment only, never from flags or config
    /// files.
    fn api_key() -> Option<String> {
        std::env::var(API_KEY_ENV)
            .or_else(|_| std::env::var(API_KEY_ENV_FALLBACK))
            .ok()
            .filter(|k| !k.is_empty())
    }

    fn attempt(&self, request: &BackendRequest) -> Result<String, String> {
        let messages: Vec<serde_json::Value> = request
            .messages
            .iter()
            .map(|m| {
                json!({
                    "role": match m.role {
                        MessageRole::System => "system",
                        MessageRole::User => "user",
                    },
                    "content": m.content,
                })
            })
            .collect();
        let body = json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let mut builder = self.client.post(&self.config.endpoint).json(&body);
        if let Some(key) = Self::api_key() {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| e.to_string())?;
        let status = response.status();
        if !status.is_success() {
            let text = response.text().unwrap_or_default();
            return Err(format!("HTTP {status}: {text}"));
        }
        let parsed: ChatResponse = response.json().map_err(|e| e.to_string())?;
        parsed
            .choices
            .first()
            .and_then(|c| c.message.content.clone())
            .ok_or_else(|| "response carried no choices".into())
    }
}

impl Reasoner for HttpBackend {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        request.validate()?;
        let schedule = backoff_schedule(self.config.backoff_base, self.config.max_retries);
        let mut last_error = String::new();
        for (attempt, delay) in std::iter::once(Duration::ZERO)
            .chain(schedule.into_iter())
            .enumerate()
        {
            if !delay.is_zero() {
                std::thread::sleep(delay);
            }
            match self.attempt(request) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    log::warn!("backend attempt {} failed: {e}", attempt + 1);
                    last_error = e;
                }
            }
        }
        Err(BackendError::Transport {
            attempts: self.config.max_retries + 1,
            message: last_error,
        })
    }

    fn name(&self) -> &str {
        &self.config.model
    }
}
