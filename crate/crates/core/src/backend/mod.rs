//! Uniform interface to text-generating reasoners: a deterministic scripted
//! implementation for tests and desk-scale runs, and a live HTTP client for
//! OpenAI-compatible chat-completions endpoints.

pub mod expr;
pub mod http;
pub mod prompts;
pub mod scripted;
pub mod similarity;

use serde::{Deserialize, Serialize};

use crate::error::BackendError;

pub use http::{HttpBackend, HttpBackendConfig};
pub use scripted::ScriptedBackend;
pub use similarity::{semantic_match, semantic_match_judged, similarity, JaccardMatcher};

/// What a request is for. Scripted rules filter on this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    Reflect,
    Extract,
    Match,
    Infer,
    Act,
}

impl Purpose {
    pub fn name(&self) -> &'static str {
        match self {
            Purpose::Reflect => "reflect",
            Purpose::Extract => "extract",
            Purpose::Match => "match",
            Purpose::Infer => "infer",
            Purpose::Act => "act",
        }
    }

    pub fn parse(text: &str) -> Option<Purpose> {
        match text {
            "reflect" => Some(Purpose::Reflect),
            "extract" => Some(Purpose::Extract),
            "match" => Some(Purpose::Match),
            "infer" => Some(Purpose::Infer),
            "act" => Some(Purpose::Act),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageRole {
    System,
    User,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Message {
    pub role: MessageRole,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: MessageRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: MessageRole::User,
            content: content.into(),
        }
    }
}

/// A single completion request.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendRequest {
    pub purpose: Purpose,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl BackendRequest {
    pub fn new(purpose: Purpose, messages: Vec<Message>) -> Self {
        BackendRequest {
            purpose,
            messages,
            temperature: 0.0,
            max_tokens: 512,
        }
    }

    pub fn user(purpose: Purpose, content: impl Into<String>) -> Self {
        Self::new(purpose, vec![Message::user(content)])
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !self.messages.iter().any(|m| m.role == MessageRole::User) {
            return Err(BackendError::EmptyRequest);
        }
        Ok(())
    }

    /// Canonical text the scripted backend matches rules against.
    pub fn rendered_input(&self) -> String {
        let mut out = format!("purpose: {}\n", self.purpose.name());
        for m in &self.messages {
            out.push_str(&m.content);
            out.push('\n');
        }
        out
    }
}

/// A text-generating reasoner. Implementations must be safe for concurrent
/// calls; callers impose ordering where the algorithm requires it.
pub trait Reasoner: Send + Sync {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError>;

    fn name(&self) -> &str {
        "backend"
    }
}

impl<T: Reasoner + ?Sized> Reasoner for std::sync::Arc<T> {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}
