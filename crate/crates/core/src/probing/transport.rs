use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ModelRef;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// Chat-completion request body. Serializes to exactly these five fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: f64,
}

impl ChatRequest {
    /// Builds a request; an empty system prompt is omitted.
    pub fn new(
        model: &ModelRef,
        system: &str,
        user: &str,
        temperature: f64,
        max_tokens: u32,
    ) -> Self {
        let mut messages = Vec::with_capacity(2);
        if !system.is_empty() {
            messages.push(ChatMessage {
                role: "system".into(),
                content: system.into(),
            });
        }
        messages.push(ChatMessage {
            role: "user".into(),
            content: user.into(),
        });
        Self {
            model: model.model.clone(),
            messages,
            temperature,
            max_tokens,
            top_p: model.top_p,
        }
    }

    pub fn system(&self) -> Option<&str> {
        self.messages
            .iter()
            .find(|m| m.role == "system")
            .map(|m| m.content.as_str())
    }

    pub fn user(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}

/// Per-request metadata that is not part of the wire payload.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RequestContext {
    pub sample_index: u32,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TransportError {
    #[error("authentication failed (HTTP {status}): {body}")]
    Auth { status: u16, body: String },
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("request rejected (HTTP {status}): {body}")]
    Permanent { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    Decode(String),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
}

impl TransportError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, TransportError::Transient(_))
    }
}

/// Something that can answer chat-completion requests.
pub trait ChatTransport: Send + Sync {
    fn complete(
        &self,
        model: &ModelRef,
        req: &ChatRequest,
        ctx: RequestContext,
    ) -> Result<String, TransportError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 4,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << attempt.min(16))
    }
}

/// Sends with exponential backoff on transient errors. Returns the reply
/// and the number of retries used.
pub fn complete_with_retry(
    transport: &dyn ChatTransport,
    model: &ModelRef,
    req: &ChatRequest,
    ctx: RequestContext,
    policy: RetryPolicy,
) -> Result<(String, u32), TransportError> {
    let mut attempt = 0;
    loop {
        match transport.complete(model, req, ctx) {
            Ok(text) => return Ok((text, attempt)),
            Err(e) if e.is_retryable() => {
                if attempt >= policy.max_retries {
                    return Err(TransportError::Exhausted {
                        attempts: attempt + 1,
                        last: e.to_string(),
                    });
                }
                std::thread::sleep(policy.delay(attempt));
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Blocking HTTP client for chat-completion endpoints.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        Ok(Self { client })
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

impl ChatTransport for HttpTransport {
    fn complete(
        &self,
        model: &ModelRef,
        req: &ChatRequest,
        _ctx: RequestContext,
    ) -> Result<String, TransportError> {
        let mut builder = self.client.post(&model.url).json(req);
        if let Some(key) = &model.api_key {
            builder = builder.bearer_auth(key);
        }
        let resp = builder
            .send()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .text()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(TransportError::Auth { status, body }),
            429 | 500..=599 => {
                return Err(TransportError::Transient(format!("HTTP {status}: {body}")))
            }
            _ => return Err(TransportError::Permanent { status, body }),
        }
        let parsed: Completion =
            serde_json::from_str(&body).map_err(|e| TransportError::Decode(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| TransportError::Decode("no choices in response".into()))
    }
}
