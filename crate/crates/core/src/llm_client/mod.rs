//! Chat-completions transport for remote language and vision-language models.
//!
//! Requests use the common chat-completions body:
//!
//! ```json
//! {"model": "...", "messages": [{"role": "user", "content": "..."}], "temperature": 0.0}
//! ```
//!
//! Messages with image attachments switch `content` to the array form
//! (`{"type":"text"}` / `{"type":"image_url"}` parts with base64 data URLs).
//! The reply text is `choices[0].message.content`.
//!
//! Every attempt is appended to a [`Transcript`]. A transcript can be fed
//! back through [`ReplayTransport`] to reproduce a run without the network.

mod prompt;
mod reply;
mod transcript;
mod transport;

pub use prompt::{
    render_decision_prompt, render_template, PromptInputs, PromptMode, RequestTemplate, SectorText, Template,
    TEMPLATE_VERSION,
};
pub use reply::{parse_decision_reply, parse_json_reply, ParseStage, ParsedDecision};
pub use transcript::{Transcript, TranscriptEntry};
pub use transport::{network_attempts, HttpTransport, ReplayTransport, Reply, ScriptedTransport, Transport};

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENV_ENDPOINT: &str = "PANONAV_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "PANONAV_API_KEY";
pub const ENV_LLM_MODEL: &str = "PANONAV_LLM_MODEL";
pub const ENV_MLLM_MODEL: &str = "PANONAV_MLLM_MODEL";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("transport: {0}")]
    Io(String),
    #[error("undecodable response: {0}")]
    Decode(String),
    #[error("no recorded response matches request")]
    ReplayMismatch,
}

impl TransportError {
    pub fn is_retryable(&self) -> bool {
        match self {
            Self::Status { status, .. } => *status == 429 || *status >= 500,
            Self::Timeout | Self::Io(_) => true,
            Self::Decode(_) | Self::ReplayMismatch => false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("{error} (after {attempts} attempts)")]
    Transport { error: TransportError, attempts: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    /// Base64-encoded PNG images.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attachments: Vec<String>,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
            attachments: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub endpoint: String,
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub timeout_secs: f64,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), ClientError> {
        if !self.messages.iter().any(|m| m.role == Role::User) {
            return Err(ClientError::InvalidRequest("at least one user message is required".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(ClientError::InvalidRequest(format!("temperature {} < 0", self.temperature)));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(ClientError::InvalidRequest("timeout must be positive".into()));
        }
        Ok(())
    }

    /// Request body in chat-completions shape.
    pub fn wire_body(&self) -> serde_json::Value {
        let messages: Vec<serde_json::Value> = self
            .messages
            .iter()
            .map(|m| {
                if m.attachments.is_empty() {
                    serde_json::json!({"role": m.role, "content": m.content})
                } else {
                    let mut parts = vec![serde_json::json!({"type": "text", "text": m.content})];
                    parts.extend(m.attachments.iter().map(|b64| {
                        serde_json::json!({"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{b64}")}})
                    }));
                    serde_json::json!({"role": m.role, "content": parts})
                }
            })
            .collect();
        serde_json::json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
        })
    }

    /// Stable key identifying the request for replay.
    pub fn replay_key(&self) -> String {
        serde_json::to_string(&self.wire_body()).expect("request body serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            base_delay_ms: 250,
            max_delay_ms: 4000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        let ms = self.base_delay_ms.saturating_mul(1u64 << attempt.min(16));
        Duration::from_millis(ms.min(self.max_delay_ms))
    }
}

/// Retrying chat client that records every attempt.
pub struct LlmClient {
    transport: Box<dyn Transport>,
    retry: RetryPolicy,
    transcript: Transcript,
}

impl LlmClient {
    pub fn new(transport: Box<dyn Transport>, retry: RetryPolicy, transcript: Transcript) -> Self {
        Self {
            transport,
            retry,
            transcript,
        }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    pub fn complete(&mut self, req: &ChatRequest) -> Result<String, ClientError> {
        req.validate()?;
        let mut attempt = 0;
        loop {
            let result = self.transport.send(req);
            self.transcript.record(req, &result).map_err(|e| ClientError::Config(format!("transcript: {e}")))?;
            match result {
                Ok(reply) => return Ok(reply.text),
                Err(error) => {
                    if !error.is_retryable() || attempt >= self.retry.max_retries {
                        return Err(ClientError::Transport {
                            error,
                            attempts: attempt + 1,
                        });
                    }
                    log::warn!("retrying after transient error: {error}");
                    std::thread::sleep(self.retry.delay(attempt));
                    attempt += 1;
                }
            }
        }
    }
}

/// Endpoint and model settings resolved from explicit values or the
/// environment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EndpointConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub llm_model: String,
    pub mllm_model: String,
}

impl EndpointConfig {
    pub const DEFAULT_LLM_MODEL: &'static str = "deepseek-chat";
    pub const DEFAULT_MLLM_MODEL: &'static str = "qwen2.5-vl-72b-instruct";

    pub fn resolve(endpoint: Option<&str>, llm_model: Option<&str>, mllm_model: Option<&str>) -> Result<Self, ClientError> {
        let env = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let endpoint = endpoint
            .map(str::to_string)
            .or_else(|| env(ENV_ENDPOINT))
            .ok_or_else(|| ClientError::Config(format!("no endpoint configured (set {ENV_ENDPOINT})")))?;
        let llm_model = llm_model.map(str::to_string).or_else(|| env(ENV_LLM_MODEL)).unwrap_or_else(|| Self::DEFAULT_LLM_MODEL.into());
        let mllm_model = mllm_model
            .map(str::to_string)
            .or_else(|| env(ENV_MLLM_MODEL))
            .unwrap_or_else(|| Self::DEFAULT_MLLM_MODEL.into());
        Ok(Self {
            endpoint,
            api_key: env(ENV_API_KEY),
            llm_model,
            mllm_model,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request() -> ChatRequest {
        ChatRequest {
            endpoint: "http://127.0.0.1:9/v1/chat/completions".into(),
            model: "m".into(),
            messages: vec![ChatMessage::new(Role::System, "s"), ChatMessage::new(Role::User, "u")],
            temperature: 0.0,
            timeout_secs: 5.0,
        }
    }

    #[test]
    fn wire_body_shape() {
        let mut req = request();
        let body = req.wire_body();
        assert_eq!(body["messages"][1]["role"], "user");
        assert_eq!(body["messages"][1]["content"], "u");
        req.messages[1].attachments.push("AAAA".into());
        let body = req.wire_body();
        assert_eq!(body["messages"][1]["content"][1]["image_url"]["url"], "data:image/png;base64,AAAA");
    }

    #[test]
    fn request_validation() {
        let mut req = request();
        assert!(req.validate().is_ok());
        req.temperature = -0.1;
        assert!(req.validate().is_err());
        let mut req = request();
        req.messages.retain(|m| m.role != Role::User);
        assert!(req.validate().is_err());
    }

    #[test]
    fn retry_classification() {
        assert!(TransportError::Status { status: 500, body: String::new() }.is_retryable());
        assert!(TransportError::Status { status: 429, body: String::new() }.is_retryable());
        assert!(!TransportError::Status { status: 404, body: String::new() }.is_retryable());
        assert!(TransportError::Timeout.is_retryable());
        assert!(!TransportError::ReplayMismatch.is_retryable());
    }

    #[test]
    fn retries_then_succeeds() {
        let script = vec![
            Err(TransportError::Status { status: 500, body: "a".into() }),
            Err(TransportError::Status { status: 500, body: "b".into() }),
            Ok("fine".to_string()),
        ];
        let retry = RetryPolicy {
            base_delay_ms: 0,
            ..Default::default()
        };
        let mut client = LlmClient::new(Box::new(ScriptedTransport::new(script)), retry, Transcript::in_memory());
        assert_eq!(client.complete(&request()).unwrap(), "fine");
        assert_eq!(client.transcript().entries().len(), 3);
    }

    #[test]
    fn gives_up_after_two_retries() {
        let script = (0..4).map(|_| Err(TransportError::Timeout)).collect();
        let retry = RetryPolicy {
            base_delay_ms: 0,
            ..Default::default()
        };
        let mut client = LlmClient::new(Box::new(ScriptedTransport::new(script)), retry, Transcript::in_memory());
        let err = client.complete(&request()).unwrap_err();
        assert_eq!(
            err,
            ClientError::Transport {
                error: TransportError::Timeout,
                attempts: 3
            }
        );
    }

    #[test]
    fn client_errors_are_not_retried() {
        let script = vec![Err(TransportError::Status { status: 401, body: "no".into() }), Ok("x".into())];
        let mut client = LlmClient::new(Box::new(ScriptedTransport::new(script)), RetryPolicy::default(), Transcript::in_memory());
        assert!(matches!(client.complete(&request()), Err(ClientError::Transport { attempts: 1, .. })));
    }

    #[test]
    fn backoff_doubles() {
        let r = RetryPolicy::default();
        assert_eq!(r.delay(0), Duration::from_millis(250));
        assert_eq!(r.delay(1), Duration::from_millis(500));
        assert_eq!(r.delay(10), Duration::from_millis(4000));
    }
}
