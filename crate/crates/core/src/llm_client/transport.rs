use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use super::{ChatRequest, Transcript, TransportError};

static NETWORK_ATTEMPTS: AtomicU64 = AtomicU64::new(0);

/// Number of HTTP requests this process has attempted.
pub fn network_attempts() -> u64 {
    NETWORK_ATTEMPTS.load(Ordering::SeqCst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub text: String,
    pub prompt_tokens: Option<u32>,
    pub completion_tokens: Option<u32>,
}

impl Reply {
    /// Reply with whitespace-token estimates, for transports without usage data.
    pub fn estimated(req: &ChatRequest, text: String) -> Self {
        let prompt: usize = req.messages.iter().map(|m| m.content.split_whitespace().count()).sum();
        Self {
            prompt_tokens: Some(prompt as u32),
            completion_tokens: Some(text.split_whitespace().count() as u32),
            text,
        }
    }
}

pub trait Transport: Send {
    fn send(&mut self, req: &ChatRequest) -> Result<Reply, TransportError>;
}

/// Live transport over blocking HTTP.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(api_key: Option<String>) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| TransportError::Io(e.to_string()))?;
        Ok(Self { client, api_key })
    }
}

impl Transport for HttpTransport {
    fn send(&mut self, req: &ChatRequest) -> Result<Reply, TransportError> {
        NETWORK_ATTEMPTS.fetch_add(1, Ordering::SeqCst);
        let body = serde_json::to_vec(&req.wire_body()).map_err(|e| TransportError::Decode(e.to_string()))?;
        let mut builder = self
            .client
            .post(&req.endpoint)
            .timeout(Duration::from_secs_f64(req.timeout_secs))
            .header("content-type", "application/json")
            .body(body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let resp = builder.send().map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout
            } else {
                TransportError::Io(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| TransportError::Io(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(TransportError::Status { status, body: text });
        }
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| TransportError::Decode(e.to_string()))?;
        let content = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| TransportError::Decode("missing choices[0].message.content".into()))?;
        let usage = |k: &str| value["usage"][k].as_u64().map(|v| v as u32);
        Ok(Reply {
            text: content.to_string(),
            prompt_tokens: usage("prompt_tokens"),
            completion_tokens: usage("completion_tokens"),
        })
    }
}

/// Serves recorded responses keyed by request body. Requests recorded more
/// than once are answered in recording order.
pub struct ReplayTransport {
    responses: HashMap<String, VecDeque<Reply>>,
}

impl ReplayTransport {
    pub fn new(transcript: &Transcript) -> Self {
        let mut responses: HashMap<String, VecDeque<Reply>> = HashMap::new();
        for entry in transcript.entries() {
            if let Some(text) = &entry.response {
                responses.entry(entry.request.replay_key()).or_default().push_back(Reply {
                    text: text.clone(),
                    prompt_tokens: entry.prompt_tokens,
                    completion_tokens: entry.completion_tokens,
                });
            }
        }
        Self { responses }
    }

    pub fn remaining(&self) -> usize {
        self.responses.values().map(VecDeque::len).sum()
    }
}

impl Transport for ReplayTransport {
    fn send(&mut self, req: &ChatRequest) -> Result<Reply, TransportError> {
        self.responses
            .get_mut(&req.replay_key())
            .and_then(VecDeque::pop_front)
            .ok_or(TransportError::ReplayMismatch)
    }
}

type Responder = Box<dyn FnMut(&ChatRequest) -> Result<String, TransportError> + Send>;

/// Offline stand-in for a model endpoint: a fixed script of outcomes or a
/// responder closure.
pub struct ScriptedTransport {
    script: VecDeque<Result<String, TransportError>>,
    responder: Option<Responder>,
}

impl ScriptedTransport {
    pub fn new(script: Vec<Result<String, TransportError>>) -> Self {
        Self {
            script: script.into(),
            responder: None,
        }
    }

    pub fn from_fn(f: impl FnMut(&ChatRequest) -> Result<String, TransportError> + Send + 'static) -> Self {
        Self {
            script: VecDeque::new(),
            responder: Some(Box::new(f)),
        }
    }
}

impl Transport for ScriptedTransport {
    fn send(&mut self, req: &ChatRequest) -> Result<Reply, TransportError> {
        let outcome = match self.script.pop_front() {
            Some(outcome) => outcome,
            None => match &mut self.responder {
                Some(f) => f(req),
                None => Err(TransportError::Io("script exhausted".into())),
            },
        };
        outcome.map(|text| Reply::estimated(req, text))
    }
}
