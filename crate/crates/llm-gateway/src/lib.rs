//! Pluggable chat-completion client with live, deterministic-mock, and
//! record/replay backends.
//!
//! A [`Gateway`] hands out one [`ChatSession`] per match; within a match all
//! calls are strictly sequential (prompt chaining needs ordered context),
//! while sessions for different matches may run concurrently. Every call can
//! be appended to a JSON-lines call log via [`RecordingSession`], which is
//! what record/replay and the replay audit are built on.

mod live;
mod log;
pub mod mock;
mod replay;

pub use live::LiveGateway;
pub use log::{load_call_log, CallLog};
pub use mock::MockGateway;
pub use replay::ReplayGateway;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("credential rejected by endpoint: {0}")]
    Auth(String),
    #[error("replay log exhausted for match '{match_key}' at call #{seq}")]
    ReplayExhausted { match_key: String, seq: u64 },
    #[error("replay digest mismatch for match '{match_key}' at call #{seq}")]
    ReplayMismatch { match_key: String, seq: u64 },
    #[error("mock policy has no rule for {turn} turns")]
    PolicyGap { turn: String },
    #[error("call log I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// One chat-completion request. The first message is always the system
/// prompt; `temperature` defaults to 0 for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
    pub max_retries: u32,
}

impl CompletionRequest {
    pub fn new(model_id: impl Into<String>, messages: Vec<ChatMessage>) -> Self {
        CompletionRequest {
            model_id: model_id.into(),
            temperature: 0.0,
            messages,
            max_retries: 3,
        }
    }

    /// The request shape every backend expects: a leading system message and
    /// no empty contents.
    pub fn is_well_formed(&self) -> bool {
        matches!(self.messages.first(), Some(m) if m.role == Role::System)
            && self.messages.iter().all(|m| !m.content.is_empty())
    }
}

/// Stable content digest of a request: SHA-256 over the canonical JSON of
/// (model id, temperature, messages). Replay matches calls by this digest.
pub fn request_digest(request: &CompletionRequest) -> String {
    #[derive(Serialize)]
    struct Canonical<'a> {
        model_id: &'a str,
        temperature: f64,
        messages: &'a [ChatMessage],
    }
    let canonical = Canonical {
        model_id: &request.model_id,
        temperature: request.temperature,
        messages: &request.messages,
    };
    let json = serde_json::to_string(&canonical).expect("request serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// A successful completion: the assistant text and which attempt produced it
/// (1-based; >1 means transient transport failures were retried).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub attempt: u32,
}

/// One persisted gateway call, one JSON object per line in the call log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub match_key: String,
    pub seq: u64,
    pub digest: String,
    pub response: String,
    pub latency_ms: u64,
    pub attempt: u32,
}

/// Sequential chat interface for a single match.
pub trait ChatSession: Send {
    fn complete(&mut self, request: &CompletionRequest) -> Result<Completion, GatewayError>;
}

/// Backend factory, safe to share across concurrently running matches.
pub trait Gateway: Send + Sync {
    fn session(&self, match_key: &str) -> Box<dyn ChatSession>;
}

/// Wraps a session so every successful call is appended to the call log,
/// preserving per-match ordering via a sequence counter. In deterministic
/// mode the wall-clock latency field is zeroed.
pub struct RecordingSession {
    inner: Box<dyn ChatSession>,
    log: CallLog,
    match_key: String,
    seq: u64,
    deterministic: bool,
}

impl RecordingSession {
    pub fn new(
        inner: Box<dyn ChatSession>,
        log: CallLog,
        match_key: impl Into<String>,
        deterministic: bool,
    ) -> Self {
        RecordingSession {
            inner,
            log,
            match_key: match_key.into(),
            seq: 0,
            deterministic,
        }
    }
}

impl ChatSession for RecordingSession {
    fn complete(&mut self, request: &CompletionRequest) -> Result<Completion, GatewayError> {
        debug_assert!(request.is_well_formed(), "malformed request: {request:?}");
        let started = std::time::Instant::now();
        let completion = self.inner.complete(request)?;
        let latency_ms = if self.deterministic {
            0
        } else {
            started.elapsed().as_millis() as u64
        };
        self.log.append(&CallRecord {
            match_key: self.match_key.clone(),
            seq: self.seq,
            digest: request_digest(request),
            response: completion.text.clone(),
            latency_ms,
            attempt: completion.attempt,
        })?;
        self.seq += 1;
        Ok(completion)
    }
}
