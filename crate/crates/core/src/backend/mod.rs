//! Dispatching prompt plans to a chat backend.

mod cache;
mod mock;
mod remote;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use cache::{CacheRecord, CacheRequest, ResponseCache};
pub use mock::mock_respond;
pub use remote::{InFlightLimit, RemoteBackend};

use crate::error::BackendError;
use crate::prompt::{PromptPlan, StrategyId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mock" => Ok(BackendKind::Mock),
            "remote" => Ok(BackendKind::Remote),
            other => Err(format!("unknown backend `{other}` (expected mock or remote)")),
        }
    }
}

pub const MOCK_MODEL: &str = "string-equiv-mock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    #[serde(rename = "backend")]
    pub kind: BackendKind,
    /// Base URL of an OpenAI-compatible server, e.g. `https://api.openai.com/v1`.
    pub endpoint: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// First backoff delay; doubles on every retry.
    pub retry_backoff_ms: u64,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub max_in_flight: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint: None,
            model: MOCK_MODEL.into(),
            temperature: 0.0,
            timeout_secs: 120,
            max_retries: 3,
            retry_backoff_ms: 1000,
            api_key_env: "OPENAI_API_KEY".into(),
            max_in_flight: 2,
        }
    }
}

impl BackendConfig {
    pub fn mock() -> Self {
        Self::default()
    }

    pub fn remote(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Remote,
            endpoint: Some(endpoint.into()),
            model: model.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(BackendError::Config("temperature must be >= 0".into()));
        }
        if self.kind == BackendKind::Remote {
            if self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
                return Err(BackendError::Config("remote backend needs an endpoint".into()));
            }
            if self.model.trim().is_empty() {
                return Err(BackendError::Config("remote backend needs a model name".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

/// A chat-completion service. Implementations must be usable from several threads.
pub trait ChatBackend: Send + Sync {
    fn chat(&self, conversation: &[ChatMessage]) -> Result<String, BackendError>;
    fn model(&self) -> &str;
    fn temperature(&self) -> f64;
}

/// Backend answering with [`mock_respond`]. Counts calls so cache behaviour can be observed.
#[derive(Debug, Default)]
pub struct MockBackend {
    calls: AtomicUsize,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ChatBackend for MockBackend {
    fn chat(&self, conversation: &[ChatMessage]) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let user: Vec<&str> = conversation
            .iter()
            .filter(|m| m.role == "user")
            .map(|m| m.content.as_str())
            .collect();
        Ok(mock_respond(&user))
    }

    fn model(&self) -> &str {
        MOCK_MODEL
    }

    fn temperature(&self) -> f64 {
        0.0
    }
}

pub fn build_backend(cfg: &BackendConfig) -> Result<Arc<dyn ChatBackend>, BackendError> {
    cfg.validate()?;
    Ok(match cfg.kind {
        BackendKind::Mock => Arc::new(MockBackend::new()),
        BackendKind::Remote => Arc::new(RemoteBackend::new(cfg)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub request: String,
    pub response: String,
    pub latency_ms: u64,
    pub cache_hit: bool,
    pub cache_key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub strategy: StrategyId,
    pub pair: (String, String),
    pub model: String,
    pub turns: Vec<Turn>,
}

impl Transcript {
    pub fn all_cached(&self) -> bool {
        self.turns.iter().all(|t| t.cache_hit)
    }

    pub fn responses(&self) -> impl Iterator<Item = &str> {
        self.turns.iter().map(|t| t.response.as_str())
    }
}

/// Run a plan with the backend described by `cfg`.
pub fn complete(plan: &PromptPlan, cfg: &BackendConfig, cache: Option<&ResponseCache>) -> Result<Transcript, BackendError> {
    let backend = build_backend(cfg)?;
    complete_with(plan, backend.as_ref(), cache)
}

/// Send the plan's messages in order within one conversation, one reply per message.
pub fn complete_with(
    plan: &PromptPlan,
    backend: &dyn ChatBackend,
    cache: Option<&ResponseCache>,
) -> Result<Transcript, BackendError> {
    complete_run(plan, backend, cache, 0)
}

/// Like [`complete_with`], but `run` separates the cache entries of repeated runs.
pub fn complete_run(
    plan: &PromptPlan,
    backend: &dyn ChatBackend,
    cache: Option<&ResponseCache>,
    run: u32,
) -> Result<Transcript, BackendError> {
    let mut conversation: Vec<ChatMessage> = Vec::with_capacity(plan.messages.len() * 2);
    let mut turns = Vec::with_capacity(plan.expects_responses);
    for message in &plan.messages {
        conversation.push(ChatMessage::user(message.text.clone()));
        let request = CacheRequest {
            model: backend.model().to_string(),
            temperature: backend.temperature(),
            messages: conversation.clone(),
            run,
        };
        let key = request.key();
        let (response, cache_hit, latency_ms) = match cache.and_then(|c| c.get(&key)) {
            Some(hit) => (hit, true, 0),
            None => {
                let start = Instant::now();
                let response = backend.chat(&conversation)?;
                let latency = start.elapsed().as_millis() as u64;
                if let Some(c) = cache {
                    c.put(&request, &response)?;
                }
                (response, false, latency)
            }
        };
        conversation.push(ChatMessage::assistant(response.clone()));
        turns.push(Turn {
            request: message.text.clone(),
            response,
            latency_ms,
            cache_hit,
            cache_key: key,
        });
    }
    Ok(Transcript {
        strategy: plan.strategy,
        pair: plan.pair.clone(),
        model: backend.model().to_string(),
        turns,
    })
}
