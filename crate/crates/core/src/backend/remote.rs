//! OpenAI-style `chat/completions` client.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use tracing::{debug, warn};

use super::{BackendConfig, ChatBackend, ChatMessage};
use crate::error::BackendError;

/// Counting gate bounding concurrent requests.
#[derive(Debug)]
pub struct InFlightLimit {
    slots: Mutex<usize>,
    freed: Condvar,
}

impl InFlightLimit {
    pub fn new(limit: usize) -> Self {
        Self {
            slots: Mutex::new(limit.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> InFlightGuard<'_> {
        let mut slots = self.slots.lock().expect("limit lock poisoned");
        while *slots == 0 {
            slots = self.freed.wait(slots).expect("limit lock poisoned");
        }
        *slots -= 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlightLimit);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.slots.lock().expect("limit lock poisoned") += 1;
        self.0.freed.notify_one();
    }
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

pub struct RemoteBackend {
    url: String,
    model: String,
    temperature: f64,
    api_key: Option<String>,
    max_retries: u32,
    backoff: Duration,
    client: reqwest::blocking::Client,
    limit: InFlightLimit,
}

impl RemoteBackend {
    pub fn new(cfg: &BackendConfig) -> Result<Self, BackendError> {
        cfg.validate()?;
        let endpoint = cfg.endpoint.as_deref().unwrap_or_default().trim_end_matches('/');
        let url = if endpoint.ends_with("/chat/completions") {
            endpoint.to_string()
        } else {
            format!("{endpoint}/chat/completions")
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self {
            url,
            model: cfg.model.clone(),
            temperature: cfg.temperature,
            api_key: std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty()),
            max_retries: cfg.max_retries,
            backoff: Duration::from_millis(cfg.retry_backoff_ms),
            client,
            limit: InFlightLimit::new(cfg.max_in_flight),
        })
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, Attempt> {
        let mut req = self.client.post(&self.url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Attempt::Retry(BackendError::Network {
            attempts: 0,
            message: e.to_string(),
        }))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Attempt::Retry(BackendError::Network {
            attempts: 0,
            message: e.to_string(),
        }))?;
        if !status.is_success() {
            let err = BackendError::Refused {
                status: status.as_u16(),
                body: text,
            };
            return Err(if status.is_server_error() || status.as_u16() == 429 {
                Attempt::Retry(err)
            } else {
                Attempt::Fatal(err)
            });
        }
        let parsed: CompletionResponse = serde_json::from_str(&text)
            .map_err(|e| Attempt::Fatal(BackendError::BadResponse(format!("{e}: {text}"))))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content.unwrap_or_default())
            .ok_or_else(|| Attempt::Fatal(BackendError::BadResponse("no choices".into())))
    }
}

enum Attempt {
    Retry(BackendError),
    Fatal(BackendError),
}

impl ChatBackend for RemoteBackend {
    fn chat(&self, conversation: &[ChatMessage]) -> Result<String, BackendError> {
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": conversation,
        });
        let _slot = self.limit.acquire();
        let attempts = self.max_retries + 1;
        let mut last = None;
        for attempt in 1..=attempts {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) => {
                    warn!(attempt, url = %self.url, error = %e, "chat request failed");
                    last = Some(e);
                    if attempt < attempts {
                        let delay = self.backoff * 2u32.saturating_pow(attempt - 1);
                        debug!(?delay, "backing off");
                        thread::sleep(delay);
                    }
                }
            }
        }
        Err(match last {
            Some(BackendError::Network { message, .. }) => BackendError::Network { attempts, message },
            Some(other) => other,
            None => BackendError::Network {
                attempts,
                message: "no attempt made".into(),
            },
        })
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }
}
