//! HTTP client for a hosted glossing model.
//!
//! Requests use the text-generation-inference JSON shape:
//! `{"inputs": <prompt>, "parameters": {"max_new_tokens": N, ...}}`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::glosser::PromptRecord;

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: usize },
    #[error("endpoint returned {status}: {body}")]
    RemoteError { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("transport error: {0}")]
    Transport(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout: Duration,
    /// Additional attempts after the first failure.
    pub retries: usize,
    pub max_new_tokens: usize,
    /// Sent as `Authorization: Bearer <token>`.
    pub auth_token: Option<String>,
    /// First backoff delay; doubled after every failed attempt.
    pub backoff: Duration,
    /// Maximum requests in flight for [`RemoteClient::gloss_all`].
    pub concurrency: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(30),
            retries: 3,
            max_new_tokens: 1024,
            auth_token: None,
            backoff: Duration::from_millis(500),
            concurrency: 4,
        }
    }
}

/// Pulls the generated text out of a response body.
pub trait ResponseExtractor: Send + Sync {
    fn extract(&self, body: &Value) -> Option<String>;
}

/// Accepts `[{"generated_text": ..}]`, `{"generated_text": ..}` or a bare string.
#[derive(Debug, Clone, Copy, Default)]
pub struct GeneratedText;

impl ResponseExtractor for GeneratedText {
    fn extract(&self, body: &Value) -> Option<String> {
        match body {
            Value::String(s) => Some(s.clone()),
            Value::Array(items) => items.first().and_then(|v| self.extract(v)),
            Value::Object(map) => map.get("generated_text").and_then(Value::as_str).map(str::to_string),
            _ => None,
        }
    }
}

pub struct RemoteClient {
    config: RemoteConfig,
    client: Client,
    extractor: Box<dyn ResponseExtractor>,
}

enum Attempt {
    Done(String),
    Retry(RemoteError),
    Fail(RemoteError),
}

/// Removes an echoed prompt from the start of the generated text.
pub fn strip_prompt_echo<'a>(generated: &'a str, prompt: &str) -> &'a str {
    let rest = generated.strip_prefix(prompt).or_else(|| generated.strip_prefix(prompt.trim_end()));
    rest.unwrap_or(generated).trim()
}

impl RemoteClient {
    pub fn new(config: RemoteConfig) -> Result<Self, RemoteError> {
        Self::with_extractor(config, Box::new(GeneratedText))
    }

    pub fn with_extractor(config: RemoteConfig, extractor: Box<dyn ResponseExtractor>) -> Result<Self, RemoteError> {
        let client = Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| RemoteError::Transport(e.to_string()))?;
        Ok(RemoteClient { config, client, extractor })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn attempt(&self, prompt: &str) -> Attempt {
        let body = json!({
            "inputs": prompt,
            "parameters": { "max_new_tokens": self.config.max_new_tokens },
        });
        let mut request = self.client.post(&self.config.endpoint).json(&body);
        if let Some(token) = &self.config.auth_token {
            request = request.bearer_auth(token);
        }
        let response = match request.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Attempt::Retry(RemoteError::Timeout { attempts: 1 }),
            Err(e) if e.is_connect() || e.is_request() => return Attempt::Retry(RemoteError::Transport(e.to_string())),
            Err(e) => return Attempt::Fail(RemoteError::Transport(e.to_string())),
        };
        let status = response.status();
        let text = match response.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Attempt::Retry(RemoteError::Timeout { attempts: 1 }),
            Err(e) => return Attempt::Retry(RemoteError::Transport(e.to_string())),
        };
        if !status.is_success() {
            let err = RemoteError::RemoteError { status: status.as_u16(), body: text };
            let transient = status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS;
            return if transient { Attempt::Retry(err) } else { Attempt::Fail(err) };
        }
        let value: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return Attempt::Fail(RemoteError::MalformedResponse(e.to_string())),
        };
        match self.extractor.extract(&value) {
            Some(generated) => Attempt::Done(strip_prompt_echo(&generated, prompt).to_string()),
            None => Attempt::Fail(RemoteError::MalformedResponse(text)),
        }
    }

    /// Sends one prompt, retrying transient failures with exponential backoff.
    pub fn request_gloss(&self, prompt: &str) -> Result<String, RemoteError> {
        let attempts = self.config.retries + 1;
        let mut delay = self.config.backoff;
        let mut last = None;
        for attempt in 1..=attempts {
            match self.attempt(prompt) {
                Attempt::Done(gloss) => return Ok(gloss),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) => {
                    debug!("attempt {attempt}/{attempts} failed: {e}");
                    last = Some(e);
                    if attempt < attempts {
                        thread::sleep(delay);
                        delay = delay.saturating_mul(2);
                    }
                }
            }
        }
        Err(match last {
            Some(RemoteError::Timeout { .. }) => RemoteError::Timeout { attempts },
            Some(e) => e,
            None => RemoteError::Transport("no attempt was made".into()),
        })
    }

    /// Glosses every prompt with at most `concurrency` requests in flight.
    /// Results come back in input order.
    pub fn gloss_all(&self, prompts: &[PromptRecord]) -> Vec<(String, Result<String, RemoteError>)> {
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<Result<String, RemoteError>>>> =
            Mutex::new((0..prompts.len()).map(|_| None).collect());
        let workers = self.config.concurrency.clamp(1, prompts.len().max(1));
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(record) = prompts.get(i) else { break };
                    let result = self.request_gloss(&record.prompt);
                    if let Err(e) = &result {
                        warn!("{}: {e}", record.example_id);
                    }
                    results.lock().expect("results lock")[i] = Some(result);
                });
            }
        });
        let results = results.into_inner().expect("results lock");
        prompts
            .iter()
            .zip(results)
            .map(|(p, r)| (p.example_id.clone(), r.expect("every prompt is answered")))
            .collect()
    }
}
