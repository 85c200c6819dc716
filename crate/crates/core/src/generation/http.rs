use std::fmt;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use super::{GenerationError, GenerationParams, Provider};
use crate::prompting::PromptBundle;

/// Environment variable holding the bearer token. Never read from config.
pub const API_KEY_ENV: &str = "AQG_API_KEY";

const BODY_EXCERPT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// total attempts, including the first
    pub max_attempts: u32,
    /// delay before the second attempt; doubles after each retry
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt.saturating_sub(1))
    }
}

/// Chat-completions style endpoint.
pub struct HttpProvider {
    endpoint: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpProvider")
            .field("endpoint", &self.endpoint)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("retry", &self.retry)
            .finish()
    }
}

fn truncate(text: &str) -> String {
    match text.char_indices().nth(BODY_EXCERPT) {
        Some((i, _)) => format!("{}...", &text[..i]),
        None => text.to_string(),
    }
}

enum Attempt {
    Done(String),
    Retry(GenerationError),
    Fail(GenerationError),
}

impl HttpProvider {
    /// Reads the API key from the environment, if set.
    pub fn new(endpoint: impl Into<String>) -> Self {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty());
        Self::with_key(endpoint, key)
    }

    pub fn with_key(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        HttpProvider {
            endpoint: endpoint.into(),
            api_key,
            retry: RetryPolicy::default(),
            agent,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn request_body(bundle: &PromptBundle, params: &GenerationParams) -> Value {
        let mut body = json!({
            "model": params.model_name,
            "messages": [{"role": "user", "content": bundle.rendered_text}],
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        });
        if let Some(stop) = &params.stop_marker {
            body["stop"] = json!([stop]);
        }
        body
    }

    fn attempt(&self, body: &Value, attempt: u32) -> Attempt {
        let mut req = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let payload = serde_json::to_vec(body).expect("json value serializes");
        let mut resp = match req.send(&payload[..]) {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Retry(GenerationError::Transport {
                    attempts: attempt,
                    message: e.to_string(),
                })
            }
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => {
                return Attempt::Retry(GenerationError::Transport {
                    attempts: attempt,
                    message: e.to_string(),
                })
            }
        };
        if (200..300).contains(&status) {
            return match parse_completion(&text) {
                Ok(content) => Attempt::Done(content),
                Err(e) => Attempt::Fail(e),
            };
        }
        let err = GenerationError::Http {
            status,
            body: truncate(&text),
        };
        if status == 429 || status >= 500 {
            Attempt::Retry(err)
        } else {
            Attempt::Fail(err)
        }
    }
}

/// Pulls the completion text out of a chat-completions response.
fn parse_completion(text: &str) -> Result<String, GenerationError> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| GenerationError::Protocol(format!("response is not JSON: {e}")))?;
    let choice = &v["choices"][0];
    choice["message"]["content"]
        .as_str()
        .or_else(|| choice["text"].as_str())
        .map(str::to_string)
        .ok_or_else(|| GenerationError::Protocol(format!("no completion text in {}", truncate(text))))
}

impl Provider for HttpProvider {
    fn id(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn complete(&self, bundle: &PromptBundle, params: &GenerationParams) -> Result<String, GenerationError> {
        let body = Self::request_body(bundle, params);
        let attempts = self.retry.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match self.attempt(&body, attempt) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) if attempt >= attempts => return Err(e),
                Attempt::Retry(e) => {
                    let wait = self.retry.delay(attempt);
                    log::warn!("attempt {attempt} failed ({e}); retrying in {wait:?}");
                    thread::sleep(wait);
                    attempt += 1;
                }
            }
        }
    }
}
