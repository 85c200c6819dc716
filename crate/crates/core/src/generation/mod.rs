//! Running prompt bundles through a provider, with caching and provenance.

mod cache;
mod http;
mod provider;
mod run;

use std::io::{BufRead, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::content_hash;
use crate::prompting::{Method, PromptBundle, PromptError};
use crate::text::collapse_whitespace;

pub use cache::{CacheEntry, ResponseCache};
pub use http::{HttpProvider, RetryPolicy, API_KEY_ENV};
pub use provider::{mock_question, MockProvider, Provider};
pub use run::{
    read_questions, run_experiment, write_manifest, write_questions, ExperimentOutput, RecordFailure, RunManifest,
    RunOptions, DEFAULT_FAILURE_THRESHOLD, DEFAULT_MAX_IN_FLIGHT,
};

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("unexpected provider response: {0}")]
    Protocol(String),
    #[error("record {record_id}: {message}")]
    Content { record_id: String, message: String },
    #[error("{failed} of {total} records failed, above the allowed fraction {threshold}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        threshold: f64,
    },
    #[error("malformed questions file line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GenerationError {
    /// Errors that come from the provider rather than local data or config.
    pub fn is_provider_error(&self) -> bool {
        matches!(
            self,
            GenerationError::Transport { .. }
                | GenerationError::Http { .. }
                | GenerationError::Protocol(_)
                | GenerationError::Content { .. }
                | GenerationError::TooManyFailures { .. }
        )
    }
}

pub const DEFAULT_MODEL: &str = "gpt-4";
pub const DEFAULT_TEMPERATURE: f64 = 0.0;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub stop_marker: Option<String>,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            model_name: DEFAULT_MODEL.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            stop_marker: None,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GenerationError::InvalidParams(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(GenerationError::InvalidParams("max_output_tokens must be >= 1".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(GenerationError::InvalidParams("model name is empty".into()));
        }
        Ok(())
    }

    /// Hash of every field; part of the cache key.
    pub fn fingerprint(&self) -> String {
        let stop = match &self.stop_marker {
            Some(s) => format!("some:{s}"),
            None => "none".into(),
        };
        content_hash([
            self.model_name.clone(),
            format!("{:?}", self.temperature),
            self.max_output_tokens.to_string(),
            stop,
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQuestion {
    pub record_id: String,
    pub method: Method,
    pub question_text: String,
    pub prompt_hash: String,
    pub provider_id: String,
    pub template_id: String,
    pub timestamp: DateTime<Utc>,
    /// Not written to question files, so warm and cold runs serialize alike.
    #[serde(skip)]
    pub from_cache: bool,
}

impl GeneratedQuestion {
    #[doc(hidden)]
    pub fn for_test(record_id: &str, method: Method, text: &str) -> Self {
        GeneratedQuestion {
            record_id: record_id.into(),
            method,
            question_text: text.into(),
            prompt_hash: String::new(),
            provider_id: "test".into(),
            template_id: String::new(),
            timestamp: DateTime::<Utc>::UNIX_EPOCH,
            from_cache: false,
        }
    }
}

/// First non-empty line of a completion, minus any leading `Question:` label.
pub fn extract_question(completion: &str) -> Option<String> {
    let line = completion.lines().map(str::trim).find(|l| !l.is_empty())?;
    let text = match line.get(..9) {
        Some(head) if head.eq_ignore_ascii_case("question:") => &line[9..],
        _ => line,
    };
    let text = collapse_whitespace(text);
    (!text.is_empty()).then_some(text)
}

/// Generates one question, consulting the cache first when the provider allows.
pub fn generate(
    record_id: &str,
    bundle: &PromptBundle,
    params: &GenerationParams,
    provider: &dyn Provider,
    cache: Option<&ResponseCache>,
) -> Result<GeneratedQuestion, GenerationError> {
    let provider_id = provider.id();
    let cache = cache.filter(|_| provider.cacheable());
    let key = ResponseCache::key(&bundle.prompt_hash, params, &provider_id);
    let (raw, timestamp, from_cache) = match cache.and_then(|c| c.get(&key)) {
        Some(entry) => (entry.value, entry.created, true),
        None => {
            let raw = provider.complete(bundle, params)?;
            match cache {
                Some(c) => {
                    let entry = CacheEntry {
                        key: key.clone(),
                        value: raw,
                        created: Utc::now(),
                    };
                    c.put(&entry)?;
                    (entry.value, entry.created, false)
                }
                None => (raw, provider.timestamp(), false),
            }
        }
    };
    let question_text = extract_question(&raw).ok_or_else(|| GenerationError::Content {
        record_id: record_id.to_string(),
        message: "provider returned a blank completion".into(),
    })?;
    Ok(GeneratedQuestion {
        record_id: record_id.to_string(),
        method: bundle.method,
        question_text,
        prompt_hash: bundle.prompt_hash.clone(),
        provider_id,
        template_id: bundle.template_id.clone(),
        timestamp,
        from_cache,
    })
}

/// Serializes questions as one JSON object per line.
pub fn write_questions_to<W: Write>(questions: &[GeneratedQuestion], mut out: W) -> std::io::Result<()> {
    for q in questions {
        serde_json::to_writer(&mut out, q)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_questions_from<R: BufRead>(input: R) -> Result<Vec<GeneratedQuestion>, GenerationError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let q: GeneratedQuestion = serde_json::from_str(&line).map_err(|e| GenerationError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(q);
    }
    Ok(out)
}
