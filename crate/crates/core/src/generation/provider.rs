use chrono::{DateTime, Utc};

use super::{GenerationError, GenerationParams};
use crate::prompting::PromptBundle;
use crate::text::tokenize;

/// Something that turns a rendered prompt into a raw completion.
pub trait Provider: Send + Sync {
    /// Stable identifier recorded in outputs and mixed into cache keys.
    fn id(&self) -> String;

    /// Whether responses should go through the response cache.
    fn cacheable(&self) -> bool {
        true
    }

    /// Timestamp for uncached responses.
    fn timestamp(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn complete(&self, bundle: &PromptBundle, params: &GenerationParams) -> Result<String, GenerationError>;
}

/// The deterministic stand-in question for a passage.
pub fn mock_question(passage: &str) -> String {
    let lead: Vec<String> = tokenize(passage).into_iter().take(4).collect();
    if lead.is_empty() {
        "What does the passage say?".into()
    } else {
        format!("What does the passage say about {}?", lead.join(" "))
    }
}

/// Offline provider: asks about the first four tokens of the target passage.
/// Outputs never change, so they bypass the cache and carry the epoch as
/// their timestamp.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockProvider;

impl Provider for MockProvider {
    fn id(&self) -> String {
        "mock".into()
    }

    fn cacheable(&self) -> bool {
        false
    }

    fn timestamp(&self) -> DateTime<Utc> {
        DateTime::<Utc>::UNIX_EPOCH
    }

    fn complete(&self, bundle: &PromptBundle, _: &GenerationParams) -> Result<String, GenerationError> {
        Ok(mock_question(&bundle.target_passage))
    }
}
