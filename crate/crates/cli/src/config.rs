//! `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are skipped. Command-line flags
//! override file values, which override built-in defaults. The API key is
//! never read from here; it comes only from the environment.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Every key the file may set.
pub const KEYS: &[(&str, &str)] = &[
    ("train", "training split, one JSON record per line"),
    ("test", "test split, one JSON record per line"),
    ("corpus", "directory of .txt files to index on the fly"),
    ("index", "index file written by `aqg index`"),
    ("method", "baseline | icl | rag | hybrid"),
    ("icl_shots", "few-shot examples for icl"),
    ("retrieval_k", "retrieved documents for rag and hybrid"),
    ("hybrid_shots", "few-shot examples for hybrid"),
    ("seed", "seed for example selection and sampling"),
    ("selection", "stratified | similarity"),
    ("endpoint", "chat-completions URL"),
    ("model", "model name sent to the endpoint"),
    ("mock", "true to use the offline mock provider"),
    ("cache_dir", "response cache directory"),
    ("out_dir", "root directory for every output"),
    ("label", "run label used in output file names"),
    ("template", "prompt template file"),
    ("token_budget", "prompt token limit"),
    ("temperature", "sampling temperature"),
    ("max_tokens", "output token limit"),
    ("max_in_flight", "concurrent provider calls"),
    ("failure_threshold", "largest tolerated fraction of failed records"),
    ("alpha", "significance level for stars"),
    ("baselines", "comma-separated baseline run labels"),
    ("models", "comma-separated row order for reports"),
    ("ratings", "human ratings CSV"),
    ("samples", "records in the qualitative sample sheet"),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::usage(format!(
                    "config line {}: expected `key = value`",
                    i + 1
                )));
            };
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            if !KEYS.iter().any(|(k, _)| *k == key) {
                return Err(CliError::usage(format!("config line {}: unknown key `{key}`", i + 1)));
            }
            let value = value.trim().trim_matches('"').to_string();
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::usage(format!("config line {}: `{key}` set twice", i + 1)));
            }
        }
        Ok(FileConfig { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("reading config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else the parsed file value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::usage(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn pick_or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    /// Repeated flag values if any, else a comma-separated file value.
    pub fn pick_list(&self, flag: Vec<String>, key: &str) -> Vec<String> {
        if !flag.is_empty() {
            return flag;
        }
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn pick_flag(&self, flag: bool, key: &str) -> CliResult<bool> {
        if flag {
            return Ok(true);
        }
        Ok(self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}
