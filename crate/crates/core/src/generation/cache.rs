use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::GenerationParams;
use crate::hashing::content_hash;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    /// raw provider response
    pub value: String,
    pub created: DateTime<Utc>,
}

/// Content-addressed response store under `<root>/gen/<2 hex>/<key>`.
///
/// Reads are lock-free; writes go through a temp file and rename, one at a
/// time.
#[derive(Debug)]
pub struct ResponseCache {
    root: PathBuf,
    write_lock: Mutex<()>,
}

impl ResponseCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ResponseCache {
            root: root.into(),
            write_lock: Mutex::new(()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn key(prompt_hash: &str, params: &GenerationParams, provider_id: &str) -> String {
        content_hash([prompt_hash, params.fingerprint().as_str(), provider_id])
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.root.join("gen").join(&key[..2.min(key.len())]).join(key)
    }

    /// Unreadable or mismatched entries count as misses.
    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        let path = self.path_for(key);
        let raw = fs::read_to_string(&path).ok()?;
        match serde_json::from_str::<CacheEntry>(&raw) {
            Ok(entry) if entry.key == key => Some(entry),
            _ => {
                log::warn!("ignoring corrupt cache entry {}", path.display());
                None
            }
        }
    }

    pub fn put(&self, entry: &CacheEntry) -> std::io::Result<()> {
        let path = self.path_for(&entry.key);
        let dir = path.parent().expect("cache path has a parent");
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(".{}.tmp", entry.key));
        {
            let mut f = fs::File::create(&tmp)?;
            serde_json::to_writer(&mut f, entry)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)
    }
}
