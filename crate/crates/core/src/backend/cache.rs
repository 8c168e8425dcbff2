//! Content-addressed on-disk cache of chat responses.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::warn;

use super::ChatMessage;
use crate::error::BackendError;

/// One cached exchange, stored as `<key>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub request: CacheRequest,
    pub response: String,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
    /// Repetition index for best-of-N runs; omitted (and so key-neutral) for the first run.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub run: u32,
}

fn is_zero(n: &u32) -> bool {
    *n == 0
}

impl CacheRequest {
    /// SHA-256 over the canonical JSON encoding of the request.
    pub fn key(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, BackendError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)
            .map_err(|e| BackendError::Cache(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Cached response for `key`. Unreadable or inconsistent records count as misses.
    pub fn get(&self, key: &str) -> Option<String> {
        let path = self.path(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                warn!(path = %path.display(), error = %e, "cache entry unreadable, treating as miss");
                return None;
            }
        };
        match serde_json::from_slice::<CacheRecord>(&bytes) {
            Ok(rec) if rec.key == key => Some(rec.response),
            Ok(_) => {
                warn!(path = %path.display(), "cache entry key mismatch, treating as miss");
                None
            }
            Err(e) => {
                warn!(path = %path.display(), error = %e, "cache entry corrupt, treating as miss");
                None
            }
        }
    }

    /// Store a record atomically (write to a temporary file, then rename).
    pub fn put(&self, request: &CacheRequest, response: &str) -> Result<String, BackendError> {
        let key = request.key();
        let record = CacheRecord {
            key: key.clone(),
            request: request.clone(),
            response: response.to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let err = |e: std::io::Error| BackendError::Cache(format!("{}: {e}", self.dir.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(err)?;
        serde_json::to_writer_pretty(&mut tmp, &record)
            .map_err(|e| BackendError::Cache(e.to_string()))?;
        tmp.write_all(b"\n").map_err(err)?;
        tmp.persist(self.path(&key)).map_err(|e| err(e.error))?;
        Ok(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(text: &str, temperature: f64) -> CacheRequest {
        CacheRequest {
            model: "m".into(),
            temperature,
            messages: vec![ChatMessage::user(text)],
            run: 0,
        }
    }

    #[test]
    fn key_is_stable_and_discriminating() {
        assert_eq!(req("a", 0.0).key(), req("a", 0.0).key());
        assert_ne!(req("a", 0.0).key(), req("b", 0.0).key());
        assert_ne!(req("a", 0.0).key(), req("a", 0.7).key());
        assert_eq!(req("a", 0.0).key().len(), 64);
        let mut again = req("a", 0.0);
        again.run = 1;
        assert_ne!(again.key(), req("a", 0.0).key());
    }

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let r = req("hello", 0.0);
        assert_eq!(cache.get(&r.key()), None);
        let key = cache.put(&r, "world").unwrap();
        assert_eq!(cache.get(&key).as_deref(), Some("world"));
        fs::write(dir.path().join(format!("{key}.json")), b"{not json").unwrap();
        assert_eq!(cache.get(&key), None);
    }
}
