//! Content-addressed, write-once response cache.
//!
//! Layout: `{dir}/{first two hex chars}/{digest}.json`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use mipw_core::ChatMessage;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// SHA-256 over the canonical JSON of (model, top_p, messages).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CacheKey {
    pub digest: String,
}

#[derive(Serialize)]
struct KeyInputs<'a> {
    model: &'a str,
    top_p: f64,
    messages: &'a [ChatMessage],
}

impl CacheKey {
    pub fn new(model_id: &str, top_p: f64, messages: &[ChatMessage]) -> Self {
        let inputs = KeyInputs {
            model: model_id,
            top_p,
            messages,
        };
        let bytes = serde_json::to_vec(&inputs).expect("key inputs serialize");
        CacheKey {
            digest: hex::encode(Sha256::digest(&bytes)),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.digest
    }
}

impl std::fmt::Display for CacheKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.digest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub digest: String,
    pub model: String,
    pub top_p: f64,
    pub messages: Vec<ChatMessage>,
    pub text: String,
    pub finish_reason: String,
    /// Response body as received, when the backend had one.
    #[serde(default)]
    pub raw: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ResponseCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        let d = key.as_str();
        self.dir.join(&d[..2.min(d.len())]).join(format!("{d}.json"))
    }

    pub fn get(&self, key: &CacheKey) -> io::Result<Option<CacheEntry>> {
        let path = self.path_for(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        let entry: CacheEntry = serde_json::from_slice(&bytes).map_err(|e| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("{}: {e}", path.display()),
            )
        })?;
        Ok(Some(entry))
    }

    /// Writes the entry unless one already exists. Returns false when an
    /// earlier writer got there first; the existing file is left untouched.
    pub fn put(&self, key: &CacheKey, entry: &CacheEntry) -> io::Result<bool> {
        let path = self.path_for(key);
        if path.exists() {
            return Ok(false);
        }
        let parent = path.parent().expect("cache path has a parent");
        fs::create_dir_all(parent)?;
        let mut tmp = tempfile::NamedTempFile::new_in(parent)?;
        serde_json::to_writer_pretty(&mut tmp, entry)?;
        tmp.write_all(b"\n")?;
        tmp.as_file().sync_all()?;
        match tmp.persist_noclobber(&path) {
            Ok(_) => Ok(true),
            Err(e) if e.error.kind() == io::ErrorKind::AlreadyExists => Ok(false),
            Err(e) => Err(e.error),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mipw_core::Role;

    fn msgs(text: &str) -> Vec<ChatMessage> {
        vec![ChatMessage {
            role: Role::User,
            content: text.into(),
        }]
    }

    #[test]
    fn key_depends_on_every_input() {
        let base = CacheKey::new("m", 0.1, &msgs("a"));
        assert_eq!(base, CacheKey::new("m", 0.1, &msgs("a")));
        assert_ne!(base, CacheKey::new("n", 0.1, &msgs("a")));
        assert_ne!(base, CacheKey::new("m", 0.2, &msgs("a")));
        assert_ne!(base, CacheKey::new("m", 0.1, &msgs("b")));
        assert_eq!(base.as_str().len(), 64);
    }

    #[test]
    fn write_once() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        let key = CacheKey::new("m", 0.1, &msgs("a"));
        let mut entry = CacheEntry {
            digest: key.digest.clone(),
            model: "m".into(),
            top_p: 0.1,
            messages: msgs("a"),
            text: "first".into(),
            finish_reason: "stop".into(),
            raw: serde_json::Value::Null,
        };
        assert_eq!(cache.get(&key).unwrap(), None);
        assert!(cache.put(&key, &entry).unwrap());
        entry.text = "second".into();
        assert!(!cache.put(&key, &entry).unwrap());
        assert_eq!(cache.get(&key).unwrap().unwrap().text, "first");
        let path = cache.path_for(&key);
        assert!(path.starts_with(dir.path().join(&key.digest[..2])));
    }
}
