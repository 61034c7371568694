//! Deterministic backend answering from a digest → text fixture map.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use async_trait::async_trait;

use crate::backend::{BackendCall, BackendError, BackendReply, ChatBackend};

#[derive(Debug, Default)]
pub struct PlaybackBackend {
    fixtures: BTreeMap<String, String>,
    calls: AtomicUsize,
}

impl PlaybackBackend {
    pub fn new(fixtures: BTreeMap<String, String>) -> Self {
        PlaybackBackend {
            fixtures,
            calls: AtomicUsize::new(0),
        }
    }

    /// Reads a JSON object mapping digests to response text.
    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        let fixtures = serde_json::from_slice(&bytes).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {e}", path.display()))
        })?;
        Ok(PlaybackBackend::new(fixtures))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl ChatBackend for PlaybackBackend {
    fn name(&self) -> &str {
        "playback"
    }

    fn is_remote(&self) -> bool {
        false
    }

    async fn send(&self, call: &BackendCall<'_>) -> Result<BackendReply, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match self.fixtures.get(call.key.as_str()) {
            Some(text) => Ok(BackendReply {
                text: text.clone(),
                finish_reason: "stop".into(),
                raw: serde_json::Value::Null,
            }),
            None => Err(BackendError::UnscriptedRequest {
                digest: call.key.digest.clone(),
            }),
        }
    }
}
