//! Chat backends behind a common trait, selected by name at runtime.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use mipw_core::ChatMessage;

use crate::cache::CacheKey;

/// One outbound request as a backend sees it.
#[derive(Debug, Clone)]
pub struct BackendCall<'a> {
    pub model_id: &'a str,
    pub top_p: f64,
    pub messages: &'a [ChatMessage],
    pub key: &'a CacheKey,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendReply {
    pub text: String,
    pub finish_reason: String,
    pub raw: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("authentication failed (HTTP {status}): {body}")]
    AuthFailed { status: u16, body: String },
    #[error("request rejected (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("rate limited (HTTP {status})")]
    RateLimited { status: u16 },
    #[error("server error (HTTP {status}): {body}")]
    ServerError { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("response has no completion: {0}")]
    MalformedResponse(String),
    #[error("no scripted response for request digest {digest}")]
    UnscriptedRequest { digest: String },
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            BackendError::RateLimited { .. }
                | BackendError::ServerError { .. }
                | BackendError::Timeout
                | BackendError::Connect(_)
        )
    }

    /// Maps a non-success HTTP status onto the error taxonomy.
    pub fn from_status(status: u16, body: String) -> BackendError {
        match status {
            401 | 403 => BackendError::AuthFailed { status, body },
            408 | 500..=599 => BackendError::ServerError { status, body },
            429 => BackendError::RateLimited { status },
            _ => BackendError::Rejected { status, body },
        }
    }
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;

    /// True when calls reach the network; cache hits skip this entirely.
    fn is_remote(&self) -> bool {
        true
    }

    async fn send(&self, call: &BackendCall<'_>) -> Result<BackendReply, BackendError>;
}

impl fmt::Debug for dyn ChatBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChatBackend({})", self.name())
    }
}

/// Settings a factory may draw on when building a backend.
#[derive(Debug, Clone, Default)]
pub struct BackendSettings {
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    pub fixtures: Option<std::path::PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown backend `{name}` (available: {available})")]
    Unknown { name: String, available: String },
    #[error("backend `{name}` cannot be built: {reason}")]
    Setup { name: String, reason: String },
}

type Factory = Box<dyn Fn(&BackendSettings) -> Result<Arc<dyn ChatBackend>, String> + Send + Sync>;

pub struct BackendRegistry {
    factories: BTreeMap<String, Factory>,
}

impl BackendRegistry {
    pub fn empty() -> Self {
        BackendRegistry {
            factories: BTreeMap::new(),
        }
    }

    /// `openai` and `playback`.
    pub fn builtin() -> Self {
        let mut reg = BackendRegistry::empty();
        reg.register("openai", |s| {
            let base = s
                .base_url
                .clone()
                .ok_or_else(|| "no base URL (set --base-url or MIPW_BASE_URL)".to_string())?;
            Ok(Arc::new(crate::openai::OpenAiBackend::new(base, s.api_key.clone())))
        });
        reg.register("playback", |s| {
            let path = s
                .fixtures
                .as_ref()
                .ok_or_else(|| "no fixtures file given".to_string())?;
            let pb = crate::playback::PlaybackBackend::from_file(path).map_err(|e| e.to_string())?;
            Ok(Arc::new(pb))
        });
        reg
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&BackendSettings) -> Result<Arc<dyn ChatBackend>, String> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, name: &str, settings: &BackendSettings) -> Result<Arc<dyn ChatBackend>, RegistryError> {
        let factory = self.factories.get(name).ok_or_else(|| RegistryError::Unknown {
            name: name.to_string(),
            available: self.names().join(", "),
        })?;
        factory(settings).map_err(|reason| RegistryError::Setup {
            name: name.to_string(),
            reason,
        })
    }
}
