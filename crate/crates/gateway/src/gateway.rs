use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use futures::stream::{FuturesUnordered, StreamExt};
use mipw_core::{build_messages, ChatMessage, CorpusRecord, PromptTemplate};
use rand::Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::backend::{BackendCall, BackendError, ChatBackend};
use crate::cache::{CacheEntry, CacheKey, ResponseCache};
use crate::config::{ConfigError, ModelConfig};

pub const BACKOFF_FACTOR: f64 = 2.0;
pub const BACKOFF_JITTER: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub messages: Vec<ChatMessage>,
    pub config: ModelConfig,
}

impl CompletionRequest {
    pub fn key(&self) -> CacheKey {
        CacheKey::new(&self.config.model_id, self.config.top_p, &self.messages)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub model_id: String,
    pub finish_reason: String,
    pub from_cache: bool,
    /// Backend calls made; 1 for a cache hit.
    pub attempts: u32,
    pub digest: String,
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("authentication failed (HTTP {status})")]
    AuthFailed { status: u16, body: String },
    #[error("request rejected (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: BackendError },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("no scripted response for request digest {digest}")]
    UnscriptedRequest { digest: String },
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
}

impl From<ConfigError> for GatewayError {
    fn from(e: ConfigError) -> Self {
        GatewayError::InvalidRequest(e.to_string())
    }
}

/// Delay before attempt `failed + 1`, given `failed` failures so far.
/// `jitter` in [-BACKOFF_JITTER, BACKOFF_JITTER]. With factor 2 and ±20%
/// jitter the schedule never shrinks: 0.8·2 > 1.2.
pub fn backoff_delay(base: Duration, failed: u32, jitter: f64) -> Duration {
    let exp = BACKOFF_FACTOR.powi(failed.saturating_sub(1) as i32);
    let j = jitter.clamp(-BACKOFF_JITTER, BACKOFF_JITTER);
    base.mul_f64(exp * (1.0 + j))
}

/// Shared entry point for completions: cache, admission control, retries.
pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    config: ModelConfig,
    cache: Option<ResponseCache>,
    permits: Arc<Semaphore>,
    backend_calls: AtomicUsize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchEvent {
    pub id: String,
    pub done: usize,
    pub total: usize,
    pub ok: bool,
    pub from_cache: bool,
}

pub type BatchResults = BTreeMap<String, Result<CompletionResult, GatewayError>>;

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>, config: ModelConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let cache = config.cache_dir.clone().map(ResponseCache::new);
        Ok(Gateway {
            backend,
            permits: Arc::new(Semaphore::new(config.max_in_flight)),
            config,
            cache,
            backend_calls: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    /// Calls made to the backend so far, including failed attempts.
    pub fn backend_calls(&self) -> usize {
        self.backend_calls.load(Ordering::SeqCst)
    }

    pub fn request(&self, messages: Vec<ChatMessage>) -> CompletionRequest {
        CompletionRequest {
            messages,
            config: self.config.clone(),
        }
    }

    pub async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, GatewayError> {
        request.config.validate()?;
        if request.messages.is_empty() {
            return Err(GatewayError::InvalidRequest("no messages".into()));
        }
        let cfg = &request.config;
        let key = request.key();
        let cache = match &cfg.cache_dir {
            Some(dir) if Some(dir.as_path()) != self.cache.as_ref().map(|c| c.dir()) => {
                Some(ResponseCache::new(dir))
            }
            Some(_) => self.cache.clone(),
            None => None,
        };

        if let Some(cache) = &cache {
            if let Some(hit) = cache.get(&key)? {
                log::debug!("cache hit {key}");
                return Ok(CompletionResult {
                    text: hit.text,
                    model_id: cfg.model_id.clone(),
                    finish_reason: hit.finish_reason,
                    from_cache: true,
                    attempts: 1,
                    digest: key.digest,
                });
            }
        }

        let call = BackendCall {
            model_id: &cfg.model_id,
            top_p: cfg.top_p,
            messages: &request.messages,
            key: &key,
            timeout: cfg.request_timeout,
        };
        let mut attempts = 0;
        let reply = loop {
            attempts += 1;
            let outcome = {
                let _permit = self.permits.acquire().await.expect("semaphore never closed");
                self.backend_calls.fetch_add(1, Ordering::SeqCst);
                self.backend.send(&call).await
            };
            match outcome {
                Ok(reply) => break reply,
                Err(e) if e.is_retryable() => {
                    if attempts >= cfg.max_attempts {
                        return Err(GatewayError::RetriesExhausted { attempts, last: e });
                    }
                    let jitter = rand::thread_rng().gen_range(-BACKOFF_JITTER..=BACKOFF_JITTER);
                    let delay = backoff_delay(cfg.backoff_base, attempts, jitter);
                    log::warn!("attempt {attempts} for {key} failed ({e}); retrying in {delay:?}");
                    tokio::time::sleep(delay).await;
                }
                Err(e) => return Err(fatal(e)),
            }
        };

        if let Some(cache) = &cache {
            cache.put(
                &key,
                &CacheEntry {
                    digest: key.digest.clone(),
                    model: cfg.model_id.clone(),
                    top_p: cfg.top_p,
                    messages: request.messages.clone(),
                    text: reply.text.clone(),
                    finish_reason: reply.finish_reason.clone(),
                    raw: reply.raw,
                },
            )?;
        }
        Ok(CompletionResult {
            text: reply.text,
            model_id: cfg.model_id.clone(),
            finish_reason: reply.finish_reason,
            from_cache: false,
            attempts,
            digest: key.digest,
        })
    }

    /// Runs every item; one failure never stops the others. Duplicate ids
    /// keep their first occurrence.
    pub async fn run_batch(
        &self,
        items: Vec<(String, Vec<ChatMessage>)>,
        progress: &(dyn Fn(&BatchEvent) + Send + Sync),
    ) -> BatchResults {
        let mut seen = std::collections::BTreeSet::new();
        let items: Vec<_> = items
            .into_iter()
            .filter(|(id, _)| {
                let fresh = seen.insert(id.clone());
                if !fresh {
                    log::warn!("duplicate batch id {id} ignored");
                }
                fresh
            })
            .collect();
        let total = items.len();
        let mut pending: FuturesUnordered<_> = items
            .into_iter()
            .map(|(id, messages)| async move {
                let req = self.request(messages);
                let out = self.complete(&req).await;
                (id, out)
            })
            .collect();
        let mut results = BTreeMap::new();
        while let Some((id, out)) = pending.next().await {
            let event = BatchEvent {
                id: id.clone(),
                done: results.len() + 1,
                total,
                ok: out.is_ok(),
                from_cache: out.as_ref().is_ok_and(|r| r.from_cache),
            };
            if let Err(e) = &out {
                log::warn!("{id}: {e}");
            }
            results.insert(id, out);
            progress(&event);
        }
        results
    }

    /// Builds one prompt per record and runs the batch. Records whose prompt
    /// cannot be built get an `InvalidRequest` entry.
    pub async fn run_corpus(
        &self,
        records: &[&dyn CorpusRecord],
        template: &PromptTemplate,
        progress: &(dyn Fn(&BatchEvent) + Send + Sync),
    ) -> BatchResults {
        let mut items = Vec::new();
        let mut failed = BTreeMap::new();
        for r in records {
            match build_messages(template, r.id(), r.sentence()) {
                Ok(p) => items.push((r.id().to_string(), p.messages)),
                Err(e) => {
                    failed.insert(r.id().to_string(), Err(GatewayError::InvalidRequest(e.to_string())));
                }
            }
        }
        let mut results = self.run_batch(items, progress).await;
        for (id, e) in failed {
            results.entry(id).or_insert(e);
        }
        results
    }
}

fn fatal(e: BackendError) -> GatewayError {
    match e {
        BackendError::AuthFailed { status, body } => GatewayError::AuthFailed { status, body },
        BackendError::Rejected { status, body } => GatewayError::Rejected { status, body },
        BackendError::MalformedResponse(m) => GatewayError::MalformedResponse(m),
        BackendError::UnscriptedRequest { digest } => GatewayError::UnscriptedRequest { digest },
        other => GatewayError::RetriesExhausted {
            attempts: 1,
            last: other,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn backoff_never_shrinks(
            base_ms in 1u64..5000,
            jitters in proptest::collection::vec(-BACKOFF_JITTER..=BACKOFF_JITTER, 2..10),
        ) {
            let base = Duration::from_millis(base_ms);
            let delays: Vec<Duration> = jitters
                .iter()
                .enumerate()
                .map(|(i, j)| backoff_delay(base, i as u32 + 1, *j))
                .collect();
            for w in delays.windows(2) {
                prop_assert!(w[1] >= w[0], "{:?}", delays);
            }
        }
    }

    #[test]
    fn backoff_doubles() {
        let base = Duration::from_secs(1);
        assert_eq!(backoff_delay(base, 1, 0.0), Duration::from_secs(1));
        assert_eq!(backoff_delay(base, 3, 0.0), Duration::from_secs(4));
        assert_eq!(backoff_delay(base, 2, 0.2), Duration::from_millis(2400));
    }
}
