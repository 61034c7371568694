//! Chat-completion gateway: an OpenAI-compatible HTTP client and a playback
//! double behind one trait, with a content-addressed response cache,
//! bounded concurrency and jittered exponential backoff.

pub mod backend;
pub mod cache;
pub mod config;
mod gateway;
pub mod openai;
pub mod playback;

pub use backend::{BackendCall, BackendError, BackendRegistry, BackendReply, BackendSettings, ChatBackend, RegistryError};
pub use cache::{CacheEntry, CacheKey, ResponseCache};
pub use config::{ConfigError, ModelConfig, DEFAULT_TOP_P};
pub use gateway::{
    backoff_delay, BatchEvent, BatchResults, CompletionRequest, CompletionResult, Gateway, GatewayError,
    BACKOFF_FACTOR, BACKOFF_JITTER,
};
pub use openai::OpenAiBackend;
pub use playback::PlaybackBackend;
