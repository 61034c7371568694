use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub const DEFAULT_TOP_P: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_id: String,
    pub top_p: f64,
    pub max_attempts: u32,
    #[serde(with = "millis", rename = "backoff_base_ms")]
    pub backoff_base: Duration,
    #[serde(with = "millis", rename = "request_timeout_ms")]
    pub request_timeout: Duration,
    pub max_in_flight: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("top_p must be in (0, 1], got {0}")]
    TopP(f64),
    #[error("max_attempts must be at least 1")]
    MaxAttempts,
    #[error("max_in_flight must be at least 1")]
    MaxInFlight,
    #[error("model id is empty")]
    EmptyModel,
}

impl ModelConfig {
    pub fn new(model_id: impl Into<String>) -> Self {
        ModelConfig {
            model_id: model_id.into(),
            top_p: DEFAULT_TOP_P,
            max_attempts: 5,
            backoff_base: Duration::from_secs(1),
            request_timeout: Duration::from_secs(120),
            max_in_flight: 4,
            cache_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.model_id.trim().is_empty() {
            return Err(ConfigError::EmptyModel);
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(ConfigError::TopP(self.top_p));
        }
        if self.max_attempts == 0 {
            return Err(ConfigError::MaxAttempts);
        }
        if self.max_in_flight == 0 {
            return Err(ConfigError::MaxInFlight);
        }
        Ok(())
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ModelConfig::new("gpt-4o");
        assert_eq!(c.top_p, 0.1);
        assert_eq!(c.max_attempts, 5);
        assert_eq!(c.max_in_flight, 4);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ModelConfig::new("m");
        c.top_p = 0.0;
        assert_eq!(c.validate(), Err(ConfigError::TopP(0.0)));
        c.top_p = 1.0;
        c.max_attempts = 0;
        assert_eq!(c.validate(), Err(ConfigError::MaxAttempts));
    }

    #[test]
    fn durations_as_millis() {
        let c = ModelConfig::new("m");
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["backoff_base_ms"], 1000);
        assert_eq!(v["request_timeout_ms"], 120_000);
        let back: ModelConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }
}
