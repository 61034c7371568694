//! OpenAI-compatible `/v1/chat/completions` client.

use async_trait::async_trait;
use serde::Serialize;
use serde_json::Value;

use crate::backend::{BackendCall, BackendError, BackendReply, ChatBackend};
use mipw_core::ChatMessage;

pub const API_KEY_VAR: &str = "MIPW_API_KEY";
pub const BASE_URL_VAR: &str = "MIPW_BASE_URL";

#[derive(Debug, Clone)]
pub struct OpenAiBackend {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::Client,
}

/// Only model, messages and top_p go on the wire; the server defaults the rest.
#[derive(Debug, Serialize)]
pub struct WireRequest<'a> {
    pub model: &'a str,
    pub messages: &'a [ChatMessage],
    pub top_p: f64,
}

impl OpenAiBackend {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Self {
        let base = base_url.into();
        OpenAiBackend {
            endpoint: format!("{}/v1/chat/completions", base.trim_end_matches('/')),
            api_key,
            client: reqwest::Client::new(),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

/// Pulls `choices[0].message.content` and `choices[0].finish_reason`.
pub fn extract_reply(body: Value) -> Result<BackendReply, BackendError> {
    let choice = body
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| BackendError::MalformedResponse("missing choices[0]".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::MalformedResponse("missing choices[0].message.content".into()))?
        .to_string();
    let finish_reason = choice
        .get("finish_reason")
        .and_then(Value::as_str)
        .unwrap_or("unknown")
        .to_string();
    Ok(BackendReply {
        text,
        finish_reason,
        raw: body,
    })
}

#[async_trait]
impl ChatBackend for OpenAiBackend {
    fn name(&self) -> &str {
        "openai"
    }

    async fn send(&self, call: &BackendCall<'_>) -> Result<BackendReply, BackendError> {
        let payload = WireRequest {
            model: call.model_id,
            messages: call.messages,
            top_p: call.top_p,
        };
        let mut req = self
            .client
            .post(&self.endpoint)
            .timeout(call.timeout)
            .json(&payload);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(transport_error)?;
        let status = resp.status().as_u16();
        let bytes = resp.bytes().await.map_err(transport_error)?;
        if !(200..300).contains(&status) {
            let body = String::from_utf8_lossy(&bytes).chars().take(500).collect();
            return Err(BackendError::from_status(status, body));
        }
        let body: Value = serde_json::from_slice(&bytes)
            .map_err(|e| BackendError::MalformedResponse(format!("invalid JSON: {e}")))?;
        extract_reply(body)
    }
}

fn transport_error(e: reqwest::Error) -> BackendError {
    if e.is_timeout() {
        BackendError::Timeout
    } else {
        BackendError::Connect(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mipw_core::Role;
    use serde_json::json;

    #[test]
    fn payload_has_only_three_fields() {
        let msgs = vec![ChatMessage {
            role: Role::System,
            content: "s".into(),
        }];
        let v = serde_json::to_value(WireRequest {
            model: "gpt-4o",
            messages: &msgs,
            top_p: 0.1,
        })
        .unwrap();
        assert_eq!(
            v,
            json!({"model": "gpt-4o", "messages": [{"role": "system", "content": "s"}], "top_p": 0.1})
        );
    }

    #[test]
    fn reply_extraction() {
        let ok = extract_reply(json!({"choices": [{"message": {"content": "hi"}, "finish_reason": "stop"}]}));
        assert_eq!(ok.unwrap().text, "hi");
        let bad = extract_reply(json!({"choices": []}));
        assert!(matches!(bad, Err(BackendError::MalformedResponse(_))));
        let no_content = extract_reply(json!({"choices": [{"message": {}}]}));
        assert!(matches!(no_content, Err(BackendError::MalformedResponse(_))));
    }

    #[test]
    fn endpoint_joins_cleanly() {
        assert_eq!(
            OpenAiBackend::new("http://h:1/", None).endpoint(),
            "http://h:1/v1/chat/completions"
        );
    }
}
