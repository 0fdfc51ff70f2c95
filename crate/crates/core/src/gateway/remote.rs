//! Client for an OpenAI-compatible chat completions endpoint.

use std::thread;
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use super::{parse_structured, Backend, BackendConfig, GatewayError, ModelReply, PromptBundle, Usage};

pub struct RemoteBackend {
    config: BackendConfig,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    pub fn new(config: BackendConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self { config, client })
    }
}

/// The chat request body sent for `bundle`. Frames travel as PNG data URLs
/// after the text parts.
pub fn request_body(model: &str, bundle: &PromptBundle) -> Result<Value, GatewayError> {
    let mut parts: Vec<Value> = bundle
        .user_segments
        .iter()
        .map(|t| json!({"type": "text", "text": t}))
        .collect();
    for frame in &bundle.frames {
        let png = frame.to_png().map_err(|e| GatewayError::Domain(e.to_string()))?;
        let b64 = base64::engine::general_purpose::STANDARD.encode(png);
        parts.push(json!({"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{b64}")}}));
    }
    Ok(json!({
        "model": model,
        "temperature": bundle.temperature,
        "max_tokens": bundle.max_tokens,
        "messages": [
            {"role": "system", "content": bundle.system_text},
            {"role": "user", "content": parts},
        ],
    }))
}

fn retryable(status: reqwest::StatusCode) -> bool {
    status == reqwest::StatusCode::TOO_MANY_REQUESTS || status.is_server_error()
}

/// POSTs `body` with exponential backoff on timeouts, connection errors, 429 and 5xx.
/// Returns the JSON reply and the number of attempts made.
pub(crate) fn post_with_retry(
    client: &reqwest::blocking::Client,
    config: &BackendConfig,
    url: &str,
    body: &Value,
) -> Result<(Value, u32), GatewayError> {
    let attempts_allowed = config.max_attempts.max(1);
    let mut last = String::new();
    for attempt in 0..attempts_allowed {
        if attempt > 0 {
            let wait = config.backoff_base_secs * f64::from(1u32 << (attempt - 1).min(16));
            thread::sleep(Duration::from_secs_f64(wait.max(0.0)));
        }
        let mut req = client.post(url).json(body);
        if let Some(key) = &config.api_key {
            req = req.bearer_auth(key);
        }
        match req.send() {
            Ok(resp) if resp.status().is_success() => {
                let value: Value = resp.json().map_err(|e| GatewayError::Transport {
                    attempts: attempt + 1,
                    message: format!("invalid JSON body: {e}"),
                })?;
                return Ok((value, attempt + 1));
            }
            Ok(resp) if retryable(resp.status()) => last = format!("HTTP {}", resp.status()),
            Ok(resp) => {
                return Err(GatewayError::Transport {
                    attempts: attempt + 1,
                    message: format!("HTTP {}", resp.status()),
                })
            }
            Err(e) if e.is_timeout() || e.is_connect() || e.is_request() => last = e.to_string(),
            Err(e) => return Err(GatewayError::Transport { attempts: attempt + 1, message: e.to_string() }),
        }
    }
    Err(GatewayError::Transport { attempts: attempts_allowed, message: last })
}

impl Backend for RemoteBackend {
    fn complete(&self, bundle: &PromptBundle) -> Result<ModelReply, GatewayError> {
        bundle.validate()?;
        let base = self.config.endpoint.as_deref().ok_or_else(|| GatewayError::Config("no endpoint".into()))?;
        let url = format!("{}/chat/completions", base.trim_end_matches('/'));
        let body = request_body(&self.config.model, bundle)?;
        let (value, attempts) = post_with_retry(&self.client, &self.config, &url, &body)?;
        let raw_text = value["choices"][0]["message"]["content"].as_str().unwrap_or_default().to_string();
        let parsed = parse_structured(&raw_text, bundle.schema_id)?;
        Ok(ModelReply {
            raw_text,
            parsed: Some(parsed),
            usage: Usage {
                request_count: attempts,
                input_units: value["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
                output_units: value["usage"]["completion_tokens"].as_u64().unwrap_or(0),
            },
        })
    }

    fn name(&self) -> &str {
        "remote"
    }
}
