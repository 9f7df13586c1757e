use std::time::Duration;

use serde_json::{json, Value};

use crate::backend::{BackendConfig, BackendSummary, GenerationBatch, GenerationRequest, Generator};
use crate::data::Schema;
use crate::error::{Error, Result};
use crate::prompt::{parse_records_response, RenderedPrompt};
use crate::scalar::Scalar;

const MAX_BACKOFF: Duration = Duration::from_secs(30);

/// A finished chat completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    /// `choices[0].message.content`.
    pub content: String,
    /// Full response body.
    pub raw_body: String,
    /// Requests sent, including the successful one.
    pub requests: u32,
}

/// Client for a JSON chat-completion endpoint
/// (`messages` in, `choices[0].message.content` out).
#[derive(Debug, Clone)]
pub struct RemoteLlm {
    cfg: BackendConfig,
    agent: ureq::Agent,
}

enum Failure {
    Retryable(String),
    Timeout,
    Fatal(Error),
}

impl RemoteLlm {
    pub fn new(cfg: BackendConfig) -> Result<Self> {
        cfg.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_seconds)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteLlm { cfg, agent })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    fn endpoint(&self) -> &str {
        self.cfg.endpoint_url.as_deref().unwrap_or_default()
    }

    /// JSON body sent for `prompt_text`.
    pub fn request_body(&self, prompt_text: &str) -> Value {
        json!({
            "model": self.cfg.model_name,
            "messages": [{"role": "user", "content": prompt_text}],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens,
            "seed": self.cfg.seed,
        })
    }

    fn api_key(&self) -> Result<String> {
        let var = self.cfg.api_key_env.as_deref().unwrap_or_default();
        std::env::var(var)
            .map_err(|_| Error::Backend(format!("environment variable `{var}` is not set")))
    }

    /// Sends one user message, retrying transport errors, 5xx and 429 with
    /// exponential backoff.
    pub fn complete(&self, prompt_text: &str) -> Result<Completion> {
        let key = self.api_key()?;
        let body = self.request_body(prompt_text);
        let attempts = self.cfg.max_retries + 1;
        let mut last = String::new();
        let mut timed_out = false;
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = Duration::from_millis(self.cfg.retry_base_delay_ms)
                    .saturating_mul(1 << (attempt - 1).min(16))
                    .min(MAX_BACKOFF);
                log::warn!(
                    "retry {attempt}/{} for {} in {delay:?}: {last}",
                    self.cfg.max_retries,
                    self.endpoint()
                );
                std::thread::sleep(delay);
            }
            match self.send(&key, &body) {
                Ok((content, raw_body)) => {
                    if attempt > 0 {
                        log::info!("{} succeeded after {attempt} retries", self.endpoint());
                    }
                    return Ok(Completion {
                        content,
                        raw_body,
                        requests: attempt + 1,
                    });
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Timeout) => {
                    timed_out = true;
                    last = "timed out".into();
                }
                Err(Failure::Retryable(msg)) => {
                    timed_out = false;
                    last = msg;
                }
            }
        }
        if timed_out {
            return Err(Error::Timeout {
                endpoint: self.endpoint().to_string(),
                attempts,
            });
        }
        Err(Error::Backend(format!(
            "{} failed after {attempts} attempts: {last}",
            self.endpoint()
        )))
    }

    fn send(&self, key: &str, body: &Value) -> std::result::Result<(String, String), Failure> {
        let response = self
            .agent
            .post(self.endpoint())
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(body);
        let mut response = match response {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(Failure::Timeout),
            Err(e @ (ureq::Error::Io(_)
            | ureq::Error::ConnectionFailed
            | ureq::Error::HostNotFound
            | ureq::Error::Protocol(_))) => return Err(Failure::Retryable(e.to_string())),
            Err(e) => return Err(Failure::Fatal(Error::Backend(e.to_string()))),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => return Err(Failure::Timeout),
            Err(e) => return Err(Failure::Retryable(e.to_string())),
        };
        match status {
            200..=299 => {}
            401 | 403 => {
                return Err(Failure::Fatal(Error::Auth {
                    endpoint: self.endpoint().to_string(),
                    status,
                }))
            }
            429 | 500..=599 => return Err(Failure::Retryable(format!("HTTP {status}"))),
            _ => {
                return Err(Failure::Fatal(Error::Backend(format!(
                    "HTTP {status}: {}",
                    text.chars().take(200).collect::<String>()
                ))))
            }
        }
        let parsed: Value = serde_json::from_str(&text).map_err(|e| {
            Failure::Fatal(Error::ResponseParse(format!("response is not JSON: {e}")))
        })?;
        let content = parsed["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| {
                Failure::Fatal(Error::ResponseParse(
                    "response has no choices[0].message.content".into(),
                ))
            })?
            .to_string();
        Ok((content, text))
    }
}

/// Sends an augmentation prompt and parses the fenced CSV reply against `schema`.
pub fn llm_generate<T: Scalar>(
    prompt: &RenderedPrompt,
    schema: &Schema<T>,
    cfg: &BackendConfig,
) -> Result<GenerationBatch<T>> {
    RemoteLlm::new(cfg.clone())?.generate_for(prompt, schema)
}

impl RemoteLlm {
    fn generate_for<T: Scalar>(&self, prompt: &RenderedPrompt, schema: &Schema<T>) -> Result<GenerationBatch<T>> {
        let completion = self.complete(&prompt.text)?;
        let parsed = parse_records_response(&completion.content, schema)?;
        Ok(GenerationBatch {
            records: parsed.records,
            backend: self.cfg.summary(),
            raw_response: Some(completion.content),
            rejected_rows: parsed.rejected,
            requests: completion.requests,
        })
    }
}

impl<T: Scalar> Generator<T> for RemoteLlm {
    fn summary(&self) -> BackendSummary {
        self.cfg.summary()
    }

    fn uses_prompts(&self) -> bool {
        true
    }

    fn describe(&self, prompt: &RenderedPrompt) -> Result<Option<String>> {
        Ok(Some(self.complete(&prompt.text)?.content))
    }

    fn request_body(&self, prompt: &RenderedPrompt) -> Option<Value> {
        Some(RemoteLlm::request_body(self, &prompt.text))
    }

    fn generate(&self, request: &GenerationRequest<'_, T>) -> Result<GenerationBatch<T>> {
        self.generate_for(request.prompt, request.d_anon.schema())
    }
}
