//! Record generators: a remote chat-completion client and a deterministic
//! equivalence-class synthesizer.

mod remote;
mod synth;

use serde::{Deserialize, Serialize};

pub use remote::{llm_generate, Completion, RemoteLlm};
pub use synth::{synth_generate, Synthesizer};

use crate::data::{Dataset, Record};
use crate::error::{Error, Result};
use crate::prompt::RenderedPrompt;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    RemoteLlm,
    DeterministicSynth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint_url: Option<String>,
    #[serde(default)]
    pub model_name: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// First backoff delay; doubles on every retry.
    #[serde(default = "default_retry_delay")]
    pub retry_base_delay_ms: u64,
    #[serde(default)]
    pub seed: u64,
    /// Requested number of new records (j).
    #[serde(default = "default_count")]
    pub target_count: usize,
}

fn default_max_tokens() -> u32 {
    4096
}
fn default_timeout() -> u64 {
    120
}
fn default_retries() -> u32 {
    3
}
fn default_retry_delay() -> u64 {
    500
}
fn default_count() -> usize {
    1
}

impl BackendConfig {
    pub fn synth(seed: u64, target_count: usize) -> Self {
        BackendConfig {
            kind: BackendKind::DeterministicSynth,
            endpoint_url: None,
            model_name: None,
            api_key_env: None,
            temperature: 0.0,
            max_output_tokens: default_max_tokens(),
            timeout_seconds: default_timeout(),
            max_retries: default_retries(),
            retry_base_delay_ms: default_retry_delay(),
            seed,
            target_count,
        }
    }

    pub fn remote(endpoint_url: &str, model_name: &str, api_key_env: &str) -> Self {
        BackendConfig {
            kind: BackendKind::RemoteLlm,
            endpoint_url: Some(endpoint_url.to_string()),
            model_name: Some(model_name.to_string()),
            api_key_env: Some(api_key_env.to_string()),
            ..BackendConfig::synth(0, 1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let remote_fields = [&self.endpoint_url, &self.model_name, &self.api_key_env];
        match self.kind {
            BackendKind::RemoteLlm if remote_fields.iter().any(|f| f.is_none()) => {
                return Err(Error::InvalidArgument(
                    "remote backend needs endpoint_url, model_name and api_key_env".into(),
                ))
            }
            BackendKind::DeterministicSynth if remote_fields.iter().any(|f| f.is_some()) => {
                return Err(Error::InvalidArgument(
                    "endpoint_url, model_name and api_key_env apply to the remote backend only".into(),
                ))
            }
            _ => {}
        }
        if self.timeout_seconds == 0 {
            return Err(Error::InvalidArgument("timeout_seconds must be positive".into()));
        }
        if self.target_count == 0 {
            return Err(Error::InvalidArgument("target_count must be at least 1".into()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::InvalidArgument("temperature must be a non-negative number".into()));
        }
        Ok(())
    }

    pub fn summary(&self) -> BackendSummary {
        BackendSummary {
            kind: self.kind,
            model_name: self.model_name.clone(),
            endpoint_url: self.endpoint_url.clone(),
            temperature: self.temperature,
            seed: self.seed,
        }
    }
}

/// Identifies the generator that produced a batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackendSummary {
    pub kind: BackendKind,
    pub model_name: Option<String>,
    pub endpoint_url: Option<String>,
    pub temperature: f64,
    pub seed: u64,
}

/// Generated records (Δ″) and what was discarded while reading them.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationBatch<T> {
    pub records: Vec<Record<T>>,
    pub backend: BackendSummary,
    pub raw_response: Option<String>,
    /// (row text, reason).
    pub rejected_rows: Vec<(String, String)>,
    /// Requests sent, including retries; 0 for local generation.
    pub requests: u32,
}

/// Inputs to one generation call.
#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a, T> {
    pub d_anon: &'a Dataset<T>,
    pub prompt: &'a RenderedPrompt,
    pub count: usize,
    pub seed: u64,
}

/// A source of new records for an anonymized dataset.
pub trait Generator<T: Scalar>: Send + Sync {
    fn summary(&self) -> BackendSummary;

    /// Whether the generator reads prompts; local generators do not.
    fn uses_prompts(&self) -> bool;

    /// Raw reply to a context-understanding prompt, if the backend talks to a model.
    fn describe(&self, _prompt: &RenderedPrompt) -> Result<Option<String>> {
        Ok(None)
    }

    /// Wire request that `prompt` would produce, for logging.
    fn request_body(&self, _prompt: &RenderedPrompt) -> Option<serde_json::Value> {
        None
    }

    fn generate(&self, request: &GenerationRequest<'_, T>) -> Result<GenerationBatch<T>>;
}

/// Generator described by `cfg`.
pub fn from_config<T: Scalar>(cfg: &BackendConfig) -> Result<Box<dyn Generator<T>>> {
    cfg.validate()?;
    Ok(match cfg.kind {
        BackendKind::RemoteLlm => Box::new(RemoteLlm::new(cfg.clone())?),
        BackendKind::DeterministicSynth => Box::new(Synthesizer::new(cfg.clone())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(BackendConfig::synth(1, 5).validate().is_ok());
        assert!(BackendConfig::synth(1, 0).validate().is_err());
        assert!(BackendConfig::remote("http://x", "m", "KEY").validate().is_ok());
        let mut c = BackendConfig::remote("http://x", "m", "KEY");
        c.model_name = None;
        assert!(c.validate().is_err());
        let mut c = BackendConfig::synth(1, 5);
        c.endpoint_url = Some("http://x".into());
        assert!(c.validate().is_err());
        let mut c = BackendConfig::synth(1, 5);
        c.timeout_seconds = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_defaults() {
        let c: BackendConfig = serde_json::from_str(
            r#"{"kind":"remote_llm","endpoint_url":"http://h/v1/chat/completions","model_name":"m","api_key_env":"K"}"#,
        )
        .unwrap();
        assert_eq!(c.temperature, 0.0);
        assert_eq!(c.max_retries, 3);
        assert!(c.validate().is_ok());
    }
}
