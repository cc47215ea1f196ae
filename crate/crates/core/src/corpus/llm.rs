//! Multi-part story generation against a chat-completions endpoint.
//!
//! One conversation is kept per text: the opening prompt asks for a story
//! in `num_parts` parts, and every later turn asks for the next part. Each
//! raw response is archived as JSON before the next request goes out, so a
//! failure midway leaves the completed parts on disk.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::text::{normalize_text, AnalyzedText, NormalizationOptions, Provenance};

pub const DEFAULT_PROMPT: &str = "You are a genius storyteller. I want you to generate a story longer \
than {num_words} tokens in {num} parts. Please tell the story part by part.";

pub const DEFAULT_CONTINUE: &str = "Please continue with part {part} of {num}.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Attempts after the first one.
    pub max_retries: u32,
    pub initial_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            initial_delay_ms: 1000,
            max_delay_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let ms = self
            .initial_delay_ms
            .saturating_mul(1u64 << attempt.min(20))
            .min(self.max_delay_ms);
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    /// Full chat-completions URL, e.g. `https://api.openai.com/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    pub num_parts: usize,
    pub target_tokens: usize,
    /// `{num_words}` and `{num}` are substituted.
    pub prompt_template: String,
    /// `{part}` and `{num}` are substituted.
    pub continue_template: String,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
    /// Name of the environment variable holding the bearer token. `None`
    /// sends no authorization header.
    pub api_key_env: Option<String>,
    pub temperature: Option<f64>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-mini".into(),
            num_parts: 20,
            target_tokens: 200_000,
            prompt_template: DEFAULT_PROMPT.into(),
            continue_template: DEFAULT_CONTINUE.into(),
            timeout_secs: 600,
            retry: RetryPolicy::default(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            temperature: None,
        }
    }
}

impl GenerationConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let config: GenerationConfig = serde_json::from_slice(&fs::read(path)?)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_parts == 0 {
            return Err(Error::InvalidParameter("num_parts must be at least 1".into()));
        }
        if self.target_tokens == 0 {
            return Err(Error::InvalidParameter("target_tokens must be at least 1".into()));
        }
        Ok(())
    }

    pub fn opening_prompt(&self) -> String {
        self.prompt_template
            .replace("{num_words}", &self.target_tokens.to_string())
            .replace("{num}", &self.num_parts.to_string())
    }

    pub fn continuation_prompt(&self, part: usize) -> String {
        self.continue_template
            .replace("{part}", &part.to_string())
            .replace("{num}", &self.num_parts.to_string())
    }
}

/// Result of a complete generation run.
#[derive(Debug)]
pub struct Generated {
    pub text: AnalyzedText,
    pub parts: Vec<String>,
    /// Archived raw response files, one per part.
    pub archive: Vec<PathBuf>,
}

/// Generates one multi-part text. Raw responses go to
/// `archive_dir/<seed_label>/part_NN.json`.
pub fn llm_generate(config: &GenerationConfig, seed_label: &str, archive_dir: &Path) -> Result<Generated> {
    config.validate()?;
    let api_key = match &config.api_key_env {
        Some(var) => Some(std::env::var(var).map_err(|_| Error::MissingCredentials(var.clone()))?),
        None => None,
    };
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
        .http_status_as_error(false)
        .build()
        .into();
    let dir = archive_dir.join(seed_label);
    fs::create_dir_all(&dir)?;

    let mut messages = vec![json!({"role": "user", "content": config.opening_prompt()})];
    let mut parts = Vec::with_capacity(config.num_parts);
    let mut archive = Vec::with_capacity(config.num_parts);
    for part in 1..=config.num_parts {
        if part > 1 {
            messages.push(json!({"role": "user", "content": config.continuation_prompt(part)}));
        }
        let mut body = json!({"model": config.model, "messages": messages});
        if let Some(t) = config.temperature {
            body["temperature"] = json!(t);
        }
        let response = post_with_retry(&agent, config, api_key.as_deref(), &body)?;
        let path = dir.join(format!("part_{part:02}.json"));
        fs::write(&path, serde_json::to_vec_pretty(&response)?)?;
        archive.push(path);
        let content = response
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string();
        if content.trim().is_empty() {
            return Err(Error::TruncatedGeneration { part });
        }
        info!("{seed_label}: part {part}/{} ({} chars)", config.num_parts, content.len());
        messages.push(json!({"role": "assistant", "content": content}));
        parts.push(content);
    }

    let joined = parts.join("\n");
    let options = NormalizationOptions {
        strip_gutenberg: false,
        ..NormalizationOptions::default()
    };
    let text = normalize_text(joined.as_bytes(), &options, seed_label, Provenance::Generated)?;
    Ok(Generated { text, parts, archive })
}

fn post_with_retry(agent: &ureq::Agent, config: &GenerationConfig, api_key: Option<&str>, body: &Value) -> Result<Value> {
    let mut attempt = 0u32;
    loop {
        let outcome = post_once(agent, &config.endpoint, api_key, body);
        match outcome {
            Ok(value) => return Ok(value),
            Err(Attempt::Fatal(message)) => {
                return Err(Error::Transport {
                    attempts: attempt + 1,
                    message,
                })
            }
            Err(Attempt::Retryable(message)) => {
                if attempt >= config.retry.max_retries {
                    return Err(Error::Transport {
                        attempts: attempt + 1,
                        message,
                    });
                }
                let delay = config.retry.delay(attempt);
                warn!("request failed ({message}), retrying in {delay:?}");
                thread::sleep(delay);
                attempt += 1;
            }
        }
    }
}

enum Attempt {
    Retryable(String),
    Fatal(String),
}

fn post_once(agent: &ureq::Agent, endpoint: &str, api_key: Option<&str>, body: &Value) -> std::result::Result<Value, Attempt> {
    let mut request = agent.post(endpoint).header("Content-Type", "application/json");
    if let Some(key) = api_key {
        request = request.header("Authorization", format!("Bearer {key}"));
    }
    let mut response = request.send_json(body).map_err(|e| Attempt::Retryable(e.to_string()))?;
    let status = response.status().as_u16();
    if status == 429 || status >= 500 {
        return Err(Attempt::Retryable(format!("HTTP {status}")));
    }
    if status >= 400 {
        let detail = response.body_mut().read_to_string().unwrap_or_default();
        return Err(Attempt::Fatal(format!("HTTP {status}: {}", detail.chars().take(500).collect::<String>())));
    }
    response
        .body_mut()
        .read_json::<Value>()
        .map_err(|e| Attempt::Retryable(format!("unreadable response body: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompt_carries_length_and_parts() {
        let config = GenerationConfig::default();
        let prompt = config.opening_prompt();
        assert!(prompt.contains("200000"), "{prompt}");
        assert!(prompt.contains("20 parts"), "{prompt}");
        assert_eq!(config.continuation_prompt(3), "Please continue with part 3 of 20.");
    }

    #[test]
    fn config_validation() {
        let mut c = GenerationConfig::default();
        c.num_parts = 0;
        assert!(c.validate().is_err());
        let c = GenerationConfig {
            target_tokens: 0,
            ..GenerationConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_from_partial_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gen.json");
        fs::write(&path, r#"{"endpoint": "http://localhost:1/v1/chat/completions", "num_parts": 3}"#).unwrap();
        let c = GenerationConfig::from_file(&path).unwrap();
        assert_eq!(c.num_parts, 3);
        assert_eq!(c.target_tokens, 200_000);
        assert_eq!(c.retry, RetryPolicy::default());
    }

    #[test]
    fn backoff_is_capped() {
        let p = RetryPolicy {
            max_retries: 10,
            initial_delay_ms: 100,
            max_delay_ms: 1000,
        };
        assert_eq!(p.delay(0), Duration::from_millis(100));
        assert_eq!(p.delay(2), Duration::from_millis(400));
        assert_eq!(p.delay(9), Duration::from_millis(1000));
    }

    #[test]
    fn missing_credentials() {
        let config = GenerationConfig {
            api_key_env: Some("LONGREP_TEST_SURELY_UNSET_VAR".into()),
            ..GenerationConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            llm_generate(&config, "x", dir.path()),
            Err(Error::MissingCredentials(_))
        ));
    }
}
