//! Blocking chat-completion client with bounded concurrency and retries.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{build_prompt, parse_response, SensingError, SensorReport};

/// Exponential backoff between attempts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: usize,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 5, initial_backoff_ms: 500, max_backoff_ms: 8_000, multiplier: 2.0 }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1` (attempts count from 1).
    pub fn backoff(&self, attempt: usize) -> Duration {
        let factor = self.multiplier.powi(attempt.saturating_sub(1) as i32);
        let ms = (self.initial_backoff_ms as f64 * factor).min(self.max_backoff_ms as f64);
        Duration::from_millis(ms as u64)
    }
}

/// Endpoint, model and sampling settings. The bearer token is read from the
/// environment variable named by `api_key_env`, never from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub endpoint: String,
    pub model: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
    pub repetition_penalty: f64,
    pub timeout_secs: f64,
    pub max_concurrent: usize,
    pub retry: RetryPolicy,
    pub api_key_env: String,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            max_tokens: 100,
            temperature: 0.7,
            top_p: 0.7,
            top_k: 50,
            repetition_penalty: 50.0,
            timeout_secs: 60.0,
            max_concurrent: 4,
            retry: RetryPolicy::default(),
            api_key_env: "SENSOR_API_KEY".into(),
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<(), SensingError> {
        let problem = if self.endpoint.is_empty() {
            Some("endpoint is not set")
        } else if self.model.is_empty() {
            Some("model is not set")
        } else if self.max_concurrent == 0 || self.retry.max_attempts == 0 || self.max_tokens == 0 {
            Some("limits must be positive")
        } else if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            Some("timeout must be positive")
        } else {
            None
        };
        match problem {
            Some(p) => Err(SensingError::InvalidConfig(p.into())),
            None => Ok(()),
        }
    }

    /// Request body in the common chat-completions shape.
    pub fn request_body(&self, prompt: &str) -> Value {
        json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": prompt }],
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "top_k": self.top_k,
            "repetition_penalty": self.repetition_penalty,
        })
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Limiter {
    in_flight: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(limit: usize) -> Self {
        Self { in_flight: Mutex::new(0), freed: Condvar::new(), limit }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().expect("limiter lock");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("limiter lock");
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().expect("limiter lock") -= 1;
        self.0.freed.notify_one();
    }
}

enum Attempt {
    Reply(String),
    RateLimited,
    Transport(String),
}

/// Queries a remote model; safe to share across threads.
#[derive(Debug)]
pub struct RemoteSensor {
    config: SensorConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
    limiter: Limiter,
}

impl RemoteSensor {
    pub fn new(config: SensorConfig) -> Result<Self, SensingError> {
        config.validate()?;
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let limiter = Limiter::new(config.max_concurrent);
        Ok(Self { config, agent, api_key, limiter })
    }

    pub fn config(&self) -> &SensorConfig {
        &self.config
    }

    /// Prompts the model with `comment` and parses its reply.
    ///
    /// Transport failures, HTTP 429/5xx and unparseable replies are retried with
    /// exponential backoff; other HTTP errors fail immediately.
    pub fn sense(&self, comment: &str) -> Result<SensorReport, SensingError> {
        let body = self.config.request_body(&build_prompt(comment)?);
        let attempts = self.config.retry.max_attempts;
        let mut last = SensingError::Transport("no attempt made".into());
        for attempt in 1..=attempts {
            let outcome = {
                let _permit = self.limiter.acquire();
                self.post(&body)?
            };
            last = match outcome {
                Attempt::Reply(content) => match parse_response(&content) {
                    Ok(report) => return Ok(report),
                    Err(e) => e,
                },
                Attempt::RateLimited => SensingError::RateLimited { attempts },
                Attempt::Transport(msg) => SensingError::Transport(msg),
            };
            if attempt < attempts {
                std::thread::sleep(self.config.retry.backoff(attempt));
            }
        }
        Err(if last.is_parse_failure() {
            SensingError::ParseFailedAfterRetries { attempts, last: last.to_string() }
        } else {
            last
        })
    }

    /// Senses every comment with up to `max_concurrent` requests in flight; results keep input order.
    pub fn sense_batch(&self, comments: &[String]) -> Vec<Result<SensorReport, SensingError>> {
        let next = AtomicUsize::new(0);
        let results: Vec<Mutex<Option<Result<SensorReport, SensingError>>>> =
            comments.iter().map(|_| Mutex::new(None)).collect();
        let workers = self.config.max_concurrent.min(comments.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(comment) = comments.get(i) else { break };
                    *results[i].lock().expect("result slot") = Some(self.sense(comment));
                });
            }
        });
        results
            .into_iter()
            .map(|slot| slot.into_inner().expect("result slot").expect("every slot is filled"))
            .collect()
    }

    fn post(&self, body: &Value) -> Result<Attempt, SensingError> {
        let mut request = self.agent.post(&self.config.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = match request.send_json(body) {
            Ok(r) => r,
            Err(e) => return Ok(Attempt::Transport(e.to_string())),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Ok(Attempt::Transport(e.to_string())),
        };
        match status {
            200..=299 => Ok(extract_content(&text).map_or_else(|| Attempt::Reply(String::new()), Attempt::Reply)),
            429 => Ok(Attempt::RateLimited),
            500..=599 => Ok(Attempt::Transport(format!("HTTP {status}"))),
            _ => Err(SensingError::Http { status, body: text.chars().take(500).collect() }),
        }
    }
}

/// Generated text of a chat or plain completion response.
fn extract_content(body: &str) -> Option<String> {
    let value: Value = serde_json::from_str(body).ok()?;
    let choice = value.get("choices")?.get(0)?;
    choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_and_caps() {
        let policy = RetryPolicy { max_attempts: 6, initial_backoff_ms: 100, max_backoff_ms: 350, multiplier: 2.0 };
        assert_eq!(policy.backoff(1), Duration::from_millis(100));
        assert_eq!(policy.backoff(2), Duration::from_millis(200));
        assert_eq!(policy.backoff(3), Duration::from_millis(350));
    }

    #[test]
    fn request_body_carries_sampling_parameters() {
        let config = SensorConfig { endpoint: "http://x".into(), model: "m".into(), ..SensorConfig::default() };
        let body = config.request_body("p");
        assert_eq!(body["max_tokens"], 100);
        assert_eq!(body["top_k"], 50);
        assert_eq!(body["temperature"], 0.7);
        assert_eq!(body["top_p"], 0.7);
        assert_eq!(body["repetition_penalty"], 50.0);
        assert_eq!(body["messages"][0]["content"], "p");
    }

    #[test]
    fn content_extraction() {
        assert_eq!(extract_content(r#"{"choices":[{"message":{"content":"hi"}}]}"#).as_deref(), Some("hi"));
        assert_eq!(extract_content(r#"{"choices":[{"text":"yo"}]}"#).as_deref(), Some("yo"));
        assert_eq!(extract_content("nope"), None);
    }

    #[test]
    fn missing_endpoint_is_a_config_error() {
        assert!(matches!(RemoteSensor::new(SensorConfig::default()), Err(SensingError::InvalidConfig(_))));
    }
}
