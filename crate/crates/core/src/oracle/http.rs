//! HTTP client for live completion endpoints.
//!
//! Provider-agnostic wire shape: POST the configured URL with JSON
//! `{"prompt": ..., "max_tokens": 128, "temperature": 0}` and read the
//! completion text at a configurable path into the JSON response (default
//! `"text"`). A bearer token is attached when configured. Transient
//! failures (HTTP 429/5xx, transport errors) are retried with exponential
//! backoff; timeouts surface as their own error.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use log::warn;
use serde_json::{json, Value};

use super::{Oracle, OracleError, OracleQuery};

#[derive(Debug, Clone)]
pub struct HttpOracleConfig {
    pub url: String,
    /// Bearer token; the CLI fills this from ORACLE_API_KEY.
    pub api_key: Option<String>,
    pub max_tokens: u32,
    pub temperature: f64,
    /// Dot-separated path to the completion text in the response JSON.
    pub response_path: String,
    pub timeout_secs: u64,
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub backoff_ms: u64,
    /// Concurrent in-flight request cap.
    pub max_in_flight: usize,
}

impl HttpOracleConfig {
    pub fn new(url: impl Into<String>) -> Self {
        HttpOracleConfig {
            url: url.into(),
            api_key: None,
            max_tokens: 128,
            temperature: 0.0,
            response_path: "text".to_string(),
            timeout_secs: 30,
            max_retries: 3,
            backoff_ms: 250,
            max_in_flight: 4,
        }
    }
}

/// Counting semaphore; `reqwest`'s blocking client is already Sync, this
/// only caps concurrency.
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.semaphore.permits.lock().unwrap() += 1;
        self.semaphore.available.notify_one();
    }
}

pub struct HttpOracle {
    config: HttpOracleConfig,
    client: reqwest::blocking::Client,
    slots: Semaphore,
}

impl HttpOracle {
    pub fn new(config: HttpOracleConfig) -> Result<Self, OracleError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| OracleError::Failure(e.to_string()))?;
        let slots = Semaphore::new(config.max_in_flight);
        Ok(HttpOracle {
            config,
            client,
            slots,
        })
    }

    fn attempt(&self, prompt: &str) -> Result<String, AttemptError> {
        let body = json!({
            "prompt": prompt,
            "max_tokens": self.config.max_tokens,
            "temperature": self.config.temperature,
        });
        let mut request = self.client.post(&self.config.url).json(&body);
        if let Some(key) = &self.config.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                AttemptError::Timeout
            } else {
                AttemptError::Transient(e.to_string())
            }
        })?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(AttemptError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(format!("HTTP {status}")));
        }
        let value: Value = response
            .json()
            .map_err(|e| AttemptError::Fatal(format!("invalid JSON response: {e}")))?;
        let mut field = &value;
        for segment in self.config.response_path.split('.') {
            field = field.get(segment).ok_or_else(|| {
                AttemptError::Fatal(format!(
                    "response JSON has no field {:?}",
                    self.config.response_path
                ))
            })?;
        }
        match field.as_str() {
            Some(text) => Ok(text.to_string()),
            None => Ok(field.to_string()),
        }
    }
}

enum AttemptError {
    Transient(String),
    Timeout,
    Fatal(String),
}

impl Oracle for HttpOracle {
    fn complete(&self, query: &OracleQuery) -> Result<String, OracleError> {
        let _slot = self.slots.acquire();
        let mut last = String::new();
        let mut timed_out = false;
        for attempt in 0..=self.config.max_retries {
            match self.attempt(&query.prompt) {
                Ok(text) => return Ok(text),
                Err(AttemptError::Fatal(msg)) => return Err(OracleError::Failure(msg)),
                Err(AttemptError::Timeout) => {
                    timed_out = true;
                    last = "timed out".to_string();
                }
                Err(AttemptError::Transient(msg)) => {
                    timed_out = false;
                    last = msg;
                }
            }
            if attempt < self.config.max_retries {
                let delay = self.config.backoff_ms.saturating_mul(1 << attempt);
                warn!(
                    "oracle attempt {}/{} failed ({last}); retrying in {delay} ms",
                    attempt + 1,
                    self.config.max_retries + 1
                );
                std::thread::sleep(Duration::from_millis(delay));
            }
        }
        if timed_out {
            Err(OracleError::Timeout)
        } else {
            Err(OracleError::Failure(format!(
                "retries exhausted, last error: {last}"
            )))
        }
    }
}
