//! HTTP client for an external entailment model.
//!
//! Wire protocol: `POST <endpoint>` with `{"premise": "...", "hypotheses": ["..."]}`,
//! answered by `{"probabilities": [p, ...]}`, one probability per hypothesis.
//! Transport failures, timeouts, 429 and 5xx responses are retried with
//! exponential backoff; protocol violations fail immediately.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::scorer::{EntailmentScorer, Hypothesis, ScorerError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RemoteError {
    #[error("no scorer endpoint configured")]
    NotConfigured,
    #[error("request timed out ({attempts} attempts)")]
    Timeout { attempts: usize },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: usize, message: String },
    #[error("server answered HTTP {status} ({attempts} attempts)")]
    Status { status: u16, attempts: usize },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("expected {expected} probabilities, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("probability {value} at position {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
}

impl RemoteError {
    fn retryable(&self) -> bool {
        match self {
            RemoteError::Timeout { .. } | RemoteError::Transport { .. } => true,
            RemoteError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }

    fn with_attempts(self, n: usize) -> Self {
        match self {
            RemoteError::Timeout { .. } => RemoteError::Timeout { attempts: n },
            RemoteError::Transport { message, .. } => RemoteError::Transport { attempts: n, message },
            RemoteError::Status { status, .. } => RemoteError::Status { status, attempts: n },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    /// Retries after the first attempt.
    pub max_retries: usize,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff_ms: u64,
    /// Upper bound on concurrent requests.
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: None,
            timeout_ms: 10_000,
            max_retries: 3,
            backoff_ms: 200,
            max_in_flight: 8,
        }
    }
}

#[derive(Serialize)]
struct Request<'a> {
    premise: &'a str,
    hypotheses: Vec<&'a str>,
}

#[derive(Deserialize)]
struct Response {
    probabilities: Vec<f64>,
}

#[derive(Debug)]
pub struct RemoteScorer {
    endpoint: String,
    cfg: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteScorer {
    pub fn new(cfg: RemoteConfig) -> Result<Self, RemoteError> {
        let endpoint = cfg
            .endpoint
            .clone()
            .filter(|e| !e.trim().is_empty())
            .ok_or(RemoteError::NotConfigured)?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(cfg.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { endpoint, cfg, agent })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.cfg
    }

    fn attempt(&self, body: &Request<'_>) -> Result<Vec<f64>, RemoteError> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("content-type", "application/json")
            .send_json(body)
            .map_err(classify)?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(RemoteError::Status { status, attempts: 1 });
        }
        let text = resp.body_mut().read_to_string().map_err(classify)?;
        let parsed: Response = serde_json::from_str(&text).map_err(|e| RemoteError::Malformed(e.to_string()))?;
        Ok(parsed.probabilities)
    }

    /// Scores `hypotheses` against `premise`, order preserving.
    pub fn remote_score(&self, premise: &str, hypotheses: &[&str]) -> Result<Vec<f64>, RemoteError> {
        let body = Request {
            premise,
            hypotheses: hypotheses.to_vec(),
        };
        let mut attempts = 0;
        let probs = loop {
            attempts += 1;
            match self.attempt(&body) {
                Ok(p) => break p,
                Err(e) if e.retryable() && attempts <= self.cfg.max_retries => {
                    let delay = self.cfg.backoff_ms.saturating_mul(1 << (attempts - 1).min(16));
                    log::warn!(
                        "scorer request failed ({e}); retry {attempts}/{} in {delay} ms",
                        self.cfg.max_retries
                    );
                    std::thread::sleep(Duration::from_millis(delay));
                }
                Err(e) => return Err(e.with_attempts(attempts)),
            }
        };
        if probs.len() != hypotheses.len() {
            return Err(RemoteError::LengthMismatch {
                expected: hypotheses.len(),
                got: probs.len(),
            });
        }
        if let Some((index, &value)) = probs.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(RemoteError::OutOfRange { index, value });
        }
        Ok(probs)
    }
}

fn classify(err: ureq::Error) -> RemoteError {
    match err {
        ureq::Error::Timeout(_) => RemoteError::Timeout { attempts: 1 },
        ureq::Error::Io(e) if matches!(e.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock) => {
            RemoteError::Timeout { attempts: 1 }
        }
        ureq::Error::StatusCode(status) => RemoteError::Status { status, attempts: 1 },
        ureq::Error::Json(e) => RemoteError::Malformed(e.to_string()),
        other => RemoteError::Transport {
            attempts: 1,
            message: other.to_string(),
        },
    }
}

impl EntailmentScorer for RemoteScorer {
    fn score(&self, premise: &str, hypotheses: &[Hypothesis]) -> Result<Vec<f64>, ScorerError> {
        let texts: Vec<&str> = hypotheses.iter().map(|h| h.text.as_str()).collect();
        Ok(self.remote_score(premise, &texts)?)
    }

    fn name(&self) -> &str {
        "remote"
    }
}
