//! Client contracts for the external generator and scorer services, plus
//! retry-with-backoff shared by every call site.
//!
//! Wire shapes (implemented over HTTP by the CLI, in-process by mocks):
//!
//! - generator: `{"inputs": [string, ...]}` →
//!   `{"outputs": [string, ...], "version": string}`, outputs aligned by index
//! - scorer: `{"pairs": [{"source": string, "candidate": string}, ...]}` →
//!   `{"scores": [number, ...]}`, aligned by index

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::state::RetrainRequest;

/// Generator response: aligned outputs and the serving model's version
/// string, which changes when a retrain completes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorOutput {
    pub outputs: Vec<String>,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClientError {
    /// Connection-level failure; retryable.
    Transport(String),
    /// The service answered but with an unusable body; not retryable.
    Protocol(String),
}

impl fmt::Display for ClientError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClientError::Transport(msg) => write!(f, "transport error: {msg}"),
            ClientError::Protocol(msg) => write!(f, "protocol error: {msg}"),
        }
    }
}

impl std::error::Error for ClientError {}

/// Batch text generation. Implementations must be idempotent per batch:
/// the loop retries transport failures.
pub trait GeneratorClient: Sync {
    fn generate(&self, inputs: &[String]) -> Result<GeneratorOutput, ClientError>;

    /// Signal that a retrain request was issued; default no-op. Real
    /// deployments watch the request file instead.
    fn notify_retrain(&self, request: &RetrainRequest) -> Result<(), ClientError> {
        let _ = request;
        Ok(())
    }
}

/// Batch (source, candidate) quality scoring into [0, 1].
pub trait ScorerClient: Sync {
    fn score(&self, pairs: &[(String, String)]) -> Result<Vec<f64>, ClientError>;
}

/// Capped exponential backoff for transport failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: usize,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            base_delay_ms: 100,
            max_delay_ms: 2_000,
        }
    }
}

/// Run `call`, retrying transport failures with capped exponential backoff.
/// Protocol errors surface immediately.
pub fn with_retries<T>(
    policy: &RetryPolicy,
    mut call: impl FnMut() -> Result<T, ClientError>,
) -> Result<T, ClientError> {
    let attempts = policy.max_attempts.max(1);
    let mut delay = policy.base_delay_ms;
    for attempt in 1..=attempts {
        match call() {
            Ok(value) => return Ok(value),
            Err(err @ ClientError::Protocol(_)) => return Err(err),
            Err(err @ ClientError::Transport(_)) => {
                if attempt == attempts {
                    return Err(err);
                }
                log::warn!("attempt {attempt}/{attempts} failed ({err}), backing off {delay}ms");
                std::thread::sleep(Duration::from_millis(delay));
                delay = (delay.saturating_mul(2)).min(policy.max_delay_ms);
            }
        }
    }
    unreachable!("loop returns on the final attempt")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn retries_stop_at_max_attempts() {
        let calls = AtomicUsize::new(0);
        let policy = RetryPolicy {
            max_attempts: 3,
            base_delay_ms: 1,
            max_delay_ms: 1,
        };
        let result: Result<(), ClientError> = with_retries(&policy, || {
            calls.fetch_add(1, Ordering::SeqCst);
            Err(ClientError::Transport("down".to_string()))
        });
        assert!(result.is_err());
        assert_eq!(calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn protocol_errors_do_not_retry() {
        let calls = AtomicUsize::new(0);
        let policy = RetryPolicy::default();
        let result: Result<(), ClientError> = with_retries(&policy, || {
            calls.fetch_add(1, Ordering::SeqCst);
            Err(ClientError::Protocol("bad json".to_string()))
        });
        assert!(result.is_err());
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn success_after_failures_is_returned() {
        let calls = AtomicUsize::new(0);
        let policy = RetryPolicy {
            max_attempts: 5,
            base_delay_ms: 1,
            max_delay_ms: 1,
        };
        let result = with_retries(&policy, || {
            if calls.fetch_add(1, Ordering::SeqCst) < 2 {
                Err(ClientError::Transport("flaky".to_string()))
            } else {
                Ok(7)
            }
        });
        assert_eq!(result.unwrap(), 7);
    }
}
