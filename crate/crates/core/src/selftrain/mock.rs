//! Scripted in-process clients: the offline test double for the whole loop.
//!
//! The mock generator returns the gold reference for known inputs, corrupting
//! a seeded fraction of them; corruption decisions depend on (seed, model
//! version, input) only, so interrupted runs regenerate identical candidates.
//! The oracle scorer returns 1.0 exactly when the candidate matches the gold
//! reference.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::hashing::{fnv1a, mix64, to_unit_fraction};

use super::client::{ClientError, GeneratorClient, GeneratorOutput, ScorerClient};
use super::state::RetrainRequest;

/// Echoes gold responses with a configurable seeded corruption rate.
pub struct MockGenerator {
    gold: HashMap<String, String>,
    corruption_rate: f64,
    seed: u64,
    /// Retrain count; notify_retrain pins it to the iteration index so a
    /// resumed run sees the same "model" as an uninterrupted one.
    version: AtomicU64,
}

impl MockGenerator {
    pub fn new(gold: HashMap<String, String>, corruption_rate: f64, seed: u64) -> MockGenerator {
        MockGenerator {
            gold,
            corruption_rate,
            seed,
            version: AtomicU64::new(0),
        }
    }

    fn corrupts(&self, input: &str, version: u64) -> bool {
        let z = mix64(mix64(self.seed, version), fnv1a(input));
        to_unit_fraction(z) < self.corruption_rate
    }

    /// The corrupted variant repeats the leading word, mimicking the
    /// repetition failure mode of undertrained generators.
    fn corrupt(response: &str) -> String {
        match response.split_whitespace().next() {
            Some(first) => format!("{first} {response}"),
            None => "...".to_string(),
        }
    }
}

impl GeneratorClient for MockGenerator {
    fn generate(&self, inputs: &[String]) -> Result<GeneratorOutput, ClientError> {
        let version = self.version.load(Ordering::SeqCst);
        let outputs = inputs
            .iter()
            .map(|input| match self.gold.get(input) {
                Some(gold) if self.corrupts(input, version) => Self::corrupt(gold),
                Some(gold) => gold.clone(),
                None => format!("unknown input: {input}"),
            })
            .collect();
        Ok(GeneratorOutput {
            outputs,
            version: format!("mock-v{version}"),
        })
    }

    fn notify_retrain(&self, request: &RetrainRequest) -> Result<(), ClientError> {
        self.version.store(request.iteration as u64, Ordering::SeqCst);
        Ok(())
    }
}

/// Scores 1.0 on exact match with the gold response for the source's input,
/// 0.0 otherwise.
pub struct OracleScorer {
    gold: HashMap<String, String>,
}

impl OracleScorer {
    pub fn new(gold: HashMap<String, String>) -> OracleScorer {
        OracleScorer { gold }
    }
}

impl ScorerClient for OracleScorer {
    fn score(&self, pairs: &[(String, String)]) -> Result<Vec<f64>, ClientError> {
        Ok(pairs
            .iter()
            .map(|(source, candidate)| {
                if self.gold.get(source) == Some(candidate) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect())
    }
}

/// Replays a fixed score sequence across calls, for threshold tests.
pub struct ScriptedScorer {
    scores: Mutex<std::collections::VecDeque<f64>>,
}

impl ScriptedScorer {
    pub fn new(scores: Vec<f64>) -> ScriptedScorer {
        ScriptedScorer {
            scores: Mutex::new(scores.into()),
        }
    }
}

impl ScorerClient for ScriptedScorer {
    fn score(&self, pairs: &[(String, String)]) -> Result<Vec<f64>, ClientError> {
        let mut queue = self.scores.lock().expect("scorer mutex");
        let mut out = Vec::with_capacity(pairs.len());
        for _ in pairs {
            out.push(queue.pop_front().ok_or_else(|| {
                ClientError::Protocol("scripted scorer ran out of scores".to_string())
            })?);
        }
        Ok(out)
    }
}

/// Fails with a transport error for the first `failures` calls, then
/// delegates. Exercises the retry path.
pub struct FlakyGenerator<G: GeneratorClient> {
    inner: G,
    failures: usize,
    calls: AtomicUsize,
}

impl<G: GeneratorClient> FlakyGenerator<G> {
    pub fn new(inner: G, failures: usize) -> FlakyGenerator<G> {
        FlakyGenerator {
            inner,
            failures,
            calls: AtomicUsize::new(0),
        }
    }
}

impl<G: GeneratorClient> GeneratorClient for FlakyGenerator<G> {
    fn generate(&self, inputs: &[String]) -> Result<GeneratorOutput, ClientError> {
        if self.calls.fetch_add(1, Ordering::SeqCst) < self.failures {
            return Err(ClientError::Transport("connection refused".to_string()));
        }
        self.inner.generate(inputs)
    }

    fn notify_retrain(&self, request: &RetrainRequest) -> Result<(), ClientError> {
        self.inner.notify_retrain(request)
    }
}
