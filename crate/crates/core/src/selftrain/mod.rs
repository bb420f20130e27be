//! Iterative self-training over external generator and scorer services.
//!
//! Each iteration signals a retrain on the current labeled set, generates
//! pseudo-responses for the remaining unlabeled inputs, scores them, keeps
//! candidates at or above the selection threshold, and moves them into the
//! labeled set. Per-iteration state persists atomically under a state
//! directory, so an interrupted run resumes from the last completed
//! iteration without duplicating accepted pairs.

mod client;
pub mod mock;
mod state;

pub use client::{
    with_retries, ClientError, GeneratorClient, GeneratorOutput, RetryPolicy, ScorerClient,
};
pub use state::{AcceptedPair, RetrainRequest, StateDir};

use std::collections::HashSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::mix64;
use crate::mr_tree::parse_mr;

/// One labeled pair: template-guided input and its response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub source: String,
    pub target: String,
    #[serde(flatten)]
    pub provenance: Provenance,
}

/// Where a labeled pair came from. Pseudo pairs never overwrite gold ones;
/// the labeled set is append-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "origin", rename_all = "snake_case")]
pub enum Provenance {
    Gold,
    Pseudo {
        iteration: usize,
        score: Option<f64>,
    },
}

/// The labeled set S. `annotated` marks corpora whose targets are bracketed
/// trees; plain-text targets are accepted when it is false.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub pairs: Vec<LabeledPair>,
    pub annotated: bool,
}

impl LabeledSet {
    /// Build a gold labeled set, checking that targets parse when the
    /// corpus is annotated.
    pub fn from_gold(
        pairs: impl IntoIterator<Item = (String, String)>,
        annotated: bool,
    ) -> Result<LabeledSet, SelfTrainError> {
        let pairs: Vec<LabeledPair> = pairs
            .into_iter()
            .map(|(source, target)| LabeledPair {
                source,
                target,
                provenance: Provenance::Gold,
            })
            .collect();
        if annotated {
            for pair in &pairs {
                parse_mr(&pair.target).map_err(|e| {
                    SelfTrainError::InvalidInput(format!(
                        "gold target for {:?} is not an annotated tree: {e}",
                        pair.source
                    ))
                })?;
            }
        }
        Ok(LabeledSet { pairs, annotated })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> HashSet<&str> {
        self.pairs.iter().map(|p| p.source.as_str()).collect()
    }
}

/// The unlabeled set U: template-guided inputs only. Deduplicated on
/// construction so set arithmetic against S stays exact.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledSet {
    pub inputs: Vec<String>,
}

impl UnlabeledSet {
    pub fn new(inputs: impl IntoIterator<Item = String>) -> UnlabeledSet {
        let mut seen = HashSet::new();
        UnlabeledSet {
            inputs: inputs
                .into_iter()
                .filter(|i| seen.insert(i.clone()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Loop configuration. Defaults: 3 iterations, threshold 0.99, batches of
/// 16, parallelism 4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTrainConfig {
    pub iterations: usize,
    pub score_threshold: f64,
    pub batch_size: usize,
    pub parallelism: usize,
    pub seed: u64,
    pub state_dir: PathBuf,
    /// Poll the generator version after signalling a retrain, and proceed
    /// only once it changes. Off by default; mock clients bump their version
    /// synchronously and real deployments opt in.
    pub wait_for_retrain: bool,
    pub retrain_timeout_ms: u64,
    pub retrain_poll_ms: u64,
    pub retry: RetryPolicy,
    /// Vanilla mode: per-iteration accepted-count targets filled by seeded
    /// sampling instead of threshold selection; the scorer goes unused.
    pub vanilla_counts: Option<Vec<usize>>,
}

impl SelfTrainConfig {
    pub fn new(state_dir: impl Into<PathBuf>) -> SelfTrainConfig {
        SelfTrainConfig {
            iterations: 3,
            score_threshold: 0.99,
            batch_size: 16,
            parallelism: 4,
            seed: 0,
            state_dir: state_dir.into(),
            wait_for_retrain: false,
            retrain_timeout_ms: 300_000,
            retrain_poll_ms: 1_000,
            retry: RetryPolicy::default(),
            vanilla_counts: None,
        }
    }

    fn validate(&self) -> Result<(), SelfTrainError> {
        if self.iterations < 1 {
            return Err(SelfTrainError::InvalidConfig(
                "iterations must be >= 1".to_string(),
            ));
        }
        if !(self.score_threshold > 0.0 && self.score_threshold <= 1.0) {
            return Err(SelfTrainError::InvalidConfig(
                "score_threshold must be in (0, 1]".to_string(),
            ));
        }
        if self.batch_size == 0 || self.parallelism == 0 {
            return Err(SelfTrainError::InvalidConfig(
                "batch_size and parallelism must be >= 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Bookkeeping for one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub candidates: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub acceptance_rate: f64,
    pub labeled_size_after: usize,
}

/// A generated candidate with its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub source: String,
    pub candidate: String,
    pub score: f64,
}

#[derive(Debug, Error)]
pub enum SelfTrainError {
    #[error("generator unavailable: {0}")]
    GeneratorUnavailable(ClientError),
    #[error("scorer unavailable: {0}")]
    ScorerUnavailable(ClientError),
    #[error("misaligned response: expected {expected} outputs, got {got}")]
    MisalignedResponse { expected: usize, got: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("state persistence failed: {0}")]
    State(#[from] std::io::Error),
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<SelfTrainError>,
    },
}

impl SelfTrainError {
    fn at(self, iteration: usize) -> SelfTrainError {
        SelfTrainError::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}

/// Generate one aligned candidate per input. Transport failures retry with
/// capped exponential backoff before surfacing.
pub fn generate_pseudo(
    inputs: &[String],
    generator: &dyn GeneratorClient,
    retry: &RetryPolicy,
) -> Result<Vec<(String, String)>, SelfTrainError> {
    if inputs.is_empty() {
        return Ok(Vec::new());
    }
    let output = with_retries(retry, || generator.generate(inputs))
        .map_err(SelfTrainError::GeneratorUnavailable)?;
    if output.outputs.len() != inputs.len() {
        return Err(SelfTrainError::MisalignedResponse {
            expected: inputs.len(),
            got: output.outputs.len(),
        });
    }
    Ok(inputs
        .iter()
        .cloned()
        .zip(output.outputs)
        .collect())
}

/// Score candidates and split them at the threshold: accepted holds pairs
/// with score >= threshold, rejected keeps the rest with their scores for
/// audit. Scores outside [0, 1] clamp with a warning.
pub fn select(
    candidates: &[(String, String)],
    scorer: &dyn ScorerClient,
    threshold: f64,
    config: &SelfTrainConfig,
) -> Result<(Vec<ScoredCandidate>, Vec<ScoredCandidate>), SelfTrainError> {
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for batch in candidates.chunks(config.batch_size.max(1)) {
        let scores = with_retries(&config.retry, || scorer.score(batch))
            .map_err(SelfTrainError::ScorerUnavailable)?;
        if scores.len() != batch.len() {
            return Err(SelfTrainError::MisalignedResponse {
                expected: batch.len(),
                got: scores.len(),
            });
        }
        for ((source, candidate), raw_score) in batch.iter().zip(scores) {
            let score = if (0.0..=1.0).contains(&raw_score) {
                raw_score
            } else {
                log::warn!("clamping out-of-range score {raw_score} for {source:?}");
                raw_score.clamp(0.0, 1.0)
            };
            let scored = ScoredCandidate {
                source: source.clone(),
                candidate: candidate.clone(),
                score,
            };
            if score >= threshold {
                accepted.push(scored);
            } else {
                rejected.push(scored);
            }
        }
    }
    Ok((accepted, rejected))
}

/// Result of a full run: the augmented labeled set and all iteration stats,
/// including iterations replayed from persisted state.
#[derive(Debug, Clone)]
pub struct SelfTrainOutcome {
    pub labeled: LabeledSet,
    pub unlabeled: UnlabeledSet,
    pub stats: Vec<IterationStats>,
}

/// The orchestrator. Clients are borrowed so callers decide between HTTP
/// and mock implementations.
pub struct SelfTrainer<'a, G: GeneratorClient + Sync, S: ScorerClient + Sync> {
    pub config: SelfTrainConfig,
    generator: &'a G,
    scorer: &'a S,
}

impl<'a, G: GeneratorClient + Sync, S: ScorerClient + Sync> SelfTrainer<'a, G, S> {
    pub fn new(config: SelfTrainConfig, generator: &'a G, scorer: &'a S) -> Self {
        SelfTrainer {
            config,
            generator,
            scorer,
        }
    }

    pub fn run(
        &self,
        labeled: LabeledSet,
        unlabeled: UnlabeledSet,
    ) -> Result<SelfTrainOutcome, SelfTrainError> {
        self.run_with_observer(labeled, unlabeled, |_| {})
    }

    /// Run the loop, invoking `observer` after each persisted iteration.
    pub fn run_with_observer(
        &self,
        labeled: LabeledSet,
        unlabeled: UnlabeledSet,
        mut observer: impl FnMut(&IterationStats),
    ) -> Result<SelfTrainOutcome, SelfTrainError> {
        self.config.validate()?;
        let state = StateDir::new(&self.config.state_dir);
        state.ensure()?;

        let mut s = labeled;
        let mut u = unlabeled;
        let gold_sources = s.sources().into_iter().map(str::to_string).collect::<HashSet<_>>();
        u.inputs.retain(|i| !gold_sources.contains(i.as_str()));

        // Resume: replay completed iterations from disk.
        let completed = state.load_completed()?;
        let mut all_stats: Vec<IterationStats> = Vec::new();
        for (stats, accepted) in completed {
            let inputs: HashSet<&str> = accepted.iter().map(|a| a.source.as_str()).collect();
            u.inputs.retain(|i| !inputs.contains(i.as_str()));
            for pair in accepted {
                s.pairs.push(LabeledPair {
                    source: pair.source,
                    target: pair.candidate,
                    provenance: Provenance::Pseudo {
                        iteration: pair.iteration,
                        score: pair.score,
                    },
                });
            }
            all_stats.push(stats);
        }

        let start = all_stats.len() + 1;
        let converged = all_stats.last().is_some_and(|st| st.accepted == 0);

        if !converged {
            for iteration in start..=self.config.iterations {
                let stats = self
                    .run_iteration(iteration, &mut s, &mut u, &state)
                    .map_err(|e| e.at(iteration))?;
                let stop = stats.accepted == 0;
                observer(&stats);
                all_stats.push(stats);
                if stop {
                    break;
                }
            }
        }

        let report = audit_report(&all_stats, &[]);
        state.write_final(&s, &report)?;
        Ok(SelfTrainOutcome {
            labeled: s,
            unlabeled: u,
            stats: all_stats,
        })
    }

    fn run_iteration(
        &self,
        iteration: usize,
        s: &mut LabeledSet,
        u: &mut UnlabeledSet,
        state: &StateDir,
    ) -> Result<IterationStats, SelfTrainError> {
        // Signal a retrain on the current labeled set; training itself is an
        // external job keyed off the request file.
        let snapshot = state.write_labeled_snapshot(s)?;
        let request = RetrainRequest {
            iteration,
            labeled_path: snapshot,
            labeled_size: s.len(),
            score_threshold: self.config.score_threshold,
            batch_size: self.config.batch_size,
            seed: self.config.seed,
        };
        state.write_retrain_request(iteration, &request)?;
        let version_before = if self.config.wait_for_retrain {
            Some(self.probe_version()?)
        } else {
            None
        };
        self.generator
            .notify_retrain(&request)
            .map_err(SelfTrainError::GeneratorUnavailable)?;
        if let Some(before) = version_before {
            self.wait_for_version_change(&before)?;
        }

        // Seeded batching order over the remaining unlabeled inputs.
        let mut order: Vec<usize> = (0..u.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(self.config.seed, iteration as u64));
        order.shuffle(&mut rng);
        let inputs: Vec<String> = order.into_iter().map(|i| u.inputs[i].clone()).collect();

        let candidates = self.generate_all(&inputs)?;

        let (accepted, rejected) = match &self.config.vanilla_counts {
            None => select(
                &candidates,
                self.scorer,
                self.config.score_threshold,
                &self.config,
            )?,
            Some(counts) => {
                let target = counts.get(iteration - 1).copied().unwrap_or(0);
                vanilla_sample(&candidates, target, mix64(self.config.seed, 1000 + iteration as u64))
            }
        };

        let stats = IterationStats {
            iteration,
            candidates: candidates.len(),
            accepted: accepted.len(),
            rejected: rejected.len(),
            acceptance_rate: if candidates.is_empty() {
                0.0
            } else {
                accepted.len() as f64 / candidates.len() as f64
            },
            labeled_size_after: s.len() + accepted.len(),
        };

        let accepted_pairs: Vec<AcceptedPair> = accepted
            .iter()
            .map(|c| AcceptedPair {
                source: c.source.clone(),
                candidate: c.candidate.clone(),
                score: if self.config.vanilla_counts.is_some() {
                    None
                } else {
                    Some(c.score)
                },
                iteration,
            })
            .collect();
        state.persist_iteration(iteration, &accepted_pairs, &rejected, &stats)?;

        // Move accepted pairs from U into S.
        let size_before = s.len();
        let u_before = u.len();
        let accepted_inputs: HashSet<&str> =
            accepted_pairs.iter().map(|a| a.source.as_str()).collect();
        u.inputs.retain(|i| !accepted_inputs.contains(i.as_str()));
        for pair in accepted_pairs {
            s.pairs.push(LabeledPair {
                source: pair.source,
                target: pair.candidate,
                provenance: Provenance::Pseudo {
                    iteration: pair.iteration,
                    score: pair.score,
                },
            });
        }
        debug_assert_eq!(s.len() - size_before, stats.accepted);
        debug_assert_eq!(u_before - u.len(), stats.accepted);

        Ok(stats)
    }

    /// Issue generation batches, up to `parallelism` in flight, preserving
    /// input order in the output.
    fn generate_all(&self, inputs: &[String]) -> Result<Vec<(String, String)>, SelfTrainError> {
        let batches: Vec<&[String]> = inputs.chunks(self.config.batch_size).collect();
        let mut results: Vec<(String, String)> = Vec::with_capacity(inputs.len());
        for group in batches.chunks(self.config.parallelism.max(1)) {
            let outputs: Vec<Result<Vec<(String, String)>, SelfTrainError>> =
                std::thread::scope(|scope| {
                    let handles: Vec<_> = group
                        .iter()
                        .map(|batch| {
                            let batch: &[String] = batch;
                            scope.spawn(move || {
                                generate_pseudo(batch, self.generator, &self.config.retry)
                            })
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("generation worker panicked"))
                        .collect()
                });
            for output in outputs {
                results.extend(output?);
            }
        }
        Ok(results)
    }

    fn probe_version(&self) -> Result<String, SelfTrainError> {
        let probe: [String; 0] = [];
        with_retries(&self.config.retry, || self.generator.generate(&probe))
            .map(|o| o.version)
            .map_err(SelfTrainError::GeneratorUnavailable)
    }

    fn wait_for_version_change(&self, before: &str) -> Result<(), SelfTrainError> {
        let deadline =
            std::time::Instant::now() + std::time::Duration::from_millis(self.config.retrain_timeout_ms);
        loop {
            if self.probe_version()? != before {
                return Ok(());
            }
            if std::time::Instant::now() >= deadline {
                return Err(SelfTrainError::GeneratorUnavailable(ClientError::Transport(
                    "timed out waiting for generator version change after retrain".to_string(),
                )));
            }
            std::thread::sleep(std::time::Duration::from_millis(self.config.retrain_poll_ms));
        }
    }
}

/// Vanilla selection: a seeded uniform sample of `target` candidates,
/// everything else rejected. Scores are unknown and reported as 0.
fn vanilla_sample(
    candidates: &[(String, String)],
    target: usize,
    seed: u64,
) -> (Vec<ScoredCandidate>, Vec<ScoredCandidate>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..candidates.len()).collect();
    indices.shuffle(&mut rng);
    let chosen: HashSet<usize> = indices.into_iter().take(target).collect();
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for (i, (source, candidate)) in candidates.iter().enumerate() {
        let scored = ScoredCandidate {
            source: source.clone(),
            candidate: candidate.clone(),
            score: 0.0,
        };
        if chosen.contains(&i) {
            accepted.push(scored);
        } else {
            rejected.push(scored);
        }
    }
    (accepted, rejected)
}

/// The audit document: per-iteration counts plus the declining-additions
/// trend check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub iterations: Vec<IterationStats>,
    /// `None` when fewer than two iterations ran.
    pub additions_non_increasing: Option<bool>,
    pub total_candidates: usize,
    pub total_accepted: usize,
    pub rejected_samples: Vec<ScoredCandidate>,
}

/// Summarize a run. `rejected_samples` is carried through verbatim for
/// inspection.
pub fn audit_report(stats: &[IterationStats], rejected_samples: &[ScoredCandidate]) -> AuditReport {
    let additions: Vec<usize> = stats.iter().map(|s| s.accepted).collect();
    let additions_non_increasing = if additions.len() >= 2 {
        Some(additions.windows(2).all(|w| w[1] <= w[0]))
    } else {
        None
    };
    AuditReport {
        iterations: stats.to_vec(),
        additions_non_increasing,
        total_candidates: stats.iter().map(|s| s.candidates).sum(),
        total_accepted: stats.iter().map(|s| s.accepted).sum(),
        rejected_samples: rejected_samples.to_vec(),
    }
}

impl std::fmt::Display for AuditReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:>5} {:>12} {:>10} {:>10} {:>8} {:>14}",
            "iter", "candidates", "accepted", "rejected", "rate", "labeled after"
        )?;
        for s in &self.iterations {
            writeln!(
                f,
                "{:>5} {:>12} {:>10} {:>10} {:>8.3} {:>14}",
                s.iteration, s.candidates, s.accepted, s.rejected, s.acceptance_rate, s.labeled_size_after
            )?;
        }
        match self.additions_non_increasing {
            Some(true) => writeln!(f, "additions non-increasing across iterations: yes"),
            Some(false) => writeln!(f, "additions non-increasing across iterations: NO"),
            None => writeln!(f, "additions trend: not applicable (single iteration)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::mock::{MockGenerator, OracleScorer, ScriptedScorer};
    use super::*;
    use std::collections::HashMap;

    fn gold_map(n: usize) -> HashMap<String, String> {
        (0..n)
            .map(|i| (format!("input {i}"), format!("response {i}")))
            .collect()
    }

    fn test_config(dir: &std::path::Path) -> SelfTrainConfig {
        let mut config = SelfTrainConfig::new(dir);
        config.retry = RetryPolicy {
            max_attempts: 2,
            base_delay_ms: 1,
            max_delay_ms: 2,
        };
        config
    }

    #[test]
    fn generation_aligns_one_candidate_per_input() {
        let gold = gold_map(16);
        let generator = MockGenerator::new(gold.clone(), 0.0, 1);
        let inputs: Vec<String> = gold.keys().cloned().collect();
        let pairs = generate_pseudo(&inputs, &generator, &RetryPolicy::default()).unwrap();
        assert_eq!(pairs.len(), 16);
        for (input, candidate) in pairs {
            assert_eq!(candidate, gold[&input]);
        }
    }

    #[test]
    fn short_generator_response_is_misaligned() {
        struct Short;
        impl GeneratorClient for Short {
            fn generate(&self, inputs: &[String]) -> Result<GeneratorOutput, ClientError> {
                Ok(GeneratorOutput {
                    outputs: inputs.iter().skip(1).cloned().collect(),
                    version: "short".to_string(),
                })
            }
        }
        let inputs: Vec<String> = (0..16).map(|i| format!("x{i}")).collect();
        match generate_pseudo(&inputs, &Short, &RetryPolicy::default()) {
            Err(SelfTrainError::MisalignedResponse { expected: 16, got: 15 }) => {}
            other => panic!("expected misalignment, got {other:?}"),
        }
    }

    #[test]
    fn transport_failures_retry_then_surface() {
        let gold = gold_map(4);
        let flaky = mock::FlakyGenerator::new(MockGenerator::new(gold.clone(), 0.0, 1), 2);
        let inputs: Vec<String> = gold.keys().cloned().collect();
        let retry = RetryPolicy {
            max_attempts: 3,
            base_delay_ms: 1,
            max_delay_ms: 2,
        };
        assert!(generate_pseudo(&inputs, &flaky, &retry).is_ok());

        let stubborn = mock::FlakyGenerator::new(MockGenerator::new(gold, 0.0, 1), 100);
        match generate_pseudo(&inputs, &stubborn, &retry) {
            Err(SelfTrainError::GeneratorUnavailable(_)) => {}
            other => panic!("expected unavailable, got {other:?}"),
        }
    }

    #[test]
    fn selection_partitions_at_threshold() {
        let candidates: Vec<(String, String)> = (0..3)
            .map(|i| (format!("s{i}"), format!("c{i}")))
            .collect();
        let scorer = ScriptedScorer::new(vec![0.995, 0.5, 0.99]);
        let config = SelfTrainConfig::new("unused");
        let (accepted, rejected) = select(&candidates, &scorer, 0.99, &config).unwrap();
        assert_eq!(accepted.len(), 2);
        assert_eq!(rejected.len(), 1);
        assert_eq!(rejected[0].score, 0.5);
    }

    #[test]
    fn empty_candidates_select_nothing() {
        let scorer = ScriptedScorer::new(vec![]);
        let config = SelfTrainConfig::new("unused");
        let (accepted, rejected) = select(&[], &scorer, 0.99, &config).unwrap();
        assert!(accepted.is_empty() && rejected.is_empty());
    }

    #[test]
    fn oracle_at_threshold_one_accepts_exact_matches_only() {
        let gold = gold_map(20);
        let generator = MockGenerator::new(gold.clone(), 0.4, 9);
        let scorer = OracleScorer::new(gold.clone());
        let inputs: Vec<String> = {
            let mut v: Vec<String> = gold.keys().cloned().collect();
            v.sort();
            v
        };
        let candidates = generate_pseudo(&inputs, &generator, &RetryPolicy::default()).unwrap();
        let config = SelfTrainConfig::new("unused");
        let (accepted, _) = select(&candidates, &scorer, 1.0, &config).unwrap();
        for c in &accepted {
            assert_eq!(c.candidate, gold[&c.source]);
        }
        let exact = candidates
            .iter()
            .filter(|(s, c)| gold[s] == *c)
            .count();
        assert_eq!(accepted.len(), exact);
    }

    #[test]
    fn out_of_range_scores_clamp() {
        let candidates = vec![("a".to_string(), "b".to_string())];
        let scorer = ScriptedScorer::new(vec![1.7]);
        let config = SelfTrainConfig::new("unused");
        let (accepted, _) = select(&candidates, &scorer, 0.99, &config).unwrap();
        assert_eq!(accepted[0].score, 1.0);
    }

    #[test]
    fn threshold_monotonicity_on_fixed_scores() {
        let candidates: Vec<(String, String)> = (0..50)
            .map(|i| (format!("s{i}"), format!("c{i}")))
            .collect();
        let config = SelfTrainConfig::new("unused");
        for seed in 0..20u64 {
            let scores: Vec<f64> = (0..50)
                .map(|i| crate::hashing::to_unit_fraction(mix64(seed, i)))
                .collect();
            let sets: Vec<HashSet<String>> = [0.999, 0.99, 0.9]
                .iter()
                .map(|&t| {
                    let scorer = ScriptedScorer::new(scores.clone());
                    let (accepted, _) = select(&candidates, &scorer, t, &config).unwrap();
                    accepted.into_iter().map(|c| c.source).collect()
                })
                .collect();
            assert!(sets[0].is_subset(&sets[1]));
            assert!(sets[1].is_subset(&sets[2]));
        }
    }

    #[test]
    fn loop_converges_and_conserves_counts() {
        let dir = tempfile::tempdir().unwrap();
        let gold = gold_map(60);
        let generator = MockGenerator::new(gold.clone(), 0.3, 5);
        let scorer = OracleScorer::new(gold.clone());
        let mut config = test_config(dir.path());
        config.seed = 5;

        let labeled = LabeledSet::from_gold(
            vec![("seed input".to_string(), "seed response".to_string())],
            false,
        )
        .unwrap();
        let mut inputs: Vec<String> = gold.keys().cloned().collect();
        inputs.sort();
        let unlabeled = UnlabeledSet::new(inputs);

        let trainer = SelfTrainer::new(config, &generator, &scorer);
        let outcome = trainer.run(labeled, unlabeled).unwrap();

        let mut size = 1usize;
        let mut remaining = 60usize;
        for stats in &outcome.stats {
            assert_eq!(stats.accepted + stats.rejected, stats.candidates);
            size += stats.accepted;
            remaining -= stats.accepted;
            assert_eq!(stats.labeled_size_after, size);
        }
        assert_eq!(outcome.labeled.len(), size);
        assert_eq!(outcome.unlabeled.len(), remaining);

        // No input sits in both sets.
        let sources = outcome.labeled.sources();
        for input in &outcome.unlabeled.inputs {
            assert!(!sources.contains(input.as_str()));
        }
        // Nothing corrupted was accepted: the oracle only scores exact matches 1.0.
        for pair in &outcome.labeled.pairs {
            if let Provenance::Pseudo { .. } = pair.provenance {
                assert_eq!(&outcome_gold(&gold, &pair.source), &pair.target);
            }
        }
    }

    fn outcome_gold(gold: &HashMap<String, String>, source: &str) -> String {
        gold.get(source).cloned().unwrap_or_default()
    }

    #[test]
    fn zero_acceptance_stops_after_first_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let gold = gold_map(10);
        // Full corruption: every candidate differs from gold, oracle rejects all.
        let generator = MockGenerator::new(gold.clone(), 1.0, 2);
        let scorer = OracleScorer::new(gold.clone());
        let config = test_config(dir.path());

        let labeled = LabeledSet::from_gold(Vec::<(String, String)>::new(), false).unwrap();
        let unlabeled = UnlabeledSet::new(gold.keys().cloned());
        let trainer = SelfTrainer::new(config, &generator, &scorer);
        let outcome = trainer.run(labeled, unlabeled).unwrap();

        assert_eq!(outcome.stats.len(), 1);
        assert_eq!(outcome.stats[0].accepted, 0);
        assert_eq!(outcome.labeled.len(), 0);
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let gold = gold_map(40);
        let mut inputs: Vec<String> = gold.keys().cloned().collect();
        inputs.sort();

        let run = |dir: &std::path::Path, iterations_first: Option<usize>| {
            let generator = MockGenerator::new(gold.clone(), 0.3, 13);
            let scorer = OracleScorer::new(gold.clone());
            let mut config = test_config(dir);
            config.seed = 21;
            if let Some(first) = iterations_first {
                let mut partial = config.clone();
                partial.iterations = first;
                let trainer = SelfTrainer::new(partial, &generator, &scorer);
                trainer
                    .run(
                        LabeledSet::from_gold(Vec::<(String, String)>::new(), false).unwrap(),
                        UnlabeledSet::new(inputs.clone()),
                    )
                    .unwrap();
            }
            // Fresh clients, as a restarted process would have.
            let generator = MockGenerator::new(gold.clone(), 0.3, 13);
            let scorer = OracleScorer::new(gold.clone());
            let trainer = SelfTrainer::new(config, &generator, &scorer);
            trainer
                .run(
                    LabeledSet::from_gold(Vec::<(String, String)>::new(), false).unwrap(),
                    UnlabeledSet::new(inputs.clone()),
                )
                .unwrap()
        };

        let dir_a = tempfile::tempdir().unwrap();
        let uninterrupted = run(dir_a.path(), None);
        let dir_b = tempfile::tempdir().unwrap();
        let resumed = run(dir_b.path(), Some(1));

        assert_eq!(uninterrupted.labeled, resumed.labeled);
        assert_eq!(uninterrupted.stats, resumed.stats);
        assert_eq!(uninterrupted.unlabeled, resumed.unlabeled);
    }

    #[test]
    fn vanilla_mode_samples_requested_counts() {
        let dir = tempfile::tempdir().unwrap();
        let gold = gold_map(30);
        let generator = MockGenerator::new(gold.clone(), 0.0, 3);
        let scorer = OracleScorer::new(gold.clone());
        let mut config = test_config(dir.path());
        config.vanilla_counts = Some(vec![10, 5, 2]);

        let trainer = SelfTrainer::new(config, &generator, &scorer);
        let outcome = trainer
            .run(
                LabeledSet::from_gold(Vec::<(String, String)>::new(), false).unwrap(),
                UnlabeledSet::new(gold.keys().cloned()),
            )
            .unwrap();
        let additions: Vec<usize> = outcome.stats.iter().map(|s| s.accepted).collect();
        assert_eq!(additions, vec![10, 5, 2]);
    }

    #[test]
    fn audit_report_checks_declining_additions() {
        let stats = |adds: &[usize]| -> Vec<IterationStats> {
            adds.iter()
                .enumerate()
                .map(|(i, &a)| IterationStats {
                    iteration: i + 1,
                    candidates: a + 10,
                    accepted: a,
                    rejected: 10,
                    acceptance_rate: 0.0,
                    labeled_size_after: 0,
                })
                .collect()
        };
        // A run shaped like the reference accounting: a large first batch of
        // additions followed by a smaller one.
        let declining = audit_report(&stats(&[14_742, 4_170]), &[]);
        assert_eq!(declining.additions_non_increasing, Some(true));

        let single = audit_report(&stats(&[100]), &[]);
        assert_eq!(single.additions_non_increasing, None);

        let increasing = audit_report(&stats(&[5, 9]), &[]);
        assert_eq!(increasing.additions_non_increasing, Some(false));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let gold = gold_map(2);
        let generator = MockGenerator::new(gold.clone(), 0.0, 1);
        let scorer = OracleScorer::new(gold);
        let mut config = test_config(dir.path());
        config.score_threshold = 0.0;
        let trainer = SelfTrainer::new(config, &generator, &scorer);
        assert!(matches!(
            trainer.run(
                LabeledSet::from_gold(Vec::<(String, String)>::new(), false).unwrap(),
                UnlabeledSet::new(Vec::new()),
            ),
            Err(SelfTrainError::InvalidConfig(_))
        ));
    }

    #[test]
    fn annotated_gold_targets_must_parse() {
        let result = LabeledSet::from_gold(
            vec![("x".to_string(), "not a tree".to_string())],
            true,
        );
        assert!(matches!(result, Err(SelfTrainError::InvalidInput(_))));
    }
}
