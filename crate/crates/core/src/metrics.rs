//! Evaluation metrics over (input MR, reference, prediction) corpora:
//! tree accuracy, slot error rate, and corpus BLEU-4.

use serde::{Deserialize, Serialize};

use crate::mr_tree::{parse_mr, MrTree};
use crate::text;

/// One scoreable record. `slot_values` is extracted from the input MR at
/// construction: every argument node's subtree text, depth-first.
#[derive(Debug, Clone)]
pub struct EvalRecord {
    pub id: String,
    pub input_mr: MrTree,
    pub reference: String,
    pub prediction: String,
    pub slot_values: Vec<(String, String)>,
}

impl EvalRecord {
    pub fn new(
        id: impl Into<String>,
        input_mr: MrTree,
        reference: impl Into<String>,
        prediction: impl Into<String>,
    ) -> EvalRecord {
        let slot_values = input_mr.slot_values();
        EvalRecord {
            id: id.into(),
            input_mr,
            reference: reference.into(),
            prediction: prediction.into(),
            slot_values,
        }
    }
}

/// Per-record outcome flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFlags {
    pub id: String,
    /// Prediction parsed and its skeleton matches the input MR's.
    pub tree_match: bool,
    /// At least one slot value failed the match rule against the prediction.
    pub slot_error: bool,
}

/// Aggregate report. `tree_accuracy` and `ser` are the means of the
/// per-record flags; `bleu4` is corpus-level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub tree_accuracy: f64,
    pub ser: f64,
    pub bleu4: f64,
    pub n: usize,
    #[serde(skip)]
    pub per_record: Vec<RecordFlags>,
}

/// Fraction of records whose predicted bracketing exactly matches the input
/// MR's skeleton. Unparseable predictions count 0 and never error.
pub fn tree_accuracy(records: &[EvalRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let matches = records.iter().filter(|r| tree_match(r)).count();
    matches as f64 / records.len() as f64
}

fn tree_match(record: &EvalRecord) -> bool {
    match parse_mr(&record.prediction) {
        Ok(tree) => tree.signature() == record.input_mr.signature(),
        Err(_) => false,
    }
}

/// Fraction of records with at least one slot value missing from the
/// prediction. Lower is better.
///
/// Match rule: case-insensitive substring over whitespace-normalized text,
/// with the prediction de-bracketed first. Computed on the raw string when
/// the prediction does not parse.
pub fn slot_error_rate(records: &[EvalRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let errors = records.iter().filter(|r| slot_error(r)).count();
    errors as f64 / records.len() as f64
}

fn slot_error(record: &EvalRecord) -> bool {
    let haystack = normalize_for_match(&text::debracket(&record.prediction));
    record
        .slot_values
        .iter()
        .any(|(_, value)| !haystack.contains(&normalize_for_match(value)))
}

fn normalize_for_match(s: &str) -> String {
    text::normalize_spaces(s).to_lowercase()
}

/// Lowercase tokens split on whitespace and punctuation boundaries: runs of
/// alphanumerics are tokens, every other non-space character is its own
/// token (`"$552"` becomes `["$", "552"]`).
pub fn tokenize(s: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in s.chars() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(ch.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Accumulated n-gram match counts; integer so the reduction over records is
/// exact and order-insensitive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NgramCounts {
    pub matched: [u64; 4],
    pub total: [u64; 4],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl NgramCounts {
    pub fn add(&mut self, other: &NgramCounts) {
        for n in 0..4 {
            self.matched[n] += other.matched[n];
            self.total[n] += other.total[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }
}

/// Clipped n-gram matches of `hyp` against a single `reference`.
pub fn ngram_counts(reference: &[String], hyp: &[String]) -> NgramCounts {
    let mut counts = NgramCounts {
        hyp_len: hyp.len() as u64,
        ref_len: reference.len() as u64,
        ..NgramCounts::default()
    };
    for n in 1..=4usize {
        if hyp.len() < n {
            break;
        }
        counts.total[n - 1] = (hyp.len() - n + 1) as u64;
        let mut ref_grams: Vec<&[String]> = if reference.len() >= n {
            reference.windows(n).collect()
        } else {
            Vec::new()
        };
        ref_grams.sort();
        for gram in hyp.windows(n) {
            // Clipping via removal: each reference n-gram matches at most once.
            if let Ok(idx) = ref_grams.binary_search(&gram) {
                ref_grams.remove(idx);
                counts.matched[n - 1] += 1;
            }
        }
    }
    counts
}

fn brevity_penalty(hyp_len: u64, ref_len: u64) -> f64 {
    if hyp_len == 0 {
        return 0.0;
    }
    if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

/// Corpus BLEU with orders 1-4, uniform weights, and brevity penalty,
/// scaled to [0, 100]. No smoothing: a zero precision at any order gives 0.
pub fn bleu4(records: &[EvalRecord]) -> f64 {
    let mut totals = NgramCounts::default();
    for record in records {
        let reference = tokenize(&text::debracket(&record.reference));
        let hyp = tokenize(&text::debracket(&record.prediction));
        totals.add(&ngram_counts(&reference, &hyp));
    }
    corpus_bleu_from_counts(&totals)
}

pub fn corpus_bleu_from_counts(totals: &NgramCounts) -> f64 {
    let mut log_sum = 0.0;
    for n in 0..4 {
        if totals.matched[n] == 0 || totals.total[n] == 0 {
            return 0.0;
        }
        log_sum += (totals.matched[n] as f64 / totals.total[n] as f64).ln();
    }
    100.0 * brevity_penalty(totals.hyp_len, totals.ref_len) * (log_sum / 4.0).exp()
}

/// Sentence-level diagnostic BLEU with add-one smoothing on orders 2-4, so
/// short texts get nonzero scores. Scaled to [0, 100].
pub fn sentence_bleu(reference: &str, candidate: &str) -> f64 {
    let ref_toks = tokenize(reference);
    let hyp_toks = tokenize(candidate);
    let counts = ngram_counts(&ref_toks, &hyp_toks);
    if counts.hyp_len == 0 || counts.matched[0] == 0 {
        return 0.0;
    }
    let mut log_sum = (counts.matched[0] as f64 / counts.total[0] as f64).ln();
    for n in 1..4 {
        log_sum += ((counts.matched[n] + 1) as f64 / (counts.total[n] + 1) as f64).ln();
    }
    100.0 * brevity_penalty(counts.hyp_len, counts.ref_len) * (log_sum / 4.0).exp()
}

/// Score a corpus on all three metrics.
pub fn evaluate(records: &[EvalRecord]) -> MetricReport {
    let per_record: Vec<RecordFlags> = records
        .iter()
        .map(|r| RecordFlags {
            id: r.id.clone(),
            tree_match: tree_match(r),
            slot_error: slot_error(r),
        })
        .collect();
    MetricReport {
        tree_accuracy: tree_accuracy(records),
        ser: slot_error_rate(records),
        bleu4: bleu4(records),
        n: records.len(),
        per_record,
    }
}
