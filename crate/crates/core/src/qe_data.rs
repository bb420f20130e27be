//! Synthetic rated-pair generation for quality-estimator fine-tuning.
//!
//! Each example contributes one positive pair (template text, reference) and
//! up to four negatives from each of six transformations: retrieving similar
//! examples, pairing the input with itself, swapping / repeating / dropping
//! phrases, and flipping digits. Positives are then upsampled to half the
//! negative count and a seeded 10% of pairs is held out for validation.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::sentence_bleu;
use crate::mr_tree::{parse_mr, MrNode, NodeItem, NodeKind};
use crate::splits::Example;
use crate::text;

pub const DEFAULT_K: usize = 4;
pub const DEFAULT_BLEU_THRESHOLD: f64 = 90.0;
pub const PER_TRANSFORM_CAP: usize = 4;
pub const VALIDATION_FRACTION: f64 = 0.10;

/// Which transformation produced a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Positive,
    Similar,
    SelfPair,
    Swap,
    Repeat,
    Drop,
    FlipDigits,
}

impl Origin {
    pub fn as_str(&self) -> &'static str {
        match self {
            Origin::Positive => "positive",
            Origin::Similar => "similar",
            Origin::SelfPair => "self_pair",
            Origin::Swap => "swap",
            Origin::Repeat => "repeat",
            Origin::Drop => "drop",
            Origin::FlipDigits => "flip_digits",
        }
    }
}

/// A (source, candidate) pair with its rating and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatedPair {
    pub source: String,
    pub candidate: String,
    pub rating: f64,
    pub origin: Origin,
    pub example_id: String,
}

/// Phrase perturbation families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbKind {
    Swap,
    Repeat,
    Drop,
}

impl PerturbKind {
    fn origin(self) -> Origin {
        match self {
            PerturbKind::Swap => Origin::Swap,
            PerturbKind::Repeat => Origin::Repeat,
            PerturbKind::Drop => Origin::Drop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QeError {
    #[error("example {id} has an empty {what}")]
    EmptyText { id: String, what: &'static str },
    #[error("example {id} has too few phrases for {kind:?} (needs {needed}, has {available})")]
    TooFewPhrases {
        id: String,
        kind: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("example {id} contains no digits")]
    NoDigits { id: String },
}

/// Per-origin and aggregate counts of an assembled dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QeStats {
    pub per_origin: BTreeMap<String, usize>,
    pub base_positives: usize,
    pub upsampled_positives: usize,
    pub negatives: usize,
    pub train_size: usize,
    pub validation_size: usize,
}

/// The assembled fine-tuning dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct QeDataset {
    pub train: Vec<RatedPair>,
    pub validation: Vec<RatedPair>,
    pub seed: u64,
    pub stats: QeStats,
}

/// De-bracketed reference text, or an error naming the empty field.
fn plain_reference(ex: &Example) -> Result<String, QeError> {
    let plain = text::debracket(&ex.reference);
    if plain.is_empty() {
        return Err(QeError::EmptyText {
            id: ex.id.clone(),
            what: "reference",
        });
    }
    Ok(plain)
}

/// Pair template-guided input with the ground-truth response, rating 1.0.
pub fn make_positive(ex: &Example) -> Result<RatedPair, QeError> {
    if ex.template_text.is_empty() {
        return Err(QeError::EmptyText {
            id: ex.id.clone(),
            what: "template_text",
        });
    }
    Ok(RatedPair {
        source: ex.template_text.clone(),
        candidate: plain_reference(ex)?,
        rating: 1.0,
        origin: Origin::Positive,
        example_id: ex.id.clone(),
    })
}

/// Rank other inputs by sentence BLEU against `ex`'s input and pair `ex`
/// with the references of the top `k` below `bleu_threshold`. Ties break by
/// example id; may return fewer than `k`.
pub fn similar_negatives(
    ex: &Example,
    pool: &[Example],
    k: usize,
    bleu_threshold: f64,
) -> Vec<RatedPair> {
    let own_reference = text::debracket(&ex.reference);
    let mut scored: Vec<(f64, &Example)> = pool
        .iter()
        .filter(|other| other.id != ex.id)
        .map(|other| (sentence_bleu(&ex.template_text, &other.template_text), other))
        .filter(|(bleu, _)| *bleu < bleu_threshold)
        .collect();
    scored.sort_by(|(ba, ea), (bb, eb)| {
        bb.partial_cmp(ba)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| ea.id.cmp(&eb.id))
    });
    scored
        .into_iter()
        .map(|(_, other)| (other, text::debracket(&other.reference)))
        .filter(|(_, candidate)| !candidate.is_empty() && *candidate != own_reference)
        .take(k)
        .map(|(other, candidate)| RatedPair {
            source: ex.template_text.clone(),
            candidate,
            rating: 0.0,
            origin: Origin::Similar,
            example_id: other.id.clone(),
        })
        .collect()
}

/// Pair the input with itself: grammatically stilted, rating 0.0.
pub fn self_pair_negative(ex: &Example) -> RatedPair {
    RatedPair {
        source: ex.template_text.clone(),
        candidate: ex.template_text.clone(),
        rating: 0.0,
        origin: Origin::SelfPair,
        example_id: ex.id.clone(),
    }
}

/// Token list plus non-overlapping phrase ranges (half-open token spans).
struct PhraseSplit {
    tokens: Vec<String>,
    phrases: Vec<(usize, usize)>,
}

/// Prefer outermost bracketed-argument spans of the annotated reference;
/// fall back to punctuation-delimited spans of the plain text.
fn phrase_split(reference: &str) -> PhraseSplit {
    if let Ok(tree) = parse_mr(reference) {
        let mut tokens = Vec::new();
        let mut phrases = Vec::new();
        for root in tree.roots() {
            collect_spans(root, &mut tokens, &mut phrases);
        }
        if !phrases.is_empty() {
            return PhraseSplit { tokens, phrases };
        }
    }
    punctuation_split(&text::debracket(reference))
}

fn collect_spans(node: &MrNode, tokens: &mut Vec<String>, phrases: &mut Vec<(usize, usize)>) {
    for item in node.items() {
        match item {
            NodeItem::Text(t) => tokens.extend(t.split_whitespace().map(str::to_string)),
            NodeItem::Child(child) => {
                if child.kind() == NodeKind::Argument {
                    let start = tokens.len();
                    tokens.extend(child.text().split_whitespace().map(str::to_string));
                    if tokens.len() > start {
                        phrases.push((start, tokens.len()));
                    }
                } else {
                    collect_spans(child, tokens, phrases);
                }
            }
        }
    }
}

fn punctuation_split(plain: &str) -> PhraseSplit {
    let tokens: Vec<String> = plain.split_whitespace().map(str::to_string).collect();
    let mut phrases = Vec::new();
    let mut start = None;
    for (i, tok) in tokens.iter().enumerate() {
        let punct_only = tok.chars().all(|c| ",.;:!?".contains(c));
        if punct_only {
            if let Some(s) = start.take() {
                phrases.push((s, i));
            }
            continue;
        }
        if start.is_none() {
            start = Some(i);
        }
        if tok.ends_with([',', '.', ';', '!', '?']) {
            phrases.push((start.take().unwrap(), i + 1));
        }
    }
    if let Some(s) = start {
        phrases.push((s, tokens.len()));
    }
    PhraseSplit { tokens, phrases }
}

fn rebuild(split: &PhraseSplit, phrase_order: &[PhrasePiece]) -> String {
    let mut tokens: Vec<&str> = Vec::with_capacity(split.tokens.len());
    let mut cursor = 0;
    let mut pieces = phrase_order.iter().peekable();
    // Walk original gaps between phrases, splicing the (possibly permuted,
    // duplicated, or deleted) phrase pieces back in order of slot.
    for (slot, &(start, end)) in split.phrases.iter().enumerate() {
        tokens.extend(split.tokens[cursor..start].iter().map(String::as_str));
        cursor = end;
        while let Some(piece) = pieces.peek() {
            if piece.slot != slot {
                break;
            }
            let (ps, pe) = split.phrases[piece.phrase];
            tokens.extend(split.tokens[ps..pe].iter().map(String::as_str));
            pieces.next();
        }
    }
    tokens.extend(split.tokens[cursor..].iter().map(String::as_str));
    text::join_with_punctuation(&tokens)
}

/// A phrase occupying an output slot: `slot` indexes the original phrase
/// position, `phrase` the content placed there.
struct PhrasePiece {
    slot: usize,
    phrase: usize,
}

/// Generate up to `n` distinct swap/repeat/drop candidates, each different
/// from the reference. Deterministic under `seed`.
pub fn phrase_perturbation(
    ex: &Example,
    kind: PerturbKind,
    seed: u64,
    n: usize,
) -> Result<Vec<RatedPair>, QeError> {
    let plain = plain_reference(ex)?;
    let split = phrase_split(&ex.reference);
    let needed = match kind {
        PerturbKind::Swap | PerturbKind::Drop => 2,
        PerturbKind::Repeat => 1,
    };
    if split.phrases.len() < needed {
        return Err(QeError::TooFewPhrases {
            id: ex.id.clone(),
            kind: match kind {
                PerturbKind::Swap => "swap",
                PerturbKind::Repeat => "repeat",
                PerturbKind::Drop => "drop",
            },
            needed,
            available: split.phrases.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = split.phrases.len();
    let reference_norm = text::normalize_spaces(&plain);
    let mut seen: HashSet<String> = HashSet::new();
    let mut out = Vec::new();
    let n = n.min(PER_TRANSFORM_CAP);

    for _ in 0..n * 8 {
        if out.len() >= n {
            break;
        }
        let pieces: Vec<PhrasePiece> = match kind {
            PerturbKind::Swap => {
                let i = rng.random_range(0..count);
                let mut j = rng.random_range(0..count - 1);
                if j >= i {
                    j += 1;
                }
                (0..count)
                    .map(|slot| PhrasePiece {
                        slot,
                        phrase: if slot == i {
                            j
                        } else if slot == j {
                            i
                        } else {
                            slot
                        },
                    })
                    .collect()
            }
            PerturbKind::Repeat => {
                let i = rng.random_range(0..count);
                let mut pieces = Vec::with_capacity(count + 1);
                for slot in 0..count {
                    pieces.push(PhrasePiece { slot, phrase: slot });
                    if slot == i {
                        pieces.push(PhrasePiece { slot, phrase: i });
                    }
                }
                pieces
            }
            PerturbKind::Drop => {
                let i = rng.random_range(0..count);
                (0..count)
                    .filter(|&slot| slot != i)
                    .map(|slot| PhrasePiece { slot, phrase: slot })
                    .collect()
            }
        };
        let candidate = rebuild(&split, &pieces);
        let norm = text::normalize_spaces(&candidate);
        if norm.is_empty() || norm == reference_norm || !seen.insert(norm) {
            continue;
        }
        out.push(RatedPair {
            source: ex.template_text.clone(),
            candidate,
            rating: 0.0,
            origin: kind.origin(),
            example_id: ex.id.clone(),
        });
    }
    Ok(out)
}

/// Generate up to `n` candidates that differ from the reference only in
/// digit characters.
pub fn flip_digits(ex: &Example, seed: u64, n: usize) -> Result<Vec<RatedPair>, QeError> {
    let plain = plain_reference(ex)?;
    let digit_positions: Vec<usize> = plain
        .char_indices()
        .filter(|(_, c)| c.is_ascii_digit())
        .map(|(i, _)| i)
        .collect();
    if digit_positions.is_empty() {
        return Err(QeError::NoDigits { id: ex.id.clone() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<String> = HashSet::new();
    let mut out = Vec::new();
    let n = n.min(PER_TRANSFORM_CAP);

    for _ in 0..n * 8 {
        if out.len() >= n {
            break;
        }
        let flips = rng.random_range(1..=digit_positions.len().min(3));
        let mut positions = digit_positions.clone();
        positions.shuffle(&mut rng);
        positions.truncate(flips);

        let mut bytes = plain.clone().into_bytes();
        for &pos in &positions {
            let old = bytes[pos];
            let mut new = b'0' + rng.random_range(0..10u8);
            while new == old {
                new = b'0' + rng.random_range(0..10u8);
            }
            bytes[pos] = new;
        }
        let candidate = String::from_utf8(bytes).expect("digit swaps preserve utf-8");
        if candidate == plain || !seen.insert(candidate.clone()) {
            continue;
        }
        out.push(RatedPair {
            source: ex.template_text.clone(),
            candidate,
            rating: 0.0,
            origin: Origin::FlipDigits,
            example_id: ex.id.clone(),
        });
    }
    Ok(out)
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 step, so per-example streams are independent of ordering.
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generate all pairs for a pool, upsample positives to half the negative
/// count, and hold out a seeded 10% for validation. Uses the default
/// retrieval depth and BLEU ceiling.
///
/// The holdout is stratified by rating before upsampling, so the train-side
/// positive/negative ratio holds exactly and no duplicated positive can leak
/// across the train/validation boundary.
pub fn assemble_dataset(pool: &[Example], seed: u64) -> QeDataset {
    assemble_dataset_with(pool, seed, DEFAULT_K, DEFAULT_BLEU_THRESHOLD)
}

/// [`assemble_dataset`] with explicit similar-retrieval parameters.
pub fn assemble_dataset_with(
    pool: &[Example],
    seed: u64,
    k: usize,
    bleu_threshold: f64,
) -> QeDataset {
    let mut positives: Vec<RatedPair> = Vec::new();
    let mut negatives: Vec<RatedPair> = Vec::new();

    for (idx, ex) in pool.iter().enumerate() {
        let ex_seed = mix_seed(seed, idx as u64);

        match make_positive(ex) {
            Ok(pair) => positives.push(pair),
            Err(_) => continue, // unusable example
        }

        negatives.extend(similar_negatives(ex, pool, k, bleu_threshold));

        let self_pair = self_pair_negative(ex);
        if self_pair.candidate != text::debracket(&ex.reference) {
            negatives.push(self_pair);
        }

        for (i, kind) in [PerturbKind::Swap, PerturbKind::Repeat, PerturbKind::Drop]
            .into_iter()
            .enumerate()
        {
            if let Ok(pairs) =
                phrase_perturbation(ex, kind, mix_seed(ex_seed, i as u64), PER_TRANSFORM_CAP)
            {
                negatives.extend(pairs);
            }
        }
        if let Ok(pairs) = flip_digits(ex, mix_seed(ex_seed, 3), PER_TRANSFORM_CAP) {
            negatives.extend(pairs);
        }
    }

    // Distinct transformations of formulaic corpora can coincide on the same
    // (source, candidate); keep first occurrences so the train/validation
    // boundary stays leak-free.
    dedupe_pairs(&mut positives);
    dedupe_pairs(&mut negatives);

    let mut per_origin: BTreeMap<String, usize> = BTreeMap::new();
    for pair in positives.iter().chain(&negatives) {
        *per_origin.entry(pair.origin.as_str().to_string()).or_default() += 1;
    }

    let base_positives = positives.len();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, u64::MAX));

    // Stratified holdout on base pairs.
    let (train_negatives, val_negatives) = holdout(&negatives, &mut rng);
    let (train_pos_base, val_pos_base) = holdout(&positives, &mut rng);

    let train = finish_side(train_pos_base, train_negatives);
    let validation = finish_side(val_pos_base, val_negatives);

    let stats = QeStats {
        per_origin,
        base_positives,
        upsampled_positives: train.iter().filter(|p| p.origin == Origin::Positive).count()
            + validation
                .iter()
                .filter(|p| p.origin == Origin::Positive)
                .count(),
        negatives: negatives.len(),
        train_size: train.len(),
        validation_size: validation.len(),
    };

    QeDataset {
        train,
        validation,
        seed,
        stats,
    }
}

fn dedupe_pairs(pairs: &mut Vec<RatedPair>) {
    let mut seen: HashSet<(String, String)> = HashSet::new();
    pairs.retain(|p| seen.insert((p.source.clone(), p.candidate.clone())));
}

/// Split pairs into (train, validation) with a seeded shuffle choosing the
/// validation tenth; output keeps the original generation order.
fn holdout(pairs: &[RatedPair], rng: &mut ChaCha8Rng) -> (Vec<RatedPair>, Vec<RatedPair>) {
    let val_count = ((pairs.len() as f64) * VALIDATION_FRACTION).round() as usize;
    let mut indices: Vec<usize> = (0..pairs.len()).collect();
    indices.shuffle(rng);
    let val_set: HashSet<usize> = indices.into_iter().take(val_count).collect();
    let mut train = Vec::with_capacity(pairs.len() - val_count);
    let mut val = Vec::with_capacity(val_count);
    for (i, pair) in pairs.iter().enumerate() {
        if val_set.contains(&i) {
            val.push(pair.clone());
        } else {
            train.push(pair.clone());
        }
    }
    (train, val)
}

/// Upsample positives to `floor(negatives / 2)` by verbatim round-robin
/// duplication, then interleave positives after negatives.
fn finish_side(positives: Vec<RatedPair>, negatives: Vec<RatedPair>) -> Vec<RatedPair> {
    let target = negatives.len() / 2;
    let mut upsampled = positives.clone();
    if !positives.is_empty() {
        let mut i = 0;
        while upsampled.len() < target {
            upsampled.push(positives[i % positives.len()].clone());
            i += 1;
        }
    }
    let mut side = negatives;
    side.extend(upsampled);
    side
}
