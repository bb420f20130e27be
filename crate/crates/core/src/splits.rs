//! Nested few-shot split construction and seen/unseen evaluation sets.
//!
//! A split of size X holds exactly X examples, one per distinct structure
//! signature, and every smaller split is a subset of every larger one. The
//! smallest split additionally covers every node label occurring in the
//! pool, when satisfiable. Evaluation candidates are routed to `seen` when
//! their signature appears in the smallest split and to `unseen` when it is
//! absent from the largest; everything in between is dropped.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::mr_tree::{MrTree, StructureSignature};

/// One dataset record with its parsed MR and rendered template text.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: String,
    pub query: String,
    pub mr: MrTree,
    /// Plain-mode render of `mr`.
    pub template_text: String,
    /// Annotated response text.
    pub reference: String,
    pub schema_tag: Option<String>,
}

/// Signature → example ids, in first-occurrence order over the pool.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignatureIndex {
    groups: Vec<(StructureSignature, Vec<String>)>,
    by_signature: HashMap<StructureSignature, usize>,
}

impl SignatureIndex {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> impl Iterator<Item = (&StructureSignature, &[String])> {
        self.groups.iter().map(|(sig, ids)| (sig, ids.as_slice()))
    }

    pub fn ids_for(&self, signature: &StructureSignature) -> Option<&[String]> {
        self.by_signature
            .get(signature)
            .map(|&i| self.groups[i].1.as_slice())
    }
}

/// Group a pool by structure signature; every example lands in exactly one
/// group.
pub fn group_by_signature(pool: &[Example]) -> SignatureIndex {
    let mut index = SignatureIndex::default();
    for example in pool {
        let sig = example.mr.signature();
        match index.by_signature.get(&sig) {
            Some(&i) => index.groups[i].1.push(example.id.clone()),
            None => {
                index.by_signature.insert(sig.clone(), index.groups.len());
                index.groups.push((sig, vec![example.id.clone()]));
            }
        }
    }
    index
}

/// The nested splits, the seed that produced them, and the signature index
/// of the pool they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FewShotSplits {
    /// `(size, example ids)` in ascending size order; each id set is a
    /// superset of the previous one.
    pub splits: Vec<(usize, Vec<String>)>,
    pub seed: u64,
    pub signature_index: SignatureIndex,
    /// Signatures selected, in selection order; split k is the first
    /// `sizes[k]` entries with their representative examples.
    selected_signatures: Vec<StructureSignature>,
}

impl FewShotSplits {
    pub fn smallest(&self) -> &(usize, Vec<String>) {
        self.splits.first().expect("at least one split")
    }

    pub fn largest(&self) -> &(usize, Vec<String>) {
        self.splits.last().expect("at least one split")
    }

    /// Signatures of the first `size` selections.
    pub fn signatures_up_to(&self, size: usize) -> HashSet<&StructureSignature> {
        self.selected_signatures.iter().take(size).collect()
    }
}

/// Seen/unseen evaluation id sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSplits {
    pub seen: Vec<String>,
    pub unseen: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("sizes must be ascending and nonempty")]
    SizesNotAscending,
    #[error("requested split of {requested} but the pool has only {available} distinct signatures")]
    SizeExceedsSignatures { requested: usize, available: usize },
    #[error("labels not coverable within the smallest split: {labels:?}")]
    CoverageInfeasible { labels: Vec<String> },
}

/// Construct nested splits of the given ascending sizes.
///
/// Label coverage is enforced greedily in the smallest split; remaining
/// slots fill by seeded uniform sampling over unused signatures, with one
/// seeded-random representative example per chosen signature. Deterministic
/// for a fixed (pool order, sizes, seed).
pub fn construct_splits(
    pool: &[Example],
    sizes: &[usize],
    seed: u64,
) -> Result<FewShotSplits, SplitError> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] == 0 {
        return Err(SplitError::SizesNotAscending);
    }
    let index = group_by_signature(pool);
    let largest = *sizes.last().expect("nonempty sizes");
    if largest > index.len() {
        return Err(SplitError::SizeExceedsSignatures {
            requested: largest,
            available: index.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // One representative example per signature, fixed up front so that the
    // choice does not depend on when a signature gets selected.
    let representatives: Vec<String> = index
        .groups
        .iter()
        .map(|(_, ids)| ids[rng.random_range(0..ids.len())].clone())
        .collect();

    // Label sets per signature, from one exemplar MR each.
    let mr_by_id: HashMap<&str, &MrTree> =
        pool.iter().map(|e| (e.id.as_str(), &e.mr)).collect();
    let group_labels: Vec<BTreeSet<String>> = index
        .groups
        .iter()
        .map(|(_, ids)| {
            mr_by_id[ids[0].as_str()]
                .labels()
                .into_iter()
                .collect::<BTreeSet<_>>()
        })
        .collect();
    let all_labels: BTreeSet<String> = group_labels.iter().flatten().cloned().collect();

    // Greedy set cover over labels: maximize newly covered labels, prefer
    // rarer labels on ties, break remaining ties by seeded shuffle order.
    // Greedy can overshoot a tight budget, so a few reshuffled attempts run
    // before declaring coverage infeasible.
    let mut carrier_count: HashMap<&String, usize> = HashMap::new();
    for labels in &group_labels {
        for label in labels {
            *carrier_count.entry(label).or_default() += 1;
        }
    }
    let rarity = |label: &String| index.len() - carrier_count[label];

    let mut best_selection: Option<Vec<usize>> = None;
    for attempt in 0..16u64 {
        let mut candidate_order: Vec<usize> = (0..index.len()).collect();
        let mut attempt_rng =
            ChaCha8Rng::seed_from_u64(crate::hashing::mix64(seed, attempt));
        candidate_order.shuffle(&mut attempt_rng);

        let mut uncovered = all_labels.clone();
        let mut picked: Vec<usize> = Vec::new();
        let mut used = vec![false; index.len()];
        while !uncovered.is_empty() {
            let mut best: Option<(usize, (usize, usize))> = None;
            for &g in &candidate_order {
                if used[g] {
                    continue;
                }
                let new: Vec<&String> = group_labels[g].intersection(&uncovered).collect();
                if new.is_empty() {
                    continue;
                }
                let score = (new.len(), new.iter().map(|l| rarity(l)).max().unwrap_or(0));
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((g, score));
                }
            }
            match best {
                Some((g, _)) => {
                    used[g] = true;
                    picked.push(g);
                    uncovered.retain(|l| !group_labels[g].contains(l));
                }
                None => break, // unreachable: every label has a carrier
            }
        }
        if best_selection.as_ref().is_none_or(|b| picked.len() < b.len()) {
            best_selection = Some(picked);
        }
        if best_selection.as_ref().is_some_and(|b| b.len() <= sizes[0]) {
            break;
        }
    }
    let mut selected = best_selection.expect("at least one attempt ran");
    if selected.len() > sizes[0] {
        let coverable: BTreeSet<String> = selected[..sizes[0]]
            .iter()
            .flat_map(|&g| group_labels[g].iter().cloned())
            .collect();
        let missing: Vec<String> = all_labels.difference(&coverable).cloned().collect();
        return Err(SplitError::CoverageInfeasible { labels: missing });
    }
    let mut used = vec![false; index.len()];
    for &g in &selected {
        used[g] = true;
    }

    // Fill to each target size by seeded sampling over unused signatures.
    let mut fill_order: Vec<usize> = (0..index.len()).filter(|&g| !used[g]).collect();
    fill_order.shuffle(&mut rng);
    let mut fill_iter = fill_order.into_iter();
    let mut splits: Vec<(usize, Vec<String>)> = Vec::with_capacity(sizes.len());
    for &size in sizes {
        while selected.len() < size {
            let g = fill_iter.next().expect("enough signatures checked above");
            selected.push(g);
        }
        let mut ids: Vec<String> = selected[..size]
            .iter()
            .map(|&g| representatives[g].clone())
            .collect();
        ids.sort();
        splits.push((size, ids));
    }

    let selected_signatures = selected
        .iter()
        .map(|&g| index.groups[g].0.clone())
        .collect();

    Ok(FewShotSplits {
        splits,
        seed,
        signature_index: index,
        selected_signatures,
    })
}

/// Route evaluation candidates to seen/unseen sets.
pub fn derive_eval_splits(
    splits: &FewShotSplits,
    eval_candidates: &[Example],
) -> EvalSplits {
    let smallest_size = splits.smallest().0;
    let largest_size = splits.largest().0;
    let seen_sigs = splits.signatures_up_to(smallest_size);
    let largest_sigs = splits.signatures_up_to(largest_size);

    let mut seen = Vec::new();
    let mut unseen = Vec::new();
    for candidate in eval_candidates {
        let sig = candidate.mr.signature();
        if seen_sigs.contains(&sig) {
            seen.push(candidate.id.clone());
        } else if !largest_sigs.contains(&sig) {
            unseen.push(candidate.id.clone());
        }
        // Signatures only in the larger splits are dropped from both sets.
    }
    EvalSplits { seen, unseen }
}

/// Everything in the pool outside the largest split, for use as the
/// unlabeled set in self-training.
pub fn remaining_pool<'a>(pool: &'a [Example], splits: &FewShotSplits) -> Vec<&'a Example> {
    let in_largest: HashSet<&str> = splits
        .largest()
        .1
        .iter()
        .map(String::as_str)
        .collect();
    pool.iter()
        .filter(|e| !in_largest.contains(e.id.as_str()))
        .collect()
}

/// Per-split signature counts for the manifest.
pub fn signature_counts(splits: &FewShotSplits) -> BTreeMap<usize, usize> {
    splits
        .splits
        .iter()
        .map(|(size, _)| (*size, splits.signatures_up_to(*size).len()))
        .collect()
}
