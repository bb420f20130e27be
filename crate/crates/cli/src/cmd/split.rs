//! `compgen split`: nested few-shot splits plus eval sets and the unlabeled
//! remainder, with a reproducibility manifest.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use compgen_core::corpus::{CorpusRecord, UnlabeledRecord};
use compgen_core::splits::{
    construct_splits, derive_eval_splits, remaining_pool, signature_counts,
};

use crate::io_util::{
    hydrate_examples, load_registry_file, read_corpus, sha256_file, write_json_file,
    write_jsonl_file,
};
use crate::EXIT_OK;

#[derive(Serialize)]
struct SplitManifest {
    tool_version: &'static str,
    seed: u64,
    sizes: Vec<usize>,
    distinct_signatures: usize,
    signature_counts: BTreeMap<usize, usize>,
    corpus_digest: String,
    eval_candidates_digest: Option<String>,
    seen: usize,
    unseen: usize,
    unlabeled: usize,
}

pub fn run(
    corpus: &Path,
    templates: &Path,
    out: &Path,
    sizes: &[usize],
    seed: u64,
    eval_candidates: Option<&Path>,
) -> Result<i32> {
    let registry = load_registry_file(templates)?;
    let records = read_corpus(corpus)?;
    let pool = hydrate_examples(&records, &registry)?;
    let record_by_id: HashMap<&str, &CorpusRecord> =
        records.iter().map(|r| (r.id.as_str(), r)).collect();

    let splits = construct_splits(&pool, sizes, seed).context("constructing splits")?;

    // Candidates default to the pool remainder outside the largest split:
    // extra examples of seen signatures land in `seen`, signatures the
    // splits never saw land in `unseen`.
    let candidate_records = match eval_candidates {
        Some(path) => read_corpus(path)?,
        None => remaining_pool(&pool, &splits)
            .iter()
            .map(|e| record_by_id[e.id.as_str()].clone())
            .collect(),
    };
    let candidates = hydrate_examples(&candidate_records, &registry)?;
    let evals = derive_eval_splits(&splits, &candidates);
    let candidate_by_id: HashMap<&str, &CorpusRecord> = candidate_records
        .iter()
        .map(|r| (r.id.as_str(), r))
        .collect();

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;

    for (size, ids) in &splits.splits {
        let rows: Vec<&CorpusRecord> = ids.iter().map(|id| record_by_id[id.as_str()]).collect();
        write_jsonl_file(&out.join(format!("split.{size}.jsonl")), &rows)?;
    }

    let seen_rows: Vec<&CorpusRecord> = evals
        .seen
        .iter()
        .map(|id| candidate_by_id[id.as_str()])
        .collect();
    write_jsonl_file(&out.join("eval.seen.jsonl"), &seen_rows)?;
    let unseen_rows: Vec<&CorpusRecord> = evals
        .unseen
        .iter()
        .map(|id| candidate_by_id[id.as_str()])
        .collect();
    write_jsonl_file(&out.join("eval.unseen.jsonl"), &unseen_rows)?;

    let unlabeled: Vec<UnlabeledRecord> = remaining_pool(&pool, &splits)
        .iter()
        .map(|e| UnlabeledRecord {
            mr: compgen_core::serialize(&e.mr),
            template_text: e.template_text.clone(),
        })
        .collect();
    write_jsonl_file(&out.join("unlabeled.jsonl"), &unlabeled)?;

    let manifest = SplitManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        seed,
        sizes: sizes.to_vec(),
        distinct_signatures: splits.signature_index.len(),
        signature_counts: signature_counts(&splits),
        corpus_digest: sha256_file(corpus)?,
        eval_candidates_digest: eval_candidates.map(sha256_file).transpose()?,
        seen: evals.seen.len(),
        unseen: evals.unseen.len(),
        unlabeled: unlabeled.len(),
    };
    write_json_file(&out.join("manifest.json"), &manifest)?;

    Ok(EXIT_OK)
}
