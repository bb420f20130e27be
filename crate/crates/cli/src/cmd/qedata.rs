//! `compgen qedata`: the quality-estimator fine-tuning dataset.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use compgen_core::qe_data::{assemble_dataset_with, QeStats};

use crate::io_util::{
    hydrate_examples, load_registry_file, read_corpus, sha256_file, write_json_file,
    write_jsonl_file,
};
use crate::EXIT_OK;

#[derive(Serialize)]
struct QeManifest {
    tool_version: &'static str,
    seed: u64,
    k: usize,
    bleu_threshold: f64,
    corpus_digest: String,
    stats: QeStats,
}

pub fn run(
    corpus: &Path,
    templates: &Path,
    out: &Path,
    seed: u64,
    k: usize,
    bleu_threshold: f64,
) -> Result<i32> {
    let registry = load_registry_file(templates)?;
    let records = read_corpus(corpus)?;
    let pool = hydrate_examples(&records, &registry)?;

    let dataset = assemble_dataset_with(&pool, seed, k, bleu_threshold);

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_jsonl_file(&out.join("qe.train.jsonl"), &dataset.train)?;
    write_jsonl_file(&out.join("qe.val.jsonl"), &dataset.validation)?;
    write_json_file(
        &out.join("qe.stats.json"),
        &QeManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            seed,
            k,
            bleu_threshold,
            corpus_digest: sha256_file(corpus)?,
            stats: dataset.stats,
        },
    )?;

    Ok(EXIT_OK)
}
