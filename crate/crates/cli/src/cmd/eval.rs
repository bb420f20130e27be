//! `compgen eval`: MetricReport plus per-record flags.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

use compgen_core::corpus::PredictionRecord;
use compgen_core::metrics::{evaluate, EvalRecord};
use compgen_core::parse_mr;

use crate::io_util::{open_reader, read_corpus, write_jsonl_file, writer_or_stdout};
use crate::{EXIT_OK, EXIT_VALIDATION};

pub fn run(
    corpus: &Path,
    predictions: &Path,
    output: Option<&Path>,
    flags: Option<&Path>,
) -> Result<i32> {
    let corpus_records = read_corpus(corpus)?;
    let by_id: HashMap<&str, &compgen_core::corpus::CorpusRecord> = corpus_records
        .iter()
        .map(|r| (r.id.as_str(), r))
        .collect();

    let prediction_records: Vec<PredictionRecord> =
        compgen_core::corpus::read_jsonl(open_reader(predictions)?)
            .with_context(|| format!("reading predictions {}", predictions.display()))?;

    let mut records = Vec::with_capacity(prediction_records.len());
    for prediction in &prediction_records {
        let Some(record) = by_id.get(prediction.id.as_str()) else {
            crate::io_util::print_error_object(&anyhow::anyhow!(
                "unknown prediction id {:?}: not present in the corpus",
                prediction.id
            ));
            return Ok(EXIT_VALIDATION);
        };
        let mr = parse_mr(&record.mr)
            .with_context(|| format!("record {}: MR does not parse", record.id))?;
        records.push(EvalRecord::new(
            record.id.clone(),
            mr,
            record.reference.clone(),
            prediction.prediction.clone(),
        ));
    }
    if records.is_empty() {
        bail!("no predictions to score");
    }

    let report = evaluate(&records);
    if let Some(path) = flags {
        write_jsonl_file(path, &report.per_record)?;
    }
    let mut out = writer_or_stdout(output)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(EXIT_OK)
}
