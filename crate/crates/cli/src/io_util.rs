//! Shared file plumbing: buffered readers/writers, digests, stdout-or-file
//! output, and the JSON error object printed on operational failures.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use compgen_core::corpus::CorpusRecord;
use compgen_core::splits::Example;
use compgen_core::template_engine::{RenderMode, TemplateRegistry};

pub fn open_reader(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

/// A writer to the given path, or stdout when no path is given.
pub fn writer_or_stdout(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(path) => Ok(Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        ))),
        None => Ok(Box::new(BufWriter::new(std::io::stdout()))),
    }
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    compgen_core::corpus::read_jsonl(open_reader(path)?)
        .with_context(|| format!("reading corpus {}", path.display()))
}

pub fn load_registry_file(path: &Path) -> Result<TemplateRegistry> {
    compgen_core::template_engine::load_registry(open_reader(path)?)
        .with_context(|| format!("loading templates {}", path.display()))
}

/// Hydrate corpus records into examples: parse the MR and render its
/// template text.
pub fn hydrate_examples(
    records: &[CorpusRecord],
    registry: &TemplateRegistry,
) -> Result<Vec<Example>> {
    records
        .iter()
        .map(|record| {
            let mr = compgen_core::parse_mr(&record.mr)
                .with_context(|| format!("record {}: MR does not parse", record.id))?;
            let template_text = registry
                .render(&mr, RenderMode::Plain)
                .with_context(|| format!("record {}: template render failed", record.id))?;
            Ok(Example {
                id: record.id.clone(),
                query: record.query.clone(),
                mr,
                template_text,
                reference: record.reference.clone(),
                schema_tag: record.schema_tag.clone(),
            })
        })
        .collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

pub fn write_jsonl_file<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut writer = BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    compgen_core::corpus::write_jsonl(&mut writer, items)?;
    writer.flush()?;
    Ok(())
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut writer = BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

/// Operational errors surface as one JSON object on stderr.
pub fn print_error_object(error: &anyhow::Error) {
    let payload = serde_json::json!({
        "error": {
            "message": format!("{error:#}"),
        }
    });
    eprintln!("{payload}");
}
