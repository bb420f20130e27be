//! `compgen render`: template-guided text for every corpus record.

use std::path::Path;

use anyhow::Result;

use compgen_core::corpus::RenderedRecord;
use compgen_core::template_engine::RenderMode;
use compgen_core::parse_mr;

use crate::io_util::{load_registry_file, read_corpus, writer_or_stdout};
use crate::{EXIT_OK, EXIT_PARTIAL};

pub fn run(
    corpus: &Path,
    templates: &Path,
    mode: RenderMode,
    output: Option<&Path>,
) -> Result<i32> {
    // A broken registry aborts; per-record failures do not.
    let registry = load_registry_file(templates)?;
    let records = read_corpus(corpus)?;
    let mut out = writer_or_stdout(output)?;
    let mut failures = 0usize;

    for record in &records {
        let rendered = parse_mr(&record.mr)
            .map_err(|e| e.to_string())
            .and_then(|tree| registry.render(&tree, mode).map_err(|e| e.to_string()));
        match rendered {
            Ok(rendered) => {
                let line = RenderedRecord {
                    id: record.id.clone(),
                    rendered,
                };
                writeln!(out, "{}", serde_json::to_string(&line)?)?;
            }
            Err(error) => {
                failures += 1;
                eprintln!(
                    "{}",
                    serde_json::json!({"id": record.id, "error": error})
                );
            }
        }
    }
    out.flush()?;

    Ok(if failures == 0 { EXIT_OK } else { EXIT_PARTIAL })
}

use std::io::Write;
