//! JSONL wire formats shared by the CLI, the pipeline modules, and tests.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One corpus line: `{"id", "query", "mr", "reference", "schema_tag"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub query: String,
    /// Linearized MR string.
    pub mr: String,
    /// Annotated response text.
    pub reference: String,
    #[serde(default)]
    pub schema_tag: Option<String>,
}

/// One prediction line: `{"id", "prediction"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub prediction: String,
}

/// One render output line: `{"id", "rendered"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedRecord {
    pub id: String,
    pub rendered: String,
}

/// One unlabeled line: MR and its template-guided text only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlabeledRecord {
    pub mr: String,
    pub template_text: String,
}

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Iterate records with their 1-based line numbers, skipping blank lines.
/// Malformed lines yield an error item; iteration can continue past them.
pub fn jsonl_iter<T: DeserializeOwned>(
    reader: impl BufRead,
) -> impl Iterator<Item = Result<(usize, T), JsonlError>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(idx, line)| {
            let line_no = idx + 1;
            match line {
                Err(e) => Some(Err(JsonlError::Io(e))),
                Ok(text) => {
                    let trimmed = text.trim();
                    if trimmed.is_empty() {
                        None
                    } else {
                        Some(
                            serde_json::from_str::<T>(trimmed)
                                .map(|value| (line_no, value))
                                .map_err(|e| JsonlError::Malformed {
                                    line: line_no,
                                    message: e.to_string(),
                                }),
                        )
                    }
                }
            }
        })
}

/// Read a whole JSONL stream, failing on the first malformed line.
pub fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, JsonlError> {
    jsonl_iter(reader)
        .map(|item| item.map(|(_, value)| value))
        .collect()
}

/// Write items as JSONL, one compact object per line.
pub fn write_jsonl<T: Serialize>(
    mut writer: impl Write,
    items: impl IntoIterator<Item = T>,
) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, &item)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
