//! `compgen validate`: streaming corpus validation.

use std::collections::HashSet;
use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use compgen_core::corpus::{jsonl_iter, CorpusRecord, JsonlError};
use compgen_core::parse_mr;

use crate::io_util::{open_reader, writer_or_stdout};
use crate::{EXIT_OK, EXIT_VALIDATION};

#[derive(Debug, Serialize)]
struct ValidationIssue {
    line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    kind: &'static str,
    detail: String,
}

pub fn run(corpus: &Path, report: Option<&Path>, allow_plain_references: bool) -> Result<i32> {
    let reader = open_reader(corpus)?;
    let mut out = writer_or_stdout(report)?;
    let mut issues = 0usize;
    let mut records = 0usize;
    let mut seen_ids: HashSet<String> = HashSet::new();

    let mut emit = |issue: ValidationIssue, out: &mut dyn std::io::Write| {
        issues += 1;
        // Violations stream as JSONL; stdout stays clean for pipelines.
        match report {
            Some(_) => writeln!(out, "{}", serde_json::to_string(&issue).unwrap()),
            None => {
                eprintln!("{}", serde_json::to_string(&issue).unwrap());
                Ok(())
            }
        }
        .expect("write violation");
    };

    for item in jsonl_iter::<CorpusRecord>(reader) {
        match item {
            Err(JsonlError::Malformed { line, message }) => emit(
                ValidationIssue {
                    line,
                    id: None,
                    kind: "malformed_json",
                    detail: message,
                },
                &mut out,
            ),
            Err(JsonlError::Io(e)) => return Err(e.into()),
            Ok((line, record)) => {
                records += 1;
                if !seen_ids.insert(record.id.clone()) {
                    emit(
                        ValidationIssue {
                            line,
                            id: Some(record.id.clone()),
                            kind: "duplicate_id",
                            detail: format!("id {:?} already seen", record.id),
                        },
                        &mut out,
                    );
                }
                match parse_mr(&record.mr) {
                    Err(e) => emit(
                        ValidationIssue {
                            line,
                            id: Some(record.id.clone()),
                            kind: "mr_parse",
                            detail: e.to_string(),
                        },
                        &mut out,
                    ),
                    Ok(tree) => {
                        for violation in tree.validate() {
                            emit(
                                ValidationIssue {
                                    line,
                                    id: Some(record.id.clone()),
                                    kind: "mr_nesting",
                                    detail: format!("{}: {}", violation.path, violation.rule),
                                },
                                &mut out,
                            );
                        }
                    }
                }
                if !allow_plain_references {
                    if let Err(e) = parse_mr(&record.reference) {
                        emit(
                            ValidationIssue {
                                line,
                                id: Some(record.id.clone()),
                                kind: "reference_parse",
                                detail: e.to_string(),
                            },
                            &mut out,
                        );
                    }
                }
            }
        }
    }
    out.flush()?;

    if records == 0 {
        log::warn!("{}: 0 records", corpus.display());
    }
    eprintln!(
        "validated {records} records, {issues} violation{}",
        if issues == 1 { "" } else { "s" }
    );
    Ok(if issues == 0 { EXIT_OK } else { EXIT_VALIDATION })
}
