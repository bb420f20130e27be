//! Browser playground over the core library. Three operations, each taking
//! and returning strings so the page needs no JS glue beyond JSON.parse:
//!
//! - [`render_mr`]: MR + template registry → plain text, annotated text,
//!   structure signature, and nesting violations.
//! - [`evaluate_prediction`]: MR + reference + prediction → per-record tree
//!   match, slot errors, and diagnostic sentence BLEU.
//! - [`qe_candidates`]: MR + templates + reference + seed → the positive
//!   pair and seeded negative candidates per transformation.
//!
//! Errors come back as `{"error": "..."}` rather than exceptions.

use std::io::Cursor;

use serde_json::json;
use wasm_bindgen::prelude::*;

use compgen_core::metrics::{evaluate, sentence_bleu, EvalRecord};
use compgen_core::qe_data::{
    flip_digits, make_positive, phrase_perturbation, self_pair_negative, PerturbKind,
};
use compgen_core::splits::Example;
use compgen_core::template_engine::{load_registry, RenderMode, TemplateRegistry};
use compgen_core::text::debracket;
use compgen_core::{parse_mr, MrTree};

fn error_json(message: impl std::fmt::Display) -> String {
    json!({ "error": message.to_string() }).to_string()
}

fn parse_inputs(mr: &str, templates_tsv: &str) -> Result<(MrTree, TemplateRegistry), String> {
    let tree = parse_mr(mr).map_err(|e| format!("MR: {e}"))?;
    let registry =
        load_registry(Cursor::new(templates_tsv)).map_err(|e| format!("templates: {e}"))?;
    Ok((tree, registry))
}

/// Parse an MR, render it through the given registry in both modes, and
/// report its structure signature and any nesting violations.
#[wasm_bindgen]
pub fn render_mr(mr: &str, templates_tsv: &str) -> String {
    let (tree, registry) = match parse_inputs(mr, templates_tsv) {
        Ok(v) => v,
        Err(e) => return error_json(e),
    };
    let plain = match registry.render(&tree, RenderMode::Plain) {
        Ok(text) => text,
        Err(e) => return error_json(e),
    };
    let annotated = match registry.render(&tree, RenderMode::Annotated) {
        Ok(text) => text,
        Err(e) => return error_json(e),
    };
    let violations: Vec<String> = tree
        .validate()
        .into_iter()
        .map(|v| format!("{}: {}", v.path, v.rule))
        .collect();
    json!({
        "plain": plain,
        "annotated": annotated,
        "signature": tree.signature().to_string(),
        "violations": violations,
    })
    .to_string()
}

/// Score one prediction against its input MR and reference.
#[wasm_bindgen]
pub fn evaluate_prediction(mr: &str, reference: &str, prediction: &str) -> String {
    let tree = match parse_mr(mr) {
        Ok(tree) => tree,
        Err(e) => return error_json(format!("MR: {e}")),
    };
    let slots = tree.slot_values();
    let record = EvalRecord::new("demo", tree, reference, prediction);
    let report = evaluate(&[record]);
    let plain_prediction = debracket(prediction).to_lowercase();
    let slot_status: Vec<_> = slots
        .iter()
        .map(|(label, value)| {
            json!({
                "label": label,
                "value": value,
                "found": plain_prediction.contains(&value.to_lowercase()),
            })
        })
        .collect();
    json!({
        "tree_match": report.per_record[0].tree_match,
        "slot_error": report.per_record[0].slot_error,
        "sentence_bleu": sentence_bleu(&debracket(reference), &debracket(prediction)),
        "slots": slot_status,
    })
    .to_string()
}

/// Synthesize quality-estimator pairs for one example: the positive pair
/// plus up to four seeded negatives per transformation. Retrieval-based
/// negatives need a corpus and are not part of the single-example demo.
#[wasm_bindgen]
pub fn qe_candidates(mr: &str, templates_tsv: &str, reference: &str, seed: u64) -> String {
    let (tree, registry) = match parse_inputs(mr, templates_tsv) {
        Ok(v) => v,
        Err(e) => return error_json(e),
    };
    let template_text = match registry.render(&tree, RenderMode::Plain) {
        Ok(text) => text,
        Err(e) => return error_json(e),
    };
    let example = Example {
        id: "demo".to_string(),
        query: String::new(),
        mr: tree,
        template_text,
        reference: reference.to_string(),
        schema_tag: None,
    };

    let mut pairs = Vec::new();
    match make_positive(&example) {
        Ok(pair) => pairs.push(pair),
        Err(e) => return error_json(e),
    }
    pairs.push(self_pair_negative(&example));
    for (offset, kind) in [PerturbKind::Swap, PerturbKind::Repeat, PerturbKind::Drop]
        .into_iter()
        .enumerate()
    {
        if let Ok(generated) = phrase_perturbation(&example, kind, seed + offset as u64, 4) {
            pairs.extend(generated);
        }
    }
    if let Ok(generated) = flip_digits(&example, seed + 3, 4) {
        pairs.extend(generated);
    }

    let rows: Vec<_> = pairs
        .iter()
        .map(|p| {
            json!({
                "origin": p.origin.as_str(),
                "rating": p.rating,
                "candidate": p.candidate,
            })
        })
        .collect();
    json!({ "source": example.template_text, "pairs": rows }).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use compgen_core::fixtures::{showcase_mr, WEATHER_TEMPLATES_TSV};

    #[test]
    fn render_reports_text_and_signature() {
        let out: serde_json::Value =
            serde_json::from_str(&render_mr(&showcase_mr(), WEATHER_TEMPLATES_TSV)).unwrap();
        assert!(out["plain"].as_str().unwrap().starts_with("No jacket"));
        assert!(out["signature"].as_str().unwrap().contains("[DS_JUSTIFY"));
        assert_eq!(out["violations"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn render_surfaces_parse_errors_as_json() {
        let out: serde_json::Value =
            serde_json::from_str(&render_mr("[DG_NO No", WEATHER_TEMPLATES_TSV)).unwrap();
        assert!(out["error"].as_str().unwrap().contains("unbalanced"));
    }

    #[test]
    fn evaluation_flags_missing_slots() {
        let out: serde_json::Value = serde_json::from_str(&evaluate_prediction(
            "[DG_INFORM [CONDITION light rain ] ]",
            "[DG_INFORM expect [CONDITION light rain ] ]",
            "[DG_INFORM expect [CONDITION sunshine ] ]",
        ))
        .unwrap();
        assert_eq!(out["tree_match"], true);
        assert_eq!(out["slot_error"], true);
        assert_eq!(out["slots"][0]["found"], false);
    }

    #[test]
    fn qe_candidates_cover_the_transformations() {
        let reference =
            "[DG_INFORM expect [CONDITION light rain ] at [DATE_TIME 5 pm ] in [LOCATION Oxford ] ]";
        let out: serde_json::Value = serde_json::from_str(&qe_candidates(
            "[DG_INFORM [CONDITION light rain ] [DATE_TIME 5 pm ] [LOCATION Oxford ] ]",
            WEATHER_TEMPLATES_TSV,
            reference,
            9,
        ))
        .unwrap();
        let origins: std::collections::HashSet<&str> = out["pairs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p["origin"].as_str().unwrap())
            .collect();
        for expected in ["positive", "self_pair", "swap", "repeat", "drop", "flip_digits"] {
            assert!(origins.contains(expected), "missing origin {expected}");
        }
    }
}
