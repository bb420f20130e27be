//! End-to-end subcommand behavior: exit codes, output shapes, error paths.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn compgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compgen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn validate_accepts_the_bundled_corpus() {
    let out = compgen(&["validate", &path(&fixtures().join("weather.corpus.jsonl"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_reports_unbalanced_mr_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("bad.jsonl");
    fs::write(
        &corpus,
        concat!(
            "{\"id\":\"a\",\"query\":\"q\",\"mr\":\"[DG_NO ]\",\"reference\":\"[DG_NO No ]\"}\n",
            "{\"id\":\"b\",\"query\":\"q\",\"mr\":\"[DG_NO No\",\"reference\":\"[DG_NO No ]\"}\n",
        ),
    )
    .unwrap();
    let out = compgen(&["validate", &path(&corpus)]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("\"line\":2"), "{stderr}");
    assert!(stderr.contains("mr_parse"), "{stderr}");
}

#[test]
fn validate_handles_empty_files_and_malformed_lines() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = compgen(&["validate", &path(&empty)]);
    assert_eq!(out.status.code(), Some(0));

    let mixed = dir.path().join("mixed.jsonl");
    fs::write(
        &mixed,
        concat!(
            "not json at all\n",
            "{\"id\":\"a\",\"query\":\"q\",\"mr\":\"[DG_NO ]\",\"reference\":\"[DG_NO No ]\"}\n",
        ),
    )
    .unwrap();
    let out = compgen(&["validate", &path(&mixed)]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("malformed_json"), "{stderr}");
    // The well-formed second record was still processed.
    assert!(stderr.contains("validated 1 records"), "{stderr}");
}

#[test]
fn render_emits_rendered_lines_and_flags_missing_templates() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    fs::write(
        &corpus,
        concat!(
            "{\"id\":\"ok\",\"query\":\"q\",\"mr\":\"[DG_NO ]\",\"reference\":\"[DG_NO No ]\"}\n",
            "{\"id\":\"bad\",\"query\":\"q\",\"mr\":\"[DG_MYSTERY ]\",\"reference\":\"[DG_NO No ]\"}\n",
        ),
    )
    .unwrap();
    let out = compgen(&[
        "render",
        &path(&corpus),
        "--templates",
        &path(&fixtures().join("weather.templates.tsv")),
        "--mode",
        "plain",
    ]);
    assert_eq!(out.status.code(), Some(2), "partial success expected");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("{\"id\":\"ok\",\"rendered\":\"No\"}"), "{stdout}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("\"id\":\"bad\""), "{stderr}");
    assert!(stderr.contains("DG_MYSTERY"), "{stderr}");
}

#[test]
fn render_aborts_on_broken_registry() {
    let dir = tempfile::tempdir().unwrap();
    let templates = dir.path().join("t.tsv");
    fs::write(&templates, "DG_NO\tFoo(\n").unwrap();
    let out = compgen(&[
        "render",
        &path(&fixtures().join("weather.corpus.jsonl")),
        "--templates",
        &path(&templates),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn eval_scores_identity_predictions_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixtures().join("weather.corpus.jsonl");
    let predictions = dir.path().join("p.jsonl");
    // Predictions := the annotated references themselves.
    let mut lines = String::new();
    for line in fs::read_to_string(&corpus).unwrap().lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        lines.push_str(
            &serde_json::json!({
                "id": record["id"],
                "prediction": record["reference"],
            })
            .to_string(),
        );
        lines.push('\n');
    }
    fs::write(&predictions, lines).unwrap();

    let out = compgen(&["eval", &path(&corpus), &path(&predictions)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("report is JSON");
    assert_eq!(report["tree_accuracy"], 1.0);
    assert_eq!(report["ser"], 0.0);
    assert_eq!(report["bleu4"], 100.0);
    assert_eq!(report["n"], 50);
}

#[test]
fn eval_rejects_unknown_prediction_ids() {
    let dir = tempfile::tempdir().unwrap();
    let predictions = dir.path().join("p.jsonl");
    fs::write(&predictions, "{\"id\":\"nope\",\"prediction\":\"x\"}\n").unwrap();
    let out = compgen(&[
        "eval",
        &path(&fixtures().join("weather.corpus.jsonl")),
        &path(&predictions),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn eval_writes_flags_file_aligned_with_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let flags = dir.path().join("flags.jsonl");
    let report = dir.path().join("report.json");
    let out = compgen(&[
        "eval",
        &path(&fixtures().join("eval_toy.corpus.jsonl")),
        &path(&fixtures().join("eval_toy.predictions.jsonl")),
        "-o",
        &path(&report),
        "--flags",
        &path(&flags),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let flag_lines: Vec<serde_json::Value> = fs::read_to_string(&flags)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(flag_lines.len(), 4);
    assert_eq!(flag_lines[0]["id"], "t1");
    assert_eq!(flag_lines[0]["tree_match"], true);
    assert_eq!(flag_lines[3]["slot_error"], true);
}

#[test]
fn split_outputs_cover_the_contracted_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("splits");
    let out = compgen(&[
        "split",
        &path(&fixtures().join("weather.corpus.jsonl")),
        "--templates",
        &path(&fixtures().join("weather.templates.tsv")),
        "--out",
        &path(&out_dir),
        "--sizes",
        "5,10,15",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for file in [
        "split.5.jsonl",
        "split.10.jsonl",
        "split.15.jsonl",
        "eval.seen.jsonl",
        "eval.unseen.jsonl",
        "unlabeled.jsonl",
        "manifest.json",
    ] {
        assert!(out_dir.join(file).is_file(), "missing {file}");
    }
    let count = |name: &str| {
        fs::read_to_string(out_dir.join(name))
            .unwrap()
            .lines()
            .count()
    };
    assert_eq!(count("split.5.jsonl"), 5);
    assert_eq!(count("split.10.jsonl"), 10);
    assert_eq!(count("split.15.jsonl"), 15);
    assert_eq!(count("unlabeled.jsonl") , 50 - 15);
}

#[test]
fn split_rejects_oversized_requests() {
    let dir = tempfile::tempdir().unwrap();
    let out = compgen(&[
        "split",
        &path(&fixtures().join("weather.corpus.jsonl")),
        "--templates",
        &path(&fixtures().join("weather.templates.tsv")),
        "--out",
        &path(&dir.path().join("x")),
        "--sizes",
        "2000",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("distinct signatures"));
}

#[test]
fn qedata_emits_train_and_validation_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("qe");
    let out = compgen(&[
        "qedata",
        &path(&fixtures().join("weather.corpus.jsonl")),
        "--templates",
        &path(&fixtures().join("weather.templates.tsv")),
        "--out",
        &path(&out_dir),
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["qe.train.jsonl", "qe.val.jsonl", "qe.stats.json"] {
        assert!(out_dir.join(file).is_file(), "missing {file}");
    }
    let first: serde_json::Value = serde_json::from_str(
        fs::read_to_string(out_dir.join("qe.train.jsonl"))
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    for key in ["source", "candidate", "rating", "origin", "example_id"] {
        assert!(first.get(key).is_some(), "missing field {key}");
    }
}

#[test]
fn selftrain_respects_state_dir_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let split_dir = dir.path().join("splits");
    let out = compgen(&[
        "split",
        &path(&fixtures().join("weather.corpus.jsonl")),
        "--templates",
        &path(&fixtures().join("weather.templates.tsv")),
        "--out",
        &path(&split_dir),
        "--sizes",
        "5,10",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));

    let env_state = dir.path().join("env-state");
    let out = Command::new(env!("CARGO_BIN_EXE_compgen"))
        .env("COMPGEN_STATE_DIR", &env_state)
        .args([
            "selftrain",
            "--labeled",
            &path(&split_dir.join("split.5.jsonl")),
            "--unlabeled",
            &path(&split_dir.join("unlabeled.jsonl")),
            "--templates",
            &path(&fixtures().join("weather.templates.tsv")),
            "--mock",
            "--mock-gold",
            &path(&fixtures().join("weather.corpus.jsonl")),
            "--iterations",
            "1",
            "--seed",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(env_state.join("iter_1/stats.json").is_file());
}
