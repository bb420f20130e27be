//! Consistency between the committed fixture files and the fixture builders.
//!
//! To regenerate the derived fixtures after changing the builders or the
//! template TSVs, run:
//!
//! ```text
//! cargo test -p compgen-core --test fixture_files regen -- --ignored
//! ```

use std::fs;
use std::path::PathBuf;

use compgen_core::corpus::write_jsonl;
use compgen_core::fixtures::{
    showcase_mr, weather_corpus, weather_corpus_records, weather_registry, SHOWCASE_ID,
};
use compgen_core::mr_tree::parse_mr;
use compgen_core::template_engine::RenderMode;

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn generated_corpus_jsonl() -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, weather_corpus_records()).unwrap();
    String::from_utf8(buf).unwrap()
}

fn generated_showcase() -> (String, String, String) {
    let registry = weather_registry();
    let mr = showcase_mr();
    let tree = parse_mr(&mr).unwrap();
    let plain = registry.render(&tree, RenderMode::Plain).unwrap();
    let annotated = registry.render(&tree, RenderMode::Annotated).unwrap();
    (mr, plain, annotated)
}

#[test]
#[ignore = "writes the committed fixture files; run explicitly"]
fn regen() {
    let dir = fixtures_dir();
    fs::write(dir.join("weather.corpus.jsonl"), generated_corpus_jsonl()).unwrap();
    let (mr, plain, annotated) = generated_showcase();
    fs::write(dir.join("showcase.mr.txt"), format!("{mr}\n")).unwrap();
    fs::write(dir.join("showcase.plain.txt"), format!("{plain}\n")).unwrap();
    fs::write(dir.join("showcase.annotated.txt"), format!("{annotated}\n")).unwrap();
}

#[test]
fn committed_corpus_matches_builders() {
    let committed = fs::read_to_string(fixtures_dir().join("weather.corpus.jsonl"))
        .expect("committed corpus exists; regenerate with the regen test");
    assert_eq!(committed, generated_corpus_jsonl());
}

#[test]
fn committed_showcase_matches_renderer() {
    let dir = fixtures_dir();
    let (mr, plain, annotated) = generated_showcase();
    assert_eq!(
        fs::read_to_string(dir.join("showcase.mr.txt")).unwrap().trim_end(),
        mr
    );
    assert_eq!(
        fs::read_to_string(dir.join("showcase.plain.txt")).unwrap().trim_end(),
        plain
    );
    assert_eq!(
        fs::read_to_string(dir.join("showcase.annotated.txt")).unwrap().trim_end(),
        annotated
    );
}

#[test]
fn showcase_record_is_part_of_the_corpus() {
    let corpus = weather_corpus();
    let showcase = corpus.iter().find(|e| e.id == SHOWCASE_ID).unwrap();
    assert_eq!(compgen_core::serialize(&showcase.mr), showcase_mr());
}
