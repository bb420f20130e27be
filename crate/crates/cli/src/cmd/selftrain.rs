//! `compgen selftrain`: drive the loop against HTTP services or the
//! in-tree mock clients.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use compgen_core::corpus::UnlabeledRecord;
use compgen_core::selftrain::mock::{MockGenerator, OracleScorer};
use compgen_core::selftrain::{
    audit_report, GeneratorClient, LabeledSet, ScorerClient, SelfTrainConfig, SelfTrainer,
    UnlabeledSet,
};
use compgen_core::template_engine::RenderMode;

use crate::http_client::{HttpGeneratorClient, HttpScorerClient};
use crate::io_util::{hydrate_examples, load_registry_file, open_reader, read_corpus};
use crate::EXIT_OK;

pub struct Args {
    pub labeled: PathBuf,
    pub unlabeled: PathBuf,
    pub templates: PathBuf,
    pub state_dir: Option<PathBuf>,
    pub iterations: usize,
    pub score_threshold: f64,
    pub batch_size: usize,
    pub parallelism: usize,
    pub seed: u64,
    pub generator_url: Option<String>,
    pub scorer_url: Option<String>,
    pub mock: bool,
    pub mock_gold: Option<PathBuf>,
    pub mock_corruption: f64,
    pub vanilla_counts: Option<Vec<usize>>,
    pub plain_targets: bool,
    pub wait_for_retrain: bool,
    pub request_timeout_secs: u64,
}

/// Crash-injection hook for recovery testing: exit hard after persisting
/// the given iteration.
const CRASH_AFTER_ITER_ENV: &str = "COMPGEN_CRASH_AFTER_ITER";

pub fn run(args: Args) -> Result<i32> {
    let state_dir = std::env::var_os("COMPGEN_STATE_DIR")
        .map(PathBuf::from)
        .or(args.state_dir.clone())
        .context("--state-dir or COMPGEN_STATE_DIR is required")?;

    let registry = load_registry_file(&args.templates)?;

    let labeled_records = read_corpus(&args.labeled)?;
    let labeled_examples = hydrate_examples(&labeled_records, &registry)?;
    let labeled = LabeledSet::from_gold(
        labeled_examples
            .iter()
            .map(|e| (e.template_text.clone(), e.reference.clone())),
        !args.plain_targets,
    )?;

    let unlabeled_records: Vec<UnlabeledRecord> =
        compgen_core::corpus::read_jsonl(open_reader(&args.unlabeled)?)
            .with_context(|| format!("reading unlabeled {}", args.unlabeled.display()))?;
    let unlabeled = UnlabeledSet::new(unlabeled_records.into_iter().map(|r| r.template_text));

    let mut config = SelfTrainConfig::new(state_dir);
    config.iterations = args.iterations;
    config.score_threshold = args.score_threshold;
    config.batch_size = args.batch_size;
    config.parallelism = args.parallelism;
    config.seed = args.seed;
    config.wait_for_retrain = args.wait_for_retrain;
    config.vanilla_counts = args.vanilla_counts.clone();

    let crash_after: Option<usize> = std::env::var(CRASH_AFTER_ITER_ENV)
        .ok()
        .and_then(|v| v.parse().ok());

    let outcome = if args.mock {
        let gold_path = args
            .mock_gold
            .as_deref()
            .context("--mock requires --mock-gold")?;
        let gold = gold_map(gold_path, &registry)?;
        let generator = MockGenerator::new(gold.clone(), args.mock_corruption, args.seed);
        let scorer = OracleScorer::new(gold);
        run_loop(config, &generator, &scorer, labeled, unlabeled, crash_after)?
    } else {
        let (Some(generator_url), Some(scorer_url)) = (&args.generator_url, &args.scorer_url)
        else {
            bail!("provide --generator-url and --scorer-url, or --mock");
        };
        let generator = HttpGeneratorClient::new(generator_url, args.request_timeout_secs);
        let scorer = HttpScorerClient::new(scorer_url, args.request_timeout_secs);
        run_loop(config, &generator, &scorer, labeled, unlabeled, crash_after)?
    };

    print!("{}", audit_report(&outcome.stats, &[]));
    println!(
        "final labeled set: {} pairs; unlabeled remaining: {}",
        outcome.labeled.len(),
        outcome.unlabeled.len()
    );
    Ok(EXIT_OK)
}

fn run_loop<G: GeneratorClient + Sync, S: ScorerClient + Sync>(
    config: SelfTrainConfig,
    generator: &G,
    scorer: &S,
    labeled: LabeledSet,
    unlabeled: UnlabeledSet,
    crash_after: Option<usize>,
) -> Result<compgen_core::selftrain::SelfTrainOutcome> {
    let trainer = SelfTrainer::new(config, generator, scorer);
    let outcome = trainer.run_with_observer(labeled, unlabeled, |stats| {
        eprintln!(
            "iteration {}: {} candidates, {} accepted",
            stats.iteration, stats.candidates, stats.accepted
        );
        if crash_after == Some(stats.iteration) {
            // Simulated hard crash, after this iteration's state landed.
            std::process::exit(crate::EXIT_OPERATIONAL);
        }
    })?;
    Ok(outcome)
}

/// template_text → annotated reference, for the scripted clients.
fn gold_map(
    path: &Path,
    registry: &compgen_core::template_engine::TemplateRegistry,
) -> Result<HashMap<String, String>> {
    let records = read_corpus(path)?;
    let mut gold = HashMap::new();
    for record in &records {
        let mr = compgen_core::parse_mr(&record.mr)
            .with_context(|| format!("mock gold record {}: MR does not parse", record.id))?;
        let template_text = registry
            .render(&mr, RenderMode::Plain)
            .with_context(|| format!("mock gold record {}: render failed", record.id))?;
        gold.insert(template_text, record.reference.clone());
    }
    Ok(gold)
}
