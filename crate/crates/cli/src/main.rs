//! `compgen`: the few-shot data-to-text pipeline over JSONL corpora.
//!
//! Exit codes: 0 success, 1 validation failure, 2 partial success,
//! 3 and up operational error.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use compgen_cli::{cmd, io_util, EXIT_OPERATIONAL};

#[derive(Parser)]
#[command(name = "compgen", version, about = "Few-shot compositional data-to-text toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Plain,
    Annotated,
}

impl From<Mode> for compgen_core::RenderMode {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Plain => compgen_core::RenderMode::Plain,
            Mode::Annotated => compgen_core::RenderMode::Annotated,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check that every corpus record parses and satisfies the nesting rules.
    Validate {
        /// Corpus JSONL: {"id", "query", "mr", "reference", "schema_tag"}.
        corpus: PathBuf,
        /// Write violations to this file instead of stderr.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Accept references that are not bracketed trees.
        #[arg(long)]
        allow_plain_references: bool,
    },
    /// Render each MR through a template registry.
    Render {
        corpus: PathBuf,
        /// Template file: one NAME<TAB>BODY per line, `#` comments.
        #[arg(long)]
        templates: PathBuf,
        #[arg(long, value_enum, default_value = "plain")]
        mode: Mode,
        /// Output JSONL of {"id", "rendered"}; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score predictions against a corpus: tree accuracy, SER, BLEU-4.
    Eval {
        corpus: PathBuf,
        /// Predictions JSONL: {"id", "prediction"}.
        predictions: PathBuf,
        /// Report JSON path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Per-record flags JSONL path.
        #[arg(long)]
        flags: Option<PathBuf>,
    },
    /// Construct nested few-shot splits and seen/unseen evaluation sets.
    Split {
        corpus: PathBuf,
        #[arg(long)]
        templates: PathBuf,
        /// Output directory for split.<size>.jsonl, eval.*.jsonl,
        /// unlabeled.jsonl, and manifest.json.
        #[arg(long)]
        out: PathBuf,
        /// Ascending split sizes.
        #[arg(long, value_delimiter = ',', default_values_t = vec![250usize, 500, 750, 1000])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Evaluation candidates corpus; defaults to the pool remainder
        /// outside the largest split.
        #[arg(long)]
        eval_candidates: Option<PathBuf>,
    },
    /// Synthesize the quality-estimator fine-tuning dataset.
    Qedata {
        corpus: PathBuf,
        #[arg(long)]
        templates: PathBuf,
        /// Output directory for qe.train.jsonl, qe.val.jsonl, qe.stats.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Similar-example retrieval depth.
        #[arg(long, default_value_t = compgen_core::qe_data::DEFAULT_K)]
        k: usize,
        /// Retrieval BLEU ceiling; nearer inputs are skipped.
        #[arg(long, default_value_t = compgen_core::qe_data::DEFAULT_BLEU_THRESHOLD)]
        bleu_threshold: f64,
    },
    /// Run the threshold-gated self-training loop.
    Selftrain {
        /// Gold labeled corpus JSONL.
        #[arg(long)]
        labeled: PathBuf,
        /// Unlabeled JSONL: {"mr", "template_text"}.
        #[arg(long)]
        unlabeled: PathBuf,
        #[arg(long)]
        templates: PathBuf,
        /// State directory; overridden by COMPGEN_STATE_DIR.
        #[arg(long)]
        state_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        iterations: usize,
        #[arg(long, default_value_t = 0.99)]
        score_threshold: f64,
        #[arg(long, default_value_t = 16)]
        batch_size: usize,
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, conflicts_with = "mock")]
        generator_url: Option<String>,
        #[arg(long, conflicts_with = "mock")]
        scorer_url: Option<String>,
        /// Use the in-tree scripted clients instead of HTTP services.
        #[arg(long)]
        mock: bool,
        /// Corpus supplying gold responses for the mock clients.
        #[arg(long, requires = "mock")]
        mock_gold: Option<PathBuf>,
        /// Fraction of mock generations corrupted per model version.
        #[arg(long, default_value_t = 0.3, requires = "mock")]
        mock_corruption: f64,
        /// Accept a seeded sample of these per-iteration sizes instead of
        /// score-thresholded selection.
        #[arg(long, value_delimiter = ',')]
        vanilla_counts: Option<Vec<usize>>,
        /// Targets are plain text rather than annotated trees.
        #[arg(long)]
        plain_targets: bool,
        /// Poll the generator version after each retrain signal.
        #[arg(long)]
        wait_for_retrain: bool,
        #[arg(long, default_value_t = 60)]
        request_timeout_secs: u64,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate {
            corpus,
            report,
            allow_plain_references,
        } => cmd::validate::run(&corpus, report.as_deref(), allow_plain_references),
        Command::Render {
            corpus,
            templates,
            mode,
            output,
        } => cmd::render::run(&corpus, &templates, mode.into(), output.as_deref()),
        Command::Eval {
            corpus,
            predictions,
            output,
            flags,
        } => cmd::eval::run(&corpus, &predictions, output.as_deref(), flags.as_deref()),
        Command::Split {
            corpus,
            templates,
            out,
            sizes,
            seed,
            eval_candidates,
        } => cmd::split::run(
            &corpus,
            &templates,
            &out,
            &sizes,
            seed,
            eval_candidates.as_deref(),
        ),
        Command::Qedata {
            corpus,
            templates,
            out,
            seed,
            k,
            bleu_threshold,
        } => cmd::qedata::run(&corpus, &templates, &out, seed, k, bleu_threshold),
        Command::Selftrain {
            labeled,
            unlabeled,
            templates,
            state_dir,
            iterations,
            score_threshold,
            batch_size,
            parallelism,
            seed,
            generator_url,
            scorer_url,
            mock,
            mock_gold,
            mock_corruption,
            vanilla_counts,
            plain_targets,
            wait_for_retrain,
            request_timeout_secs,
        } => cmd::selftrain::run(cmd::selftrain::Args {
            labeled,
            unlabeled,
            templates,
            state_dir,
            iterations,
            score_threshold,
            batch_size,
            parallelism,
            seed,
            generator_url,
            scorer_url,
            mock,
            mock_gold,
            mock_corruption,
            vanilla_counts,
            plain_targets,
            wait_for_retrain,
            request_timeout_secs,
        }),
    };

    match result {
        Ok(code) => std::process::exit(code),
        Err(error) => {
            io_util::print_error_object(&error);
            std::process::exit(EXIT_OPERATIONAL);
        }
    }
}
