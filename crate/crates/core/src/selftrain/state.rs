//! Persisted self-training state.
//!
//! Layout under the state directory:
//!
//! ```text
//! state/
//!   labeled.current.jsonl      # S snapshot before the most recent retrain
//!   iter_1/
//!     retrain.request.json
//!     accepted.jsonl
//!     rejected.jsonl
//!     stats.json               # written last: marks the iteration complete
//!   iter_2/ ...
//!   final.labeled.jsonl        # written when a run finishes
//!   audit.json
//! ```
//!
//! Every file is written to a sibling `*.tmp` path and renamed into place,
//! so a crash never leaves a half-written artifact behind and resume can
//! trust whatever it finds.

use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{AuditReport, IterationStats, LabeledSet, ScoredCandidate};
use crate::corpus::write_jsonl;

/// One accepted pseudo-pair with provenance. `score` is absent in vanilla
/// mode, where no scorer runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedPair {
    pub source: String,
    pub candidate: String,
    pub score: Option<f64>,
    pub iteration: usize,
}

/// The retrain signal the orchestrator emits before each iteration. Actual
/// training is an external job; this file is its input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrainRequest {
    pub iteration: usize,
    /// Labeled-set snapshot, relative to the state directory root.
    pub labeled_path: PathBuf,
    pub labeled_size: usize,
    pub score_threshold: f64,
    pub batch_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct StateDir {
    root: PathBuf,
}

impl StateDir {
    pub fn new(root: impl Into<PathBuf>) -> StateDir {
        StateDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn ensure(&self) -> io::Result<()> {
        fs::create_dir_all(&self.root)
    }

    pub fn iter_dir(&self, iteration: usize) -> PathBuf {
        self.root.join(format!("iter_{iteration}"))
    }

    fn write_atomic(&self, path: &Path, write: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> io::Result<()> {
        let tmp = path.with_extension(match path.extension() {
            Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
            None => "tmp".to_string(),
        });
        {
            let mut writer = BufWriter::new(fs::File::create(&tmp)?);
            write(&mut writer)?;
            writer.flush()?;
        }
        fs::rename(&tmp, path)
    }

    fn write_json_atomic<T: Serialize>(&self, path: &Path, value: &T) -> io::Result<()> {
        self.write_atomic(path, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    fn read_json<T: DeserializeOwned>(&self, path: &Path) -> io::Result<T> {
        let reader = BufReader::new(fs::File::open(path)?);
        serde_json::from_reader(reader).map_err(io::Error::other)
    }

    /// Snapshot the current labeled set; the retrain request points here.
    /// Returns the path relative to the state root so persisted state stays
    /// byte-identical across locations.
    pub fn write_labeled_snapshot(&self, labeled: &LabeledSet) -> io::Result<PathBuf> {
        let relative = PathBuf::from("labeled.current.jsonl");
        self.write_atomic(&self.root.join(&relative), |w| write_jsonl(w, &labeled.pairs))?;
        Ok(relative)
    }

    pub fn write_retrain_request(
        &self,
        iteration: usize,
        request: &RetrainRequest,
    ) -> io::Result<()> {
        let dir = self.iter_dir(iteration);
        fs::create_dir_all(&dir)?;
        self.write_json_atomic(&dir.join("retrain.request.json"), request)
    }

    /// Persist one finished iteration. `stats.json` lands last and marks
    /// the iteration complete for resume.
    pub fn persist_iteration(
        &self,
        iteration: usize,
        accepted: &[AcceptedPair],
        rejected: &[ScoredCandidate],
        stats: &IterationStats,
    ) -> io::Result<()> {
        let dir = self.iter_dir(iteration);
        fs::create_dir_all(&dir)?;
        self.write_atomic(&dir.join("accepted.jsonl"), |w| write_jsonl(w, accepted))?;
        self.write_atomic(&dir.join("rejected.jsonl"), |w| write_jsonl(w, rejected))?;
        self.write_json_atomic(&dir.join("stats.json"), stats)
    }

    /// Completed iterations in order, stopping at the first gap. An
    /// iteration counts as complete only when its stats file exists.
    pub fn load_completed(&self) -> io::Result<Vec<(IterationStats, Vec<AcceptedPair>)>> {
        let mut completed = Vec::new();
        for iteration in 1.. {
            let dir = self.iter_dir(iteration);
            let stats_path = dir.join("stats.json");
            if !stats_path.is_file() {
                break;
            }
            let stats: IterationStats = self.read_json(&stats_path)?;
            let accepted: Vec<AcceptedPair> = {
                let reader = BufReader::new(fs::File::open(dir.join("accepted.jsonl"))?);
                crate::corpus::read_jsonl(reader).map_err(io::Error::other)?
            };
            completed.push((stats, accepted));
        }
        Ok(completed)
    }

    /// Final artifacts: the augmented labeled set and the audit report.
    pub fn write_final(&self, labeled: &LabeledSet, report: &AuditReport) -> io::Result<()> {
        self.write_atomic(&self.root.join("final.labeled.jsonl"), |w| {
            write_jsonl(w, &labeled.pairs)
        })?;
        self.write_json_atomic(&self.root.join("audit.json"), report)
    }
}
