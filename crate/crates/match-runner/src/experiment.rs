//! Experiment execution: expand the grid, run matches across a worker pool,
//! persist one transcript file per match plus a JSON-lines manifest, and
//! resume idempotently by skipping completed entries.

use crate::config::{ExperimentConfig, MatchConfig};
use crate::transcript::{write_transcript, MatchStatus};
use crate::RunnerError;
use llm_gateway::{CallLog, Gateway, RecordingSession};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const CALL_LOG_FILE: &str = "call_log.jsonl";
pub const TRANSCRIPT_DIR: &str = "transcripts";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub match_key: String,
    /// Transcript path relative to the run directory.
    pub path: String,
    pub repetition: u32,
    pub status: MatchStatus,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ManifestLine {
    Run {
        argv: Vec<String>,
        grid: usize,
        repetitions: u32,
    },
    Entry(ManifestEntry),
}

/// The completed run: every grid entry in expansion order.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub entries: Vec<ManifestEntry>,
    pub out_dir: PathBuf,
}

impl RunManifest {
    pub fn completed(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.status.is_completed())
            .count()
    }

    pub fn aborted(&self) -> usize {
        self.entries.len() - self.completed()
    }

    pub fn transcript_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.out_dir.join(&entry.path)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOptions {
    /// Worker pool size; 0 means one worker per logical core.
    pub jobs: usize,
    /// Zero wall-clock fields so reruns are byte-identical.
    pub deterministic: bool,
    /// Recorded in the manifest header for provenance.
    pub argv: Vec<String>,
}

/// Load the manifest entries from a run directory (grid order).
pub fn read_manifest(out_dir: &Path) -> Result<RunManifest, RunnerError> {
    let path = out_dir.join(MANIFEST_FILE);
    let reader = BufReader::new(std::fs::File::open(&path)?);
    let mut entries = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ManifestLine>(&line)
            .map_err(|e| RunnerError::Transcript(format!("{}: {e}", path.display())))?
        {
            ManifestLine::Run { .. } => {}
            ManifestLine::Entry(entry) => entries.push(entry),
        }
    }
    Ok(RunManifest {
        entries,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Expand the grid and run every match not already completed, writing one
/// transcript per match and the manifest. Matches run concurrently; aborted
/// matches are recorded and flagged, not fatal.
pub fn run_experiment(
    config: &ExperimentConfig,
    gateway: &dyn Gateway,
    out_dir: &Path,
    options: &ExperimentOptions,
) -> Result<RunManifest, RunnerError> {
    let grid = config.expand_grid()?;
    std::fs::create_dir_all(out_dir.join(TRANSCRIPT_DIR))?;

    // Resume: anything already completed keeps its transcript and entry.
    let mut done: HashMap<String, ManifestEntry> = HashMap::new();
    if out_dir.join(MANIFEST_FILE).exists() {
        for entry in read_manifest(out_dir)?.entries {
            if entry.status.is_completed() && out_dir.join(&entry.path).exists() {
                done.insert(entry.match_key.clone(), entry);
            }
        }
    }

    let pending: Vec<&MatchConfig> = grid
        .iter()
        .filter(|m| !done.contains_key(&m.match_key()))
        .collect();

    let call_log = CallLog::open(&out_dir.join(CALL_LOG_FILE))?;
    let incremental = Mutex::new(
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(out_dir.join(MANIFEST_FILE))?,
    );

    let run_one = |match_config: &&MatchConfig| -> Result<ManifestEntry, RunnerError> {
        let key = match_config.match_key();
        let session = gateway.session(&key);
        let mut session =
            RecordingSession::new(session, call_log.clone(), &key, options.deterministic);
        let transcript = crate::run_match(match_config, &mut session)?;
        let rel_path = format!("{TRANSCRIPT_DIR}/{key}.jsonl");
        write_transcript(&out_dir.join(&rel_path), &transcript)?;
        let entry = ManifestEntry {
            match_key: key,
            path: rel_path,
            repetition: match_config.repetition,
            status: transcript.status,
        };
        // Crash-safe incremental append; rewritten in grid order at the end.
        let mut file = incremental.lock().expect("manifest lock");
        writeln!(
            file,
            "{}",
            serde_json::to_string(&ManifestLine::Entry(entry.clone())).unwrap()
        )?;
        Ok(entry)
    };

    let fresh: Vec<ManifestEntry> = if options.jobs == 1 {
        pending.iter().map(run_one).collect::<Result<_, _>>()?
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if options.jobs > 0 {
            builder = builder.num_threads(options.jobs);
        }
        let pool = builder
            .build()
            .map_err(|e| RunnerError::Config(e.to_string()))?;
        pool.install(|| pending.par_iter().map(run_one).collect::<Result<_, _>>())?
    };

    let mut by_key: HashMap<String, ManifestEntry> = done;
    for entry in fresh {
        by_key.insert(entry.match_key.clone(), entry);
    }

    // Final manifest: header plus entries in grid order.
    let entries: Vec<ManifestEntry> = grid
        .iter()
        .map(|m| {
            by_key
                .get(&m.match_key())
                .expect("every grid entry ran or resumed")
                .clone()
        })
        .collect();
    let mut out = String::new();
    out.push_str(
        &serde_json::to_string(&ManifestLine::Run {
            argv: options.argv.clone(),
            grid: grid.len(),
            repetitions: config.experiment.repetitions,
        })
        .unwrap(),
    );
    out.push('\n');
    for entry in &entries {
        out.push_str(&serde_json::to_string(&ManifestLine::Entry(entry.clone())).unwrap());
        out.push('\n');
    }
    let tmp = out_dir.join("manifest.jsonl.tmp");
    std::fs::write(&tmp, out)?;
    std::fs::rename(tmp, out_dir.join(MANIFEST_FILE))?;

    Ok(RunManifest {
        entries,
        out_dir: out_dir.to_path_buf(),
    })
}
