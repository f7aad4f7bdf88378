//! Transcript persistence: one JSON object per line — a header with the
//! config snapshot, one line per round (or one bargain line), and a summary
//! line with totals and status.

use crate::config::MatchParams;
use crate::RunnerError;
use game_core::{BargainRole, Decision, MoveSemantic};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum MatchStatus {
    Completed,
    Aborted { reason: String },
}

impl MatchStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, MatchStatus::Completed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub label: char,
    pub semantic: MoveSemantic,
}

/// Everything observed in one repeated-game round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub agent_move: MoveRecord,
    pub opponent_move: MoveRecord,
    /// (agent, opponent) rewards; always re-derivable from the moves.
    pub rewards: (i64, i64),
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub internal_dialog: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub own_emotion: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub own_emotion_flagged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shown_emotion: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seen_emotion: Option<String>,
    /// Raw prompt and reply of the move turn, for audit and replay.
    pub question: String,
    pub raw_reply: String,
    /// The memory entry appended after this round.
    pub memory_entry: String,
}

/// The single decision line of a bargaining match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BargainRecord {
    pub role: BargainRole,
    /// (keep, give) from the proposer's perspective.
    pub split: (i64, i64),
    pub decision: Decision,
    /// (proposer, receiver) payouts after settlement.
    pub payouts: (i64, i64),
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub internal_dialog: Option<String>,
    pub prompt: String,
    pub raw_reply: String,
}

/// A finished (or aborted) match: the replayable record of every call, move,
/// reward, and emotion probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub config: MatchParams,
    pub rounds: Vec<RoundRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bargain: Option<BargainRecord>,
    /// (agent, opponent) cumulative totals.
    pub totals: (i64, i64),
    pub status: MatchStatus,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TranscriptLine {
    Header {
        config: MatchParams,
    },
    Round(RoundRecord),
    Bargain(BargainRecord),
    Summary {
        totals: (i64, i64),
        status: MatchStatus,
    },
}

/// Serialize a transcript to its JSON-lines form.
pub fn transcript_to_jsonl(transcript: &Transcript) -> String {
    let mut out = String::new();
    let mut push = |line: &TranscriptLine| {
        out.push_str(&serde_json::to_string(line).expect("line serializes"));
        out.push('\n');
    };
    push(&TranscriptLine::Header {
        config: transcript.config.clone(),
    });
    for round in &transcript.rounds {
        push(&TranscriptLine::Round(round.clone()));
    }
    if let Some(bargain) = &transcript.bargain {
        push(&TranscriptLine::Bargain(bargain.clone()));
    }
    push(&TranscriptLine::Summary {
        totals: transcript.totals,
        status: transcript.status.clone(),
    });
    out
}

/// Write atomically: temp file in the same directory, then rename.
pub fn write_transcript(path: &Path, transcript: &Transcript) -> Result<(), RunnerError> {
    let dir = path.parent().ok_or_else(|| {
        RunnerError::Config(format!("transcript path {} has no parent", path.display()))
    })?;
    std::fs::create_dir_all(dir)?;
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(transcript_to_jsonl(transcript).as_bytes())?;
        file.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_transcript(path: &Path) -> Result<Transcript, RunnerError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut config = None;
    let mut rounds = Vec::new();
    let mut bargain = None;
    let mut summary = None;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TranscriptLine = serde_json::from_str(&line)
            .map_err(|e| RunnerError::Transcript(format!("{}: {e}", path.display())))?;
        match parsed {
            TranscriptLine::Header { config: c } => config = Some(c),
            TranscriptLine::Round(r) => rounds.push(r),
            TranscriptLine::Bargain(b) => bargain = Some(b),
            TranscriptLine::Summary { totals, status } => summary = Some((totals, status)),
        }
    }
    let config = config
        .ok_or_else(|| RunnerError::Transcript(format!("{}: missing header", path.display())))?;
    let (totals, status) = summary
        .ok_or_else(|| RunnerError::Transcript(format!("{}: missing summary", path.display())))?;
    Ok(Transcript {
        config,
        rounds,
        bargain,
        totals,
        status,
    })
}
