//! Match orchestration: drives the repeated-game and bargaining pipelines
//! against a chat backend, expands experiment grids, and persists
//! transcripts plus a run manifest.

mod config;
mod experiment;
mod matches;
mod transcript;

pub use config::{
    ExperimentConfig, GatewaySection, GridSection, MatchConfig, MatchParams, OpponentSpec,
};
pub use experiment::{
    read_manifest, run_experiment, ExperimentOptions, ManifestEntry, RunManifest,
};
pub use matches::run_match;
pub use transcript::{
    read_transcript, transcript_to_jsonl, write_transcript, BargainRecord, MatchStatus, MoveRecord,
    RoundRecord, Transcript,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown override key '{0}'")]
    UnknownOverride(String),
    #[error("transcript error: {0}")]
    Transcript(String),
    #[error(transparent)]
    Game(#[from] game_core::GameError),
    #[error(transparent)]
    Strategy(#[from] strategy_agents::StrategyError),
    #[error(transparent)]
    Prompt(#[from] prompt_kit::PromptError),
    #[error(transparent)]
    Gateway(#[from] llm_gateway::GatewayError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
