//! Metrics over match transcripts: cooperation rate, percent of the maximum
//! attainable reward (via the best-response oracle), offered share and
//! acceptance rate for bargaining, aggregation over repetitions, and report
//! emission.

mod aggregate;
mod metrics;
mod oracle;
mod report;

pub use aggregate::{aggregate, AggregateMetrics, GroupKey, MetricKind};
pub use metrics::{
    acceptance_rate, cooperation_rate, match_metrics, offered_share, percent_of_max,
    percent_of_max_exact, MatchMetrics,
};
pub use oracle::{
    best_response, max_attainable_payoff, max_payoff_dp, max_payoff_exhaustive,
    EXHAUSTIVE_ROUNDS_CAP,
};
pub use report::{
    acceptance_csv, baselines, emit_report, load_metrics, metrics_csv, report_markdown, ReportFiles,
};

use game_core::GameKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{game:?} has no repeated-game metrics")]
    WrongGameKind { game: GameKind },
    #[error("exhaustive oracle capped at {cap} rounds (asked for {rounds})")]
    TooManyRounds { rounds: u32, cap: u32 },
    #[error("transcript was aborted ({reason}); excluded from metrics")]
    AbortedTranscript { reason: String },
    #[error("transcript has no scripted strategy opponent")]
    NoScriptedOpponent,
    #[error("transcript carries no records")]
    EmptyTranscript,
    #[error(transparent)]
    Runner(#[from] match_runner::RunnerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
