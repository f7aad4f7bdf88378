//! Per-match metrics computed from transcripts.

use crate::oracle::max_attainable_payoff;
use crate::MetricsError;
use game_core::{BargainRole, Decision, GameKind, MoveSemantic};
use match_runner::{BargainRecord, MatchStatus, OpponentSpec, Transcript};
use prompt_kit::{EmotionKind, EmotionPromptStrategy, RelationKind};
use serde::Serialize;
use strategy_agents::StrategyKind;

/// Fraction of rounds the agent played the cooperative move; in BotS that is
/// conceding to the co-player's preferred equilibrium.
pub fn cooperation_rate(transcript: &Transcript) -> Result<f64, MetricsError> {
    if !transcript.config.game.is_repeated() {
        return Err(MetricsError::WrongGameKind {
            game: transcript.config.game,
        });
    }
    require_completed(transcript)?;
    let rounds = transcript.rounds.len();
    if rounds == 0 {
        return Err(MetricsError::EmptyTranscript);
    }
    let cooperative = transcript
        .rounds
        .iter()
        .filter(|r| {
            matches!(
                r.agent_move.semantic,
                MoveSemantic::Cooperate | MoveSemantic::ConcedePreference
            )
        })
        .count();
    Ok(cooperative as f64 / rounds as f64)
}

/// `(agent_total, best_attainable)` against the transcript's scripted
/// opponent — the exact rational behind [`percent_of_max`].
pub fn percent_of_max_exact(transcript: &Transcript) -> Result<(i64, i64), MetricsError> {
    if !transcript.config.game.is_repeated() {
        return Err(MetricsError::WrongGameKind {
            game: transcript.config.game,
        });
    }
    require_completed(transcript)?;
    let OpponentSpec::Strategy { strategy } = transcript.config.opponent else {
        return Err(MetricsError::NoScriptedOpponent);
    };
    let rounds = transcript
        .config
        .rounds
        .unwrap_or(transcript.rounds.len() as u32);
    let max = max_attainable_payoff(transcript.config.game, strategy, rounds)?;
    Ok((transcript.totals.0, max))
}

/// 100 x agent_total / best-response total, in [0, 100].
pub fn percent_of_max(transcript: &Transcript) -> Result<f64, MetricsError> {
    let (total, max) = percent_of_max_exact(transcript)?;
    Ok(100.0 * total as f64 / max as f64)
}

/// 100 x give / total_sum of a proposed split.
pub fn offered_share(record: &BargainRecord) -> f64 {
    let (keep, give) = record.split;
    100.0 * give as f64 / (keep + give) as f64
}

/// Accepted decisions over offers presented.
pub fn acceptance_rate(records: &[&BargainRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let accepted = records
        .iter()
        .filter(|r| r.decision == Decision::Accepted)
        .count();
    accepted as f64 / records.len() as f64
}

fn require_completed(transcript: &Transcript) -> Result<(), MetricsError> {
    match &transcript.status {
        MatchStatus::Completed => Ok(()),
        MatchStatus::Aborted { reason } => Err(MetricsError::AbortedTranscript {
            reason: reason.clone(),
        }),
    }
}

/// Everything the aggregator and reports need from one match, flattened.
/// Exactly the fields applicable to the game kind are populated.
#[derive(Debug, Clone, Serialize)]
pub struct MatchMetrics {
    pub match_key: String,
    pub game: GameKind,
    pub model: String,
    pub emotion: EmotionKind,
    pub emotion_strategy: EmotionPromptStrategy,
    pub relation: RelationKind,
    pub repetition: u32,
    pub completed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opponent: Option<StrategyKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<BargainRole>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cooperation_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub percent_of_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent_total: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_attainable: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offered_share: Option<f64>,
    /// Share of the budget offered TO the agent (responder bucketing).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offer_share: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accepted: Option<bool>,
}

/// Flatten one manifest entry + transcript into its metrics row. Aborted
/// matches yield a row with `completed = false` and no metric fields.
pub fn match_metrics(
    match_key: &str,
    repetition: u32,
    transcript: &Transcript,
) -> Result<MatchMetrics, MetricsError> {
    let config = &transcript.config;
    let mut row = MatchMetrics {
        match_key: match_key.to_string(),
        game: config.game,
        model: config.model_id.clone(),
        emotion: config.emotion,
        emotion_strategy: config.emotion_strategy,
        relation: config.relation,
        repetition,
        completed: transcript.status.is_completed(),
        opponent: match config.opponent {
            OpponentSpec::Strategy { strategy } => Some(strategy),
            _ => None,
        },
        role: config.bargain_role,
        budget: config.budget,
        cooperation_rate: None,
        percent_of_max: None,
        agent_total: None,
        max_attainable: None,
        offered_share: None,
        offer_share: None,
        accepted: None,
    };
    if !row.completed {
        return Ok(row);
    }
    if config.game.is_repeated() {
        row.cooperation_rate = Some(cooperation_rate(transcript)?);
        let (total, max) = percent_of_max_exact(transcript)?;
        row.agent_total = Some(total);
        row.max_attainable = Some(max);
        row.percent_of_max = Some(100.0 * total as f64 / max as f64);
    } else {
        let record = transcript
            .bargain
            .as_ref()
            .ok_or(MetricsError::EmptyTranscript)?;
        match record.role {
            BargainRole::DictatorProposer | BargainRole::UltimatumProposer => {
                row.offered_share = Some(offered_share(record));
            }
            BargainRole::UltimatumResponder => {
                row.offer_share = Some(offered_share(record));
                row.accepted = Some(record.decision == Decision::Accepted);
            }
        }
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use game_core::BargainRole;

    fn record(give: i64, decision: Decision) -> BargainRecord {
        BargainRecord {
            role: BargainRole::UltimatumResponder,
            split: (100 - give, give),
            decision,
            payouts: (0, 0),
            internal_dialog: None,
            prompt: String::new(),
            raw_reply: String::new(),
        }
    }

    #[test]
    fn offered_share_boundaries() {
        assert_eq!(offered_share(&record(35, Decision::Accepted)), 35.0);
        assert_eq!(offered_share(&record(0, Decision::Rejected)), 0.0);
        assert_eq!(offered_share(&record(100, Decision::Accepted)), 100.0);
    }

    #[test]
    fn acceptance_rate_is_monotone_under_accepted_appends() {
        let mut records = vec![
            record(10, Decision::Rejected),
            record(50, Decision::Accepted),
        ];
        let mut previous = acceptance_rate(&records.iter().collect::<Vec<_>>());
        for _ in 0..5 {
            records.push(record(60, Decision::Accepted));
            let now = acceptance_rate(&records.iter().collect::<Vec<_>>());
            assert!(now >= previous);
            previous = now;
        }
    }
}
