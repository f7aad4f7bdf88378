//! Aggregation over repetitions: mean/min/max per configuration group,
//! aborted matches excluded from means and counted separately.

use crate::metrics::MatchMetrics;
use game_core::{BargainRole, GameKind};
use prompt_kit::{EmotionKind, EmotionPromptStrategy, RelationKind};
use serde::Serialize;
use std::collections::BTreeMap;
use strategy_agents::StrategyKind;

/// Which per-match number is being aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    CooperationRate,
    PercentOfMax,
    OfferedShare,
    /// Mean of accepted-as-0/1, i.e. the acceptance rate of the group.
    AcceptanceRate,
}

impl MetricKind {
    fn extract(self, row: &MatchMetrics) -> Option<f64> {
        match self {
            MetricKind::CooperationRate => row.cooperation_rate,
            MetricKind::PercentOfMax => row.percent_of_max,
            MetricKind::OfferedShare => row.offered_share,
            MetricKind::AcceptanceRate => row.accepted.map(|a| if a { 1.0 } else { 0.0 }),
        }
    }
}

/// Grouping key; unused dimensions stay `None` so keys order cleanly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct GroupKey {
    pub game: GameKind,
    pub model: String,
    pub emotion_strategy: EmotionPromptStrategy,
    pub relation: RelationKind,
    pub emotion: EmotionKind,
    pub opponent: Option<StrategyKind>,
    pub role: Option<BargainRole>,
    pub budget: Option<i64>,
    /// Responder offer share bucket, in whole percent.
    pub offer_share_pct: Option<i64>,
}

impl GroupKey {
    fn of(row: &MatchMetrics, bucket_offers: bool) -> GroupKey {
        GroupKey {
            game: row.game,
            model: row.model.clone(),
            emotion_strategy: row.emotion_strategy,
            relation: row.relation,
            emotion: row.emotion,
            opponent: row.opponent,
            role: row.role,
            budget: row.budget,
            offer_share_pct: if bucket_offers {
                row.offer_share.map(|s| s.round() as i64)
            } else {
                None
            },
        }
    }
}

/// mean/min/max of one metric over one group's completed repetitions.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateMetrics {
    pub key: GroupKey,
    pub metric: MetricKind,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Completed matches contributing to the statistics.
    pub count: usize,
    /// Aborted matches in the group, excluded from the statistics.
    pub aborted: usize,
}

/// Group rows and aggregate `metric`. Responder acceptance additionally
/// buckets by the offered share so the acceptance-by-share tables fall out
/// of the same reduction. Aggregation order is deterministic and
/// permutation-invariant over the input order.
pub fn aggregate(rows: &[MatchMetrics], metric: MetricKind) -> Vec<AggregateMetrics> {
    let bucket_offers = metric == MetricKind::AcceptanceRate;
    let mut groups: BTreeMap<GroupKey, (Vec<f64>, usize)> = BTreeMap::new();
    for row in rows {
        let key = GroupKey::of(row, bucket_offers);
        let entry = groups.entry(key).or_default();
        if !row.completed {
            entry.1 += 1;
            continue;
        }
        if let Some(value) = metric.extract(row) {
            entry.0.push(value);
        }
    }
    groups
        .into_iter()
        .filter(|(_, (values, aborted))| !values.is_empty() || *aborted > 0)
        .map(|(key, (values, aborted))| {
            let count = values.len();
            let (mut mean, mut min, mut max) = (f64::NAN, f64::NAN, f64::NAN);
            if count > 0 {
                mean = values.iter().sum::<f64>() / count as f64;
                min = values.iter().copied().fold(f64::INFINITY, f64::min);
                max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            }
            AggregateMetrics {
                key,
                metric,
                mean,
                min,
                max,
                count,
                aborted,
            }
        })
        .collect()
}
