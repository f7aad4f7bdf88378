//! Report emission: `report.md` (strategy x emotion tables plus human
//! baselines), `metrics.csv` (full-precision per-match rows), and
//! `acceptance_by_share.csv` (11 share buckets).

use crate::aggregate::{aggregate, AggregateMetrics, MetricKind};
use crate::metrics::{match_metrics, MatchMetrics};
use crate::MetricsError;
use game_core::{BargainRole, GameKind};
use match_runner::{read_transcript, RunManifest};
use prompt_kit::EmotionKind;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use strategy_agents::StrategyKind;

/// Human-experiment reference constants, shown for side-by-side reading in
/// every report. Display-only: nothing is ever asserted against them.
pub mod baselines {
    /// Mean share given away by human dictators.
    pub const DICTATOR_HUMAN_MEAN_GIVE: &str = "28.35%";
    /// Mean share offered by human ultimatum proposers.
    pub const ULTIMATUM_HUMAN_MEAN_OFFER: &str = "41%";
    /// Offers humans commonly reject.
    pub const ULTIMATUM_REJECTION_REGION: &str = "lower than 20% share";
}

#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub report_md: PathBuf,
    pub metrics_csv: PathBuf,
    pub acceptance_csv: PathBuf,
}

/// Load every transcript in the manifest and flatten it to metrics rows.
pub fn load_metrics(manifest: &RunManifest) -> Result<Vec<MatchMetrics>, MetricsError> {
    let mut rows = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let transcript = read_transcript(&manifest.transcript_path(entry))?;
        rows.push(match_metrics(
            &entry.match_key,
            entry.repetition,
            &transcript,
        )?);
    }
    Ok(rows)
}

/// Emit all three report files into the run directory.
pub fn emit_report(manifest: &RunManifest) -> Result<ReportFiles, MetricsError> {
    let rows = load_metrics(manifest)?;
    let files = ReportFiles {
        report_md: manifest.out_dir.join("report.md"),
        metrics_csv: manifest.out_dir.join("metrics.csv"),
        acceptance_csv: manifest.out_dir.join("acceptance_by_share.csv"),
    };
    std::fs::write(&files.metrics_csv, metrics_csv(&rows))?;
    std::fs::write(&files.acceptance_csv, acceptance_csv(&rows))?;
    std::fs::write(&files.report_md, report_markdown(&rows))?;
    Ok(files)
}

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn opt_num<T: std::fmt::Display>(value: &Option<T>) -> String {
    value.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

/// One full-precision row per match.
pub fn metrics_csv(rows: &[MatchMetrics]) -> String {
    let mut out = String::from(
        "match_key,game,model,emotion,emotion_strategy,relation,repetition,completed,opponent,role,budget,cooperation_rate,percent_of_max,agent_total,max_attainable,offered_share,offer_share,accepted\n",
    );
    for row in rows {
        let role = row
            .role
            .map(|r| {
                match r {
                    BargainRole::DictatorProposer => "dictator_proposer",
                    BargainRole::UltimatumProposer => "ultimatum_proposer",
                    BargainRole::UltimatumResponder => "ultimatum_responder",
                }
                .to_string()
            })
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.match_key,
            row.game,
            csv_field(&row.model),
            row.emotion,
            row.emotion_strategy.key(),
            row.relation.key(),
            row.repetition,
            row.completed,
            row.opponent.map(|o| o.to_string()).unwrap_or_default(),
            role,
            opt_num(&row.budget),
            opt_num(&row.cooperation_rate),
            opt_num(&row.percent_of_max),
            opt_num(&row.agent_total),
            opt_num(&row.max_attainable),
            opt_num(&row.offered_share),
            opt_num(&row.offer_share),
            row.accepted.map(|a| a.to_string()).unwrap_or_default(),
        );
    }
    out
}

/// Acceptance-by-share rows. The canonical 11-point share grid (0..100 in
/// 10s) is always present so the file keeps its shape even before any
/// responder experiment has run.
pub fn acceptance_csv(rows: &[MatchMetrics]) -> String {
    let mut out = String::from(
        "game,model,emotion,emotion_strategy,share_pct,offers,accepted,acceptance_rate\n",
    );
    let groups = aggregate(rows, MetricKind::AcceptanceRate);
    let responder_groups: Vec<&AggregateMetrics> = groups
        .iter()
        .filter(|g| g.key.role == Some(BargainRole::UltimatumResponder))
        .collect();
    if responder_groups.is_empty() {
        for share in (0..=100).step_by(10) {
            let _ = writeln!(out, ",,,,{share},0,0,");
        }
        return out;
    }
    for group in responder_groups {
        let share = group.key.offer_share_pct.unwrap_or_default();
        let accepted = (group.mean * group.count as f64).round() as i64;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.4}",
            group.key.game,
            csv_field(&group.key.model),
            group.key.emotion,
            group.key.emotion_strategy.key(),
            share,
            group.count,
            accepted,
            group.mean,
        );
    }
    out
}

// Column order matches the reference tables: alphabetical with "none" in
// its sorted place (anger, disgust, fear, happiness, none, sadness).
fn emotions_in(groups: &[&AggregateMetrics]) -> Vec<EmotionKind> {
    let set: BTreeSet<&str> = groups.iter().map(|g| g.key.emotion.key()).collect();
    set.into_iter()
        .map(|k| EmotionKind::parse(k).expect("round trip"))
        .collect()
}

fn fmt_cell(value: f64, as_percent: bool) -> String {
    if value.is_nan() {
        "-".to_string()
    } else if as_percent {
        format!("{}", value.round() as i64)
    } else {
        format!("{value:.2}")
    }
}

/// The markdown report: one strategy x emotion table per repeated-game
/// block, share tables for bargaining, and the human baseline table.
pub fn report_markdown(rows: &[MatchMetrics]) -> String {
    let mut out = String::from("# Experiment report\n");

    // Repeated games: percent-of-max and cooperation tables.
    for (metric, title, as_percent) in [
        (
            MetricKind::PercentOfMax,
            "Percentage of maximum possible reward",
            true,
        ),
        (MetricKind::CooperationRate, "Cooperation rate", false),
    ] {
        let groups = aggregate(rows, metric);
        let blocks: BTreeSet<(GameKind, String, String)> = groups
            .iter()
            .filter(|g| g.key.opponent.is_some())
            .map(|g| {
                (
                    g.key.game,
                    g.key.model.clone(),
                    g.key.emotion_strategy.key().to_string(),
                )
            })
            .collect();
        for (game, model, strategy_kind) in blocks {
            let block: Vec<&AggregateMetrics> = groups
                .iter()
                .filter(|g| {
                    g.key.game == game
                        && g.key.model == model
                        && g.key.emotion_strategy.key() == strategy_kind
                        && g.key.opponent.is_some()
                })
                .collect();
            let emotions = emotions_in(&block);
            let _ = writeln!(out, "\n## {title} — {game}, {model}, {strategy_kind}\n");
            let _ = writeln!(
                out,
                "| Strategy | {} |",
                emotions
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(" | ")
            );
            let _ = writeln!(out, "|{}|", vec!["---"; emotions.len() + 1].join("|"));
            for strategy in StrategyKind::ALL {
                let mut cells = Vec::with_capacity(emotions.len());
                for emotion in &emotions {
                    let cell = block
                        .iter()
                        .find(|g| g.key.opponent == Some(strategy) && g.key.emotion == *emotion)
                        .map(|g| fmt_cell(g.mean, as_percent))
                        .unwrap_or_else(|| "-".to_string());
                    cells.push(cell);
                }
                if cells.iter().any(|c| c != "-") {
                    let _ = writeln!(out, "| {strategy} | {} |", cells.join(" | "));
                }
            }
        }
    }

    // Bargaining: offered share per emotion with the human reference row.
    let share_groups = aggregate(rows, MetricKind::OfferedShare);
    let share_blocks: BTreeSet<(GameKind, String, String)> = share_groups
        .iter()
        .filter(|g| g.count > 0)
        .map(|g| {
            (
                g.key.game,
                g.key.model.clone(),
                g.key.emotion_strategy.key().to_string(),
            )
        })
        .collect();
    for (game, model, strategy_kind) in share_blocks {
        let _ = writeln!(
            out,
            "\n## Offered share — {game}, {model}, {strategy_kind}\n"
        );
        let _ = writeln!(
            out,
            "| Emotion | Relation | Budget | Mean offered share % | Min | Max | Matches |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|---|");
        for group in share_groups.iter().filter(|g| {
            g.key.game == game
                && g.key.model == model
                && g.key.emotion_strategy.key() == strategy_kind
                && g.count > 0
        }) {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.1} | {:.1} | {:.1} | {} |",
                group.key.emotion,
                group.key.relation.key(),
                group.key.budget.unwrap_or_default(),
                group.mean,
                group.min,
                group.max,
                group.count
            );
        }
        let human = match game {
            GameKind::Dictator => baselines::DICTATOR_HUMAN_MEAN_GIVE,
            _ => baselines::ULTIMATUM_HUMAN_MEAN_OFFER,
        };
        let _ = writeln!(out, "| human baseline | | | {human} | | | |");
    }

    // Responder acceptance rates by share bucket.
    let acceptance_groups = aggregate(rows, MetricKind::AcceptanceRate);
    let responder_blocks: BTreeSet<(String, String)> = acceptance_groups
        .iter()
        .filter(|g| g.key.role == Some(BargainRole::UltimatumResponder))
        .map(|g| {
            (
                g.key.model.clone(),
                g.key.emotion_strategy.key().to_string(),
            )
        })
        .collect();
    for (model, strategy_kind) in responder_blocks {
        let _ = writeln!(
            out,
            "\n## Acceptance rate by offered share — ultimatum, {model}, {strategy_kind}\n"
        );
        let _ = writeln!(out, "| Emotion | Share % | Acceptance rate | Offers |");
        let _ = writeln!(out, "|---|---|---|---|");
        for group in acceptance_groups.iter().filter(|g| {
            g.key.role == Some(BargainRole::UltimatumResponder)
                && g.key.model == model
                && g.key.emotion_strategy.key() == strategy_kind
        }) {
            let _ = writeln!(
                out,
                "| {} | {} | {:.2} | {} |",
                group.key.emotion,
                group.key.offer_share_pct.unwrap_or_default(),
                group.mean,
                group.count
            );
        }
        let _ = writeln!(
            out,
            "\nHuman reference: responders commonly reject offers {}.",
            baselines::ULTIMATUM_REJECTION_REGION
        );
    }

    // Always-present reference table for side-by-side reading.
    out.push_str("\n## Human reference baselines\n\n");
    out.push_str("| Game | Reference |\n|---|---|\n");
    let _ = writeln!(
        out,
        "| dictator | mean give {} |",
        baselines::DICTATOR_HUMAN_MEAN_GIVE
    );
    let _ = writeln!(
        out,
        "| ultimatum (proposer) | mean offer {} |",
        baselines::ULTIMATUM_HUMAN_MEAN_OFFER
    );
    let _ = writeln!(
        out,
        "| ultimatum (responder) | rejections {} |",
        baselines::ULTIMATUM_REJECTION_REGION
    );

    // Flag empty groups rather than failing on them.
    let aborted: usize = rows.iter().filter(|r| !r.completed).count();
    if aborted > 0 {
        let _ = writeln!(
            out,
            "\n{aborted} aborted match(es) excluded from all statistics."
        );
    }
    out
}
