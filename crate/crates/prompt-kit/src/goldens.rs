//! The full rendered template grid checked against golden files.
//!
//! Shared by the `validate-prompts` command and the golden test suite: both
//! render every entry and byte-compare against the files under this crate's
//! `goldens/` directory.

use crate::render::{
    render_emotion_clause, render_emotion_probe, render_memory_update, render_outer_emotion_probe,
    render_round_question, render_system_prompt, MemoryUpdate, SystemPromptSpec,
};
use crate::{EmotionKind, EmotionPromptStrategy, PromptError, PromptOrdering, RelationKind};
use game_core::{BargainRole, GameKind, LabelMap, MoveLabels};
use std::path::{Path, PathBuf};

/// Relative path of a golden file plus the text the renderer produces for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenEntry {
    pub name: String,
    pub rendered: String,
}

/// Where the committed golden files live.
pub fn default_golden_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/goldens"))
}

/// Render the whole grid: every (emotion, strategy, relation) clause, the
/// four game rule blocks, both round-question variants, the memory and probe
/// blocks, the bargaining summary blocks, and one assembled system prompt
/// per game.
pub fn golden_grid() -> Result<Vec<GoldenEntry>, PromptError> {
    let mut entries = Vec::new();
    let mut push = |name: String, rendered: String| {
        entries.push(GoldenEntry { name, rendered });
    };

    for emotion in EmotionKind::CLAUSED {
        for strategy in EmotionPromptStrategy::ALL {
            for relation in RelationKind::ALL {
                let rendered =
                    render_emotion_clause(emotion, strategy, relation.default_display())?;
                push(
                    format!(
                        "clauses/{}_{}_{}.txt",
                        emotion.key(),
                        strategy.key(),
                        relation.key()
                    ),
                    rendered,
                );
            }
        }
    }

    // Rule blocks and assembled prompts use the run-example configuration:
    // labels J/F, currency "dollars", the co-player displayed as "coplayer",
    // and a 100-dollar bargaining budget.
    let coplayer = "coplayer";
    let currency = "dollars";
    let spec = |game: GameKind, role: Option<BargainRole>| SystemPromptSpec {
        game,
        bargain_role: role,
        emotion: EmotionKind::Neutral,
        emotion_strategy: EmotionPromptStrategy::Simple,
        coplayer,
        ordering: PromptOrdering::Basic,
        labels: LabelMap::new(game, MoveLabels::default()),
        currency,
        total_sum: game.is_bargaining().then_some(100),
    };

    let games: [(GameKind, Option<BargainRole>, &str); 5] = [
        (GameKind::PrisonersDilemma, None, "prisoners_dilemma"),
        (GameKind::BattleOfSexes, None, "battle_of_sexes"),
        (
            GameKind::Dictator,
            Some(BargainRole::DictatorProposer),
            "dictator",
        ),
        (
            GameKind::Ultimatum,
            Some(BargainRole::UltimatumProposer),
            "ultimatum_proposer",
        ),
        (
            GameKind::Ultimatum,
            Some(BargainRole::UltimatumResponder),
            "ultimatum_responder",
        ),
    ];
    for (game, role, stem) in games {
        push(
            format!("systems/{stem}.txt"),
            render_system_prompt(&spec(game, role))?,
        );
        let mut angry = spec(game, role);
        angry.emotion = EmotionKind::Anger;
        angry.emotion_strategy = EmotionPromptStrategy::CoplayerBased;
        push(
            format!("systems/{stem}_anger_coplayer.txt"),
            render_system_prompt(&angry)?,
        );
    }

    // The alternate clause position for the 2x2 games.
    let mut after_rules = spec(GameKind::PrisonersDilemma, None);
    after_rules.emotion = EmotionKind::Anger;
    after_rules.ordering = PromptOrdering::EmotionAfterRules;
    push(
        "systems/prisoners_dilemma_anger_after_rules.txt".to_string(),
        render_system_prompt(&after_rules)?,
    );

    for (game, stem) in [
        (GameKind::PrisonersDilemma, "prisoners_dilemma"),
        (GameKind::BattleOfSexes, "battle_of_sexes"),
    ] {
        let map = LabelMap::new(game, MoveLabels::default());
        push(
            format!("questions/{stem}_round_0.txt"),
            render_round_question(0, &map)?,
        );
        push(
            format!("questions/{stem}_round_1.txt"),
            render_round_question(1, &map)?,
        );
    }

    push(
        "blocks/memory_update.txt".to_string(),
        render_memory_update(&MemoryUpdate {
            round: 2,
            my_label: 'F',
            opponent_label: 'F',
            my_reward: 7,
            opponent_reward: 10,
            currency,
            own_emotion: None,
            demonstrated_emotion: None,
            seen_emotion: None,
        })?,
    );
    push(
        "blocks/memory_update_emotions.txt".to_string(),
        render_memory_update(&MemoryUpdate {
            round: 1,
            my_label: 'J',
            opponent_label: 'F',
            my_reward: 0,
            opponent_reward: 0,
            currency,
            own_emotion: Some("angry"),
            demonstrated_emotion: Some("neutral"),
            seen_emotion: Some("happy"),
        })?,
    );
    push(
        "blocks/emotion_probe.txt".to_string(),
        render_emotion_probe().to_string(),
    );
    push(
        "blocks/outer_emotion_probe.txt".to_string(),
        render_outer_emotion_probe().to_string(),
    );

    Ok(entries)
}

/// A single mismatch between a rendered entry and its golden file.
#[derive(Debug, Clone)]
pub struct GoldenMismatch {
    pub name: String,
    pub reason: String,
}

/// Compare the rendered grid against the golden files under `dir`.
///
/// Also re-checks that no rendered entry carries an unsubstituted
/// placeholder. Returns every mismatch rather than stopping at the first.
pub fn check_goldens(dir: &Path) -> Result<Vec<GoldenMismatch>, PromptError> {
    let mut mismatches = Vec::new();
    for entry in golden_grid()? {
        if entry.rendered.contains('{') {
            mismatches.push(GoldenMismatch {
                name: entry.name.clone(),
                reason: "rendered text contains an unsubstituted placeholder".to_string(),
            });
        }
        let path = dir.join(&entry.name);
        match std::fs::read_to_string(&path) {
            Ok(golden) => {
                let golden = golden.replace("\r\n", "\n");
                let golden = golden.strip_suffix('\n').unwrap_or(&golden);
                if golden != entry.rendered {
                    mismatches.push(GoldenMismatch {
                        name: entry.name,
                        reason: "rendered bytes differ from golden file".to_string(),
                    });
                }
            }
            Err(err) => mismatches.push(GoldenMismatch {
                name: entry.name,
                reason: format!("golden file unreadable: {err}"),
            }),
        }
    }
    Ok(mismatches)
}
