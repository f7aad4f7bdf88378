//! Byte-stable rendering of prompt blocks and assembled system prompts.

use crate::catalog::template;
use crate::{EmotionKind, EmotionPromptStrategy, PromptError, PromptOrdering};
use game_core::{BargainRole, GameKind, LabelMap};
use regex::Regex;
use std::sync::LazyLock;

static PLACEHOLDER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{([A-Za-z_][A-Za-z_0-9]*)\}").expect("valid regex"));

/// Substitute every `{name}` in `text` from `vars`. Any placeholder without
/// a binding is an error; substituted values are inserted verbatim.
fn fill(text: &str, vars: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for caps in PLACEHOLDER.captures_iter(text) {
        let whole = caps.get(0).expect("match");
        let name = &caps[1];
        let value = vars
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| PromptError::UnboundPlaceholder(name.to_string()))?;
        out.push_str(&text[last..whole.start()]);
        out.push_str(value);
        last = whole.end();
    }
    out.push_str(&text[last..]);
    Ok(out)
}

/// Render the emotion clause for one (emotion, strategy) pair with
/// `{coplayer}` substituted. `Neutral` renders the empty clause.
pub fn render_emotion_clause(
    emotion: EmotionKind,
    strategy: EmotionPromptStrategy,
    coplayer: &str,
) -> Result<String, PromptError> {
    if emotion == EmotionKind::Neutral {
        return Ok(String::new());
    }
    let name = format!("emotions/{}_{}", emotion.key(), strategy.key());
    fill(template(&name)?, &[("coplayer", coplayer)])
}

/// Everything needed to assemble one match's system prompt.
#[derive(Debug, Clone)]
pub struct SystemPromptSpec<'a> {
    pub game: GameKind,
    /// Required for bargaining games; ignored for the 2x2 games.
    pub bargain_role: Option<BargainRole>,
    pub emotion: EmotionKind,
    pub emotion_strategy: EmotionPromptStrategy,
    /// The string substituted for `{coplayer}`.
    pub coplayer: &'a str,
    pub ordering: PromptOrdering,
    pub labels: LabelMap,
    pub currency: &'a str,
    /// Required for bargaining games.
    pub total_sum: Option<i64>,
}

impl<'a> SystemPromptSpec<'a> {
    fn emotion_clause(&self) -> Result<String, PromptError> {
        render_emotion_clause(self.emotion, self.emotion_strategy, self.coplayer)
    }
}

/// Assemble the full system prompt for one match.
///
/// For the 2x2 games the blocks follow the configured ordering: with `Basic`
/// the emotion clause sits inside the environment block, with
/// `EmotionAfterRules` it moves between the rules and the final instruction.
/// Bargaining games carry their emotion inside the rules block (the rules
/// templates have a dedicated emotion variant) and end with the summary-step
/// text instead of the one-letter instruction.
pub fn render_system_prompt(spec: &SystemPromptSpec<'_>) -> Result<String, PromptError> {
    match spec.game {
        GameKind::PrisonersDilemma | GameKind::BattleOfSexes => render_repeated_system(spec),
        GameKind::Dictator | GameKind::Ultimatum => render_bargain_system(spec),
    }
}

fn render_repeated_system(spec: &SystemPromptSpec<'_>) -> Result<String, PromptError> {
    let move1 = spec.labels.move1().to_string();
    let move2 = spec.labels.move2().to_string();
    let rules_name = match spec.game {
        GameKind::PrisonersDilemma => "rules_prisoners_dilemma",
        _ => "rules_battle_of_sexes",
    };
    let rules = fill(
        template(rules_name)?,
        &[
            ("coplayer", spec.coplayer),
            ("currency", spec.currency),
            ("move1", &move1),
            ("move2", &move2),
        ],
    )?;
    let final_instruction = fill(
        template("final_instruction")?,
        &[
            ("coplayer", spec.coplayer),
            ("currency", spec.currency),
            ("move1", &move1),
            ("move2", &move2),
        ],
    )?;
    let clause = spec.emotion_clause()?;

    let (environment, tail_clause) = match (spec.ordering, clause.is_empty()) {
        // Basic ordering embeds the clause in the environment block.
        (PromptOrdering::Basic, false) => (
            fill(
                template("environment_emotion_affect")?,
                &[("coplayer", spec.coplayer), ("emotion", &clause)],
            )?,
            None,
        ),
        // With the clause after the rules (or no clause at all) the plain
        // environment block is used.
        (_, true) => (
            fill(
                template("environment_plain")?,
                &[("coplayer", spec.coplayer)],
            )?,
            None,
        ),
        (PromptOrdering::EmotionAfterRules, false) => (
            fill(
                template("environment_plain")?,
                &[("coplayer", spec.coplayer)],
            )?,
            Some(clause),
        ),
    };

    let mut parts = vec![environment, rules];
    if let Some(clause) = tail_clause {
        parts.push(clause);
    }
    parts.push(final_instruction);
    Ok(parts.join("\n"))
}

fn render_bargain_system(spec: &SystemPromptSpec<'_>) -> Result<String, PromptError> {
    let role = match (spec.game, spec.bargain_role) {
        (GameKind::Dictator, _) => BargainRole::DictatorProposer,
        (_, Some(role)) => role,
        (_, None) => return Err(PromptError::MissingTemplate("bargain role".to_string())),
    };
    let total = spec
        .total_sum
        .ok_or_else(|| PromptError::UnboundPlaceholder("total_sum".to_string()))?
        .to_string();
    let clause = spec.emotion_clause()?;

    let (rules_name, rules_emotion_name, summary_name) = match role {
        BargainRole::DictatorProposer => (
            "rules_dictator",
            "rules_dictator_emotion",
            "summary_dictator",
        ),
        BargainRole::UltimatumProposer => (
            "rules_ultimatum_proposer",
            "rules_ultimatum_proposer_emotion",
            "summary_ultimatum_proposer",
        ),
        BargainRole::UltimatumResponder => (
            "rules_ultimatum_responder",
            "rules_ultimatum_responder_emotion",
            "summary_ultimatum_responder",
        ),
    };

    let vars: &[(&str, &str)] = &[
        ("coplayer", spec.coplayer),
        ("currency", spec.currency),
        ("total_sum", &total),
        ("emotion", &clause),
    ];
    let environment = fill(
        template("environment_plain")?,
        &[("coplayer", spec.coplayer)],
    )?;
    let rules = if clause.is_empty() {
        fill(template(rules_name)?, vars)?
    } else {
        fill(template(rules_emotion_name)?, vars)?
    };
    let summary = fill(template(summary_name)?, vars)?;
    Ok([environment, rules, summary].join("\n"))
}

/// The per-round move question. Even rounds list `{move1}` first, odd rounds
/// list `{move2}` first.
pub fn render_round_question(round_index: usize, labels: &LabelMap) -> Result<String, PromptError> {
    let name = if round_index.is_multiple_of(2) {
        "round_question_1"
    } else {
        "round_question_2"
    };
    let round = round_index.to_string();
    let move1 = labels.move1().to_string();
    let move2 = labels.move2().to_string();
    fill(
        template(name)?,
        &[("round", &round), ("move1", &move1), ("move2", &move2)],
    )
}

/// One round's memory entry.
#[derive(Debug, Clone, Copy)]
pub struct MemoryUpdate<'a> {
    pub round: usize,
    pub my_label: char,
    pub opponent_label: char,
    pub my_reward: i64,
    pub opponent_reward: i64,
    pub currency: &'a str,
    /// Appended when the internal probe runs: "You felt {emotion} ...".
    pub own_emotion: Option<&'a str>,
    /// Appended when demonstrated emotions are memorized.
    pub demonstrated_emotion: Option<&'a str>,
    /// Appended when seen emotions are memorized.
    pub seen_emotion: Option<&'a str>,
}

/// Render the memory-update entry for one finished round, with the optional
/// emotion sentences appended in own / demonstrated / seen order.
pub fn render_memory_update(update: &MemoryUpdate<'_>) -> Result<String, PromptError> {
    let round = update.round.to_string();
    let my_step = update.my_label.to_string();
    let opponent_step = update.opponent_label.to_string();
    let my_reward = update.my_reward.to_string();
    let opponent_reward = update.opponent_reward.to_string();
    let mut text = fill(
        template("memory_update")?,
        &[
            ("round", &round),
            ("my_step", &my_step),
            ("opponent_step", &opponent_step),
            ("my_reward", &my_reward),
            ("opponent_reward", &opponent_reward),
            ("currency", update.currency),
        ],
    )?;
    if let Some(word) = update.own_emotion {
        text.push(' ');
        text.push_str(&fill(template("emotion_update")?, &[("emotion", word)])?);
    }
    if let Some(word) = update.demonstrated_emotion {
        text.push(' ');
        text.push_str(&fill(
            template("outer_emotion_update")?,
            &[("emotion", word)],
        )?);
    }
    if let Some(word) = update.seen_emotion {
        text.push(' ');
        text.push_str(&fill(
            template("opponent_emotion_update")?,
            &[("emotion", word)],
        )?);
    }
    Ok(text)
}

/// The internal emotion probe, verbatim.
pub fn render_emotion_probe() -> &'static str {
    template("emotion_probe").expect("catalog ships the probe")
}

/// The outer (displayed-face) probe, verbatim.
pub fn render_outer_emotion_probe() -> &'static str {
    template("outer_emotion_probe").expect("catalog ships the probe")
}

/// The free-form reasoning question sent before the answer turn when the
/// scratchpad step is enabled.
pub fn render_scratchpad_prompt(round_index: usize) -> Result<String, PromptError> {
    let round = round_index.to_string();
    fill(template("scratchpad")?, &[("round", &round)])
}

/// The reasoning question used before bargaining answers when the
/// scratchpad step is enabled.
pub fn render_bargain_scratchpad_prompt() -> &'static str {
    template("scratchpad_bargain").expect("catalog ships the block")
}

/// The message presenting a proposed split to the Ultimatum responder.
pub fn render_offer_message(
    keep: i64,
    give: i64,
    currency: &str,
    coplayer: &str,
) -> Result<String, PromptError> {
    let keep = keep.to_string();
    let give = give.to_string();
    fill(
        template("offer_message")?,
        &[
            ("keep", &keep),
            ("give", &give),
            ("currency", currency),
            ("coplayer", coplayer),
        ],
    )
}
