//! Match and experiment configuration: the TOML schema, defaults, and
//! deterministic grid expansion.

use crate::RunnerError;
use game_core::{BargainRole, GameKind};
use prompt_kit::{EmotionKind, EmotionPromptStrategy, PipelineFlags, PromptOrdering, RelationKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use strategy_agents::{responder_offer_schedule, StrategyKind};

/// The scripted side of one match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpponentSpec {
    /// Scripted co-player automaton (repeated games).
    Strategy { strategy: StrategyKind },
    /// Scripted decision rule judging the model's proposal (Ultimatum
    /// proposer experiments): accept iff give/total >= threshold.
    ScriptedResponder { accept_threshold: f64 },
    /// One predetermined offer presented to the model (Ultimatum responder
    /// experiments; each offer is its own one-shot match).
    Offer { keep: i64, give: i64 },
    /// No co-player decision at all (Dictator).
    None,
}

/// Reproducible inputs of one match. This is the transcript header: the
/// repetition index deliberately lives outside (in [`MatchConfig`] and the
/// manifest) so repeated runs of a deterministic backend produce
/// byte-identical transcripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    pub game: GameKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bargain_role: Option<BargainRole>,
    pub opponent: OpponentSpec,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rounds: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub budget: Option<i64>,
    pub emotion: EmotionKind,
    pub emotion_strategy: EmotionPromptStrategy,
    pub relation: RelationKind,
    pub coplayer_display: String,
    pub flags: PipelineFlags,
    pub labels: (char, char),
    pub currency: String,
    pub ordering: PromptOrdering,
    pub model_id: String,
    pub temperature: f64,
    /// Emotion word a scripted opponent "shows" when seen emotions are
    /// memorized (scripted agents have no model to probe).
    pub opponent_shown_emotion: String,
    /// Re-asks after an unparseable reply before aborting the match.
    pub max_reasks: u32,
}

impl MatchParams {
    pub fn validate(&self) -> Result<(), RunnerError> {
        let bad = |msg: &str| Err(RunnerError::Config(msg.to_string()));
        match self.game {
            GameKind::PrisonersDilemma | GameKind::BattleOfSexes => {
                if self.rounds.is_none() {
                    return bad("repeated games need rounds");
                }
                if !matches!(self.opponent, OpponentSpec::Strategy { .. }) {
                    return bad("repeated games need a scripted strategy opponent");
                }
            }
            GameKind::Dictator => {
                if self.budget.is_none() {
                    return bad("bargaining games need a budget");
                }
                if self.rounds.is_some() {
                    return bad("one-shot games take no rounds");
                }
            }
            GameKind::Ultimatum => {
                if self.budget.is_none() {
                    return bad("bargaining games need a budget");
                }
                if self.rounds.is_some() {
                    return bad("one-shot games take no rounds");
                }
                match (self.bargain_role, &self.opponent) {
                    (
                        Some(BargainRole::UltimatumProposer),
                        OpponentSpec::ScriptedResponder { .. },
                    ) => {}
                    (Some(BargainRole::UltimatumResponder), OpponentSpec::Offer { .. }) => {}
                    _ => return bad("ultimatum needs a role with its matching opponent spec"),
                }
            }
        }
        if self.labels.0 == self.labels.1 {
            return bad("move labels must be distinct");
        }
        if self.coplayer_display.is_empty() {
            return bad("coplayer display string must be non-empty");
        }
        if self.flags.memorize_seen_emotions && self.opponent_shown_emotion.is_empty() {
            return bad("memorize_seen_emotions needs an opponent emotion word");
        }
        Ok(())
    }
}

/// One schedulable unit: match parameters plus the repetition index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub params: MatchParams,
    pub repetition: u32,
}

impl MatchConfig {
    /// Stable identifier: SHA-256 over the canonical parameter JSON and the
    /// repetition index, truncated to 16 hex chars. Used as the transcript
    /// file stem, the manifest key, and the call-log match key.
    pub fn match_key(&self) -> String {
        let params = serde_json::to_string(&self.params).expect("params serialize");
        let mut hasher = Sha256::new();
        hasher.update(params.as_bytes());
        hasher.update(b":");
        hasher.update(self.repetition.to_le_bytes());
        hex::encode(hasher.finalize())[..16].to_string()
    }
}

fn default_repetitions() -> u32 {
    5
}

fn default_rounds() -> u32 {
    10
}

fn default_labels() -> Vec<char> {
    vec!['J', 'F']
}

fn default_currency() -> String {
    "dollars".to_string()
}

fn default_coplayer_display() -> String {
    "coplayer".to_string()
}

fn default_shown_emotion() -> String {
    "happy".to_string()
}

fn default_accept_threshold() -> f64 {
    0.2
}

fn default_max_reasks() -> u32 {
    3
}

fn default_models() -> Vec<String> {
    vec!["gpt-3.5-turbo-0125".to_string()]
}

fn default_budgets() -> Vec<i64> {
    vec![100]
}

fn default_one(v: &'static str) -> Vec<String> {
    vec![v.to_string()]
}

/// `[experiment]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub repetitions: u32,
    pub out_dir: Option<String>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            repetitions: default_repetitions(),
            out_dir: None,
        }
    }
}

/// `[grid]` section: every listed dimension is swept in order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub games: Vec<String>,
    /// Scripted strategies for the repeated games.
    pub opponents: Vec<String>,
    pub emotions: Vec<String>,
    pub emotion_strategies: Vec<String>,
    pub relations: Vec<String>,
    pub models: Vec<String>,
    /// Bargaining budgets.
    pub budgets: Vec<i64>,
    /// Ultimatum roles: proposer and/or responder.
    pub roles: Vec<String>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            games: default_one("prisoners_dilemma"),
            opponents: StrategyKind::ALL.iter().map(|s| s.to_string()).collect(),
            emotions: default_one("none"),
            emotion_strategies: default_one("simple"),
            relations: default_one("another_person"),
            models: default_models(),
            budgets: default_budgets(),
            roles: default_one("proposer"),
        }
    }
}

/// `[match]` section: per-match knobs shared across the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchSection {
    pub rounds: u32,
    pub labels: Vec<char>,
    pub currency: String,
    pub ordering: PromptOrdering,
    /// Overrides the relation's default display string when set.
    pub coplayer_display: Option<String>,
    pub opponent_shown_emotion: String,
    /// Scripted responder rule for Ultimatum proposer experiments.
    pub proposer_accept_threshold: f64,
    pub max_reasks: u32,
    pub temperature: f64,
}

impl Default for MatchSection {
    fn default() -> Self {
        MatchSection {
            rounds: default_rounds(),
            labels: default_labels(),
            currency: default_currency(),
            ordering: PromptOrdering::Basic,
            coplayer_display: Some(default_coplayer_display()),
            opponent_shown_emotion: default_shown_emotion(),
            proposer_accept_threshold: default_accept_threshold(),
            max_reasks: default_max_reasks(),
            temperature: 0.0,
        }
    }
}

/// `[gateway]` section: live-backend endpoint. The credential always comes
/// from the environment, never from config or flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatewaySection {
    pub endpoint: Option<String>,
}

/// The whole experiment file: cartesian grid by section.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub grid: GridSection,
    #[serde(rename = "match")]
    pub match_section: MatchSection,
    pub flags: PipelineFlags,
    pub gateway: GatewaySection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunnerError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))?;
        Ok(config)
    }

    /// Apply `key=value` overrides onto the TOML tree before
    /// deserialization. Each override is validated one at a time against the
    /// schema (`deny_unknown_fields`), so an override naming an unknown
    /// config field is reported as such, not as a generic parse error.
    pub fn from_toml_with_overrides(
        text: &str,
        overrides: &[(String, String)],
    ) -> Result<Self, RunnerError> {
        let mut tree: toml::Value =
            toml::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))?;
        let render = |tree: &toml::Value| {
            toml::to_string(tree).map_err(|e| RunnerError::Config(e.to_string()))
        };
        Self::from_toml(&render(&tree)?)?;
        for (key, value) in overrides {
            apply_override(&mut tree, key, value)?;
            match Self::from_toml(&render(&tree)?) {
                Ok(_) => {}
                Err(RunnerError::Config(msg)) if msg.contains("unknown field") => {
                    return Err(RunnerError::UnknownOverride(key.clone()));
                }
                Err(err) => return Err(err),
            }
        }
        Self::from_toml(&render(&tree)?)
    }

    /// Expand the grid into the ordered match list; repetitions innermost.
    pub fn expand_grid(&self) -> Result<Vec<MatchConfig>, RunnerError> {
        let mut out = Vec::new();
        let bad = |msg: String| RunnerError::Config(msg);

        let games: Vec<GameKind> = self
            .grid
            .games
            .iter()
            .map(|name| parse_game(name).ok_or_else(|| bad(format!("unknown game '{name}'"))))
            .collect::<Result<_, _>>()?;
        let emotions: Vec<EmotionKind> = self
            .grid
            .emotions
            .iter()
            .map(|name| {
                EmotionKind::parse(name).ok_or_else(|| bad(format!("unknown emotion '{name}'")))
            })
            .collect::<Result<_, _>>()?;
        let strategies: Vec<EmotionPromptStrategy> = self
            .grid
            .emotion_strategies
            .iter()
            .map(|name| {
                EmotionPromptStrategy::parse(name)
                    .ok_or_else(|| bad(format!("unknown emotion strategy '{name}'")))
            })
            .collect::<Result<_, _>>()?;
        let relations: Vec<RelationKind> = self
            .grid
            .relations
            .iter()
            .map(|name| {
                RelationKind::parse(name).ok_or_else(|| bad(format!("unknown relation '{name}'")))
            })
            .collect::<Result<_, _>>()?;
        let opponents: Vec<StrategyKind> = self
            .grid
            .opponents
            .iter()
            .map(|name| {
                StrategyKind::parse(name).ok_or_else(|| bad(format!("unknown strategy '{name}'")))
            })
            .collect::<Result<_, _>>()?;

        let m = &self.match_section;
        if m.labels.len() != 2 {
            return Err(bad(
                "match.labels must list exactly two characters".to_string()
            ));
        }
        let labels = (m.labels[0], m.labels[1]);

        let base = |game: GameKind,
                    model: &str,
                    emotion: EmotionKind,
                    strategy: EmotionPromptStrategy,
                    relation: RelationKind| MatchParams {
            game,
            bargain_role: None,
            opponent: OpponentSpec::None,
            rounds: None,
            budget: None,
            emotion,
            emotion_strategy: strategy,
            relation,
            coplayer_display: m
                .coplayer_display
                .clone()
                .unwrap_or_else(|| relation.default_display().to_string()),
            flags: self.flags,
            labels,
            currency: m.currency.clone(),
            ordering: m.ordering,
            model_id: model.to_string(),
            temperature: m.temperature,
            opponent_shown_emotion: m.opponent_shown_emotion.clone(),
            max_reasks: m.max_reasks,
        };

        for game in &games {
            for model in &self.grid.models {
                for emotion in &emotions {
                    for strategy in &strategies {
                        for relation in &relations {
                            let seed = base(*game, model, *emotion, *strategy, *relation);
                            let mut variants: Vec<MatchParams> = Vec::new();
                            match game {
                                GameKind::PrisonersDilemma | GameKind::BattleOfSexes => {
                                    for opponent in &opponents {
                                        let mut p = seed.clone();
                                        p.rounds = Some(m.rounds);
                                        p.opponent = OpponentSpec::Strategy {
                                            strategy: *opponent,
                                        };
                                        variants.push(p);
                                    }
                                }
                                GameKind::Dictator => {
                                    for budget in &self.grid.budgets {
                                        let mut p = seed.clone();
                                        p.bargain_role = Some(BargainRole::DictatorProposer);
                                        p.budget = Some(*budget);
                                        variants.push(p);
                                    }
                                }
                                GameKind::Ultimatum => {
                                    for role in &self.grid.roles {
                                        for budget in &self.grid.budgets {
                                            match role.to_ascii_lowercase().as_str() {
                                                "proposer" => {
                                                    let mut p = seed.clone();
                                                    p.bargain_role =
                                                        Some(BargainRole::UltimatumProposer);
                                                    p.budget = Some(*budget);
                                                    p.opponent = OpponentSpec::ScriptedResponder {
                                                        accept_threshold: m
                                                            .proposer_accept_threshold,
                                                    };
                                                    variants.push(p);
                                                }
                                                "responder" => {
                                                    let offers = responder_offer_schedule(*budget)
                                                        .map_err(|e| bad(e.to_string()))?;
                                                    for (keep, give) in offers {
                                                        let mut p = seed.clone();
                                                        p.bargain_role =
                                                            Some(BargainRole::UltimatumResponder);
                                                        p.budget = Some(*budget);
                                                        p.opponent =
                                                            OpponentSpec::Offer { keep, give };
                                                        variants.push(p);
                                                    }
                                                }
                                                other => {
                                                    return Err(bad(format!(
                                                        "unknown ultimatum role '{other}'"
                                                    )))
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                            for params in variants {
                                params.validate()?;
                                for repetition in 0..self.experiment.repetitions.max(1) {
                                    out.push(MatchConfig {
                                        params: params.clone(),
                                        repetition,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn parse_game(name: &str) -> Option<GameKind> {
    match name
        .trim()
        .to_ascii_lowercase()
        .replace([' ', '-'], "_")
        .as_str()
    {
        "prisoners_dilemma" | "pd" => Some(GameKind::PrisonersDilemma),
        "battle_of_sexes" | "bots" => Some(GameKind::BattleOfSexes),
        "dictator" => Some(GameKind::Dictator),
        "ultimatum" => Some(GameKind::Ultimatum),
        _ => None,
    }
}

/// Set `tree[key] = value` for a dotted path like `match.rounds` or
/// `grid.emotions`. Scalars are parsed as bool/int/float before falling back
/// to strings; list-valued fields take comma-separated values.
fn apply_override(tree: &mut toml::Value, key: &str, value: &str) -> Result<(), RunnerError> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(RunnerError::UnknownOverride(key.to_string()));
    }
    for part in &parts[..parts.len() - 1] {
        node = node
            .as_table_mut()
            .ok_or_else(|| RunnerError::UnknownOverride(key.to_string()))?
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let leaf = parts.last().expect("nonempty path");
    let table = node
        .as_table_mut()
        .ok_or_else(|| RunnerError::UnknownOverride(key.to_string()))?;
    let parsed = parse_override_value(table.get(*leaf), value);
    table.insert(leaf.to_string(), parsed);
    Ok(())
}

fn parse_scalar(value: &str) -> toml::Value {
    if let Ok(b) = value.parse::<bool>() {
        toml::Value::Boolean(b)
    } else if let Ok(i) = value.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = value.parse::<f64>() {
        toml::Value::Float(f)
    } else {
        toml::Value::String(value.to_string())
    }
}

fn parse_override_value(existing: Option<&toml::Value>, value: &str) -> toml::Value {
    let treat_as_list = matches!(existing, Some(toml::Value::Array(_))) || value.contains(',');
    if treat_as_list {
        toml::Value::Array(value.split(',').map(|v| parse_scalar(v.trim())).collect())
    } else {
        parse_scalar(value)
    }
}
