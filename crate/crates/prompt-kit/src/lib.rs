//! Prompt assembly and reply parsing for the experiment harness.
//!
//! The template catalog ships as plain-text resource files, one per prompt
//! block, embedded at compile time and normalized to `\n` line endings.
//! Rendering is a pure function of its inputs and byte-stable across runs
//! and platforms; parsing is deliberately tolerant of the reply shapes the
//! chat models actually produce ("Option F", "Split: 450, 550", ...).

mod catalog;
mod parse;
mod render;

pub mod goldens;

pub use catalog::{template, template_names};
pub use parse::{
    parse_accept, parse_emotion, parse_free_emotion, parse_move, parse_probe_emotion, parse_split,
    EmotionWord,
};
pub use render::{
    render_bargain_scratchpad_prompt, render_emotion_clause, render_emotion_probe,
    render_memory_update, render_offer_message, render_outer_emotion_probe, render_round_question,
    render_scratchpad_prompt, render_system_prompt, MemoryUpdate, SystemPromptSpec,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("no template named '{0}' in the catalog")]
    MissingTemplate(String),
    #[error("unbound placeholder '{{{0}}}' after substitution")]
    UnboundPlaceholder(String),
    #[error("reply names neither move label: {0:?}")]
    UnparseableMove(String),
    #[error("reply does not contain two comma-separated integers: {0:?}")]
    UnparseableSplit(String),
    #[error("split {keep},{give} does not partition {total}")]
    InvalidSplit { keep: i64, give: i64, total: i64 },
    #[error("reply does not contain exactly one of ACCEPT/REJECT: {0:?}")]
    UnparseableDecision(String),
}

/// The emotion injected into the system prompt.
///
/// The experiment grid uses the five Ekman emotions plus `Neutral` (no
/// clause at all). `Surprise` is carried along because the catalog ships
/// its templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmotionKind {
    Anger,
    Disgust,
    Fear,
    Happiness,
    Sadness,
    Surprise,
    Neutral,
}

impl EmotionKind {
    /// Every emotion with a clause template (Neutral renders empty).
    pub const CLAUSED: [EmotionKind; 6] = [
        EmotionKind::Anger,
        EmotionKind::Disgust,
        EmotionKind::Fear,
        EmotionKind::Happiness,
        EmotionKind::Sadness,
        EmotionKind::Surprise,
    ];

    /// The default experiment grid: five injected emotions plus none.
    pub const GRID: [EmotionKind; 6] = [
        EmotionKind::Anger,
        EmotionKind::Disgust,
        EmotionKind::Fear,
        EmotionKind::Happiness,
        EmotionKind::Sadness,
        EmotionKind::Neutral,
    ];

    pub fn key(self) -> &'static str {
        match self {
            EmotionKind::Anger => "anger",
            EmotionKind::Disgust => "disgust",
            EmotionKind::Fear => "fear",
            EmotionKind::Happiness => "happiness",
            EmotionKind::Sadness => "sadness",
            EmotionKind::Surprise => "surprise",
            EmotionKind::Neutral => "none",
        }
    }

    pub fn parse(name: &str) -> Option<EmotionKind> {
        match name.trim().to_ascii_lowercase().as_str() {
            "anger" | "angry" => Some(EmotionKind::Anger),
            "disgust" | "disgusted" => Some(EmotionKind::Disgust),
            "fear" => Some(EmotionKind::Fear),
            "happiness" | "happy" => Some(EmotionKind::Happiness),
            "sadness" | "sad" => Some(EmotionKind::Sadness),
            "surprise" | "surprised" => Some(EmotionKind::Surprise),
            "none" | "neutral" => Some(EmotionKind::Neutral),
            _ => None,
        }
    }
}

impl std::fmt::Display for EmotionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// How the emotion clause contextualizes the emotion's source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmotionPromptStrategy {
    /// Injected with no context at all.
    Simple,
    /// Caused by the co-player.
    CoplayerBased,
    /// Caused by an event unrelated to the co-player.
    ExternalBased,
}

impl EmotionPromptStrategy {
    pub const ALL: [EmotionPromptStrategy; 3] = [
        EmotionPromptStrategy::Simple,
        EmotionPromptStrategy::CoplayerBased,
        EmotionPromptStrategy::ExternalBased,
    ];

    pub fn key(self) -> &'static str {
        match self {
            EmotionPromptStrategy::Simple => "simple",
            EmotionPromptStrategy::CoplayerBased => "coplayer",
            EmotionPromptStrategy::ExternalBased => "external",
        }
    }

    pub fn parse(name: &str) -> Option<EmotionPromptStrategy> {
        match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "simple" => Some(EmotionPromptStrategy::Simple),
            "coplayer" | "coplayer_based" | "situation_coplayer" => {
                Some(EmotionPromptStrategy::CoplayerBased)
            }
            "external" | "external_based" | "situation_external" => {
                Some(EmotionPromptStrategy::ExternalBased)
            }
            _ => None,
        }
    }
}

/// Connotation of the opposing player plus the exact string substituted for
/// `{coplayer}` everywhere it appears in a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Colleague,
    AnotherPerson,
    Opponent,
}

impl RelationKind {
    pub const ALL: [RelationKind; 3] = [
        RelationKind::Colleague,
        RelationKind::AnotherPerson,
        RelationKind::Opponent,
    ];

    pub fn default_display(self) -> &'static str {
        match self {
            RelationKind::Colleague => "colleague",
            RelationKind::AnotherPerson => "another person",
            RelationKind::Opponent => "opponent",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            RelationKind::Colleague => "colleague",
            RelationKind::AnotherPerson => "another_person",
            RelationKind::Opponent => "opponent",
        }
    }

    pub fn parse(name: &str) -> Option<RelationKind> {
        match name
            .trim()
            .to_ascii_lowercase()
            .replace([' ', '-'], "_")
            .as_str()
        {
            "colleague" => Some(RelationKind::Colleague),
            "another_person" | "person" => Some(RelationKind::AnotherPerson),
            "opponent" => Some(RelationKind::Opponent),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoplayerRelation {
    pub relation: RelationKind,
    /// Non-empty; identical everywhere `{coplayer}` appears in a match.
    pub display: String,
}

impl CoplayerRelation {
    pub fn new(relation: RelationKind) -> Self {
        CoplayerRelation {
            relation,
            display: relation.default_display().to_string(),
        }
    }

    pub fn with_display(relation: RelationKind, display: impl Into<String>) -> Self {
        CoplayerRelation {
            relation,
            display: display.into(),
        }
    }
}

/// Where the emotion clause sits in the assembled system prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptOrdering {
    /// Environment, emotion clause, rules, final instruction.
    #[default]
    Basic,
    /// Environment, rules, emotion clause, final instruction.
    EmotionAfterRules,
}

/// Switches controlling the per-round pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineFlags {
    /// Ask the internal emotion probe after each round; the answer is also
    /// written into memory ("You felt ... at the end of the last round.").
    pub need_check_emotions: bool,
    /// Ask the outer probe (what face the agent shows the opponent).
    pub need_demonstrate_emotions: bool,
    /// Write the opponent's displayed emotion into memory.
    pub memorize_seen_emotions: bool,
    /// Write the agent's own displayed emotion into memory.
    pub memorize_demonstrated_emotions: bool,
    /// Elicit a free-form reasoning turn before each answer turn.
    pub do_scratchpad_step: bool,
}

/// The ordered text artifacts fed to the chat gateway over one match.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub memory: Vec<String>,
}

/// Option list of the internal emotion probe, in template order.
pub const PROBE_EMOTIONS: [&str; 5] = ["angry", "sad", "happy", "guilty", "neutral"];
