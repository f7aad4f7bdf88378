//! Deterministic scripted backend for end-to-end tests and dry runs.
//!
//! The mock classifies each request by the turn kind it represents (move
//! answer, split answer, accept answer, emotion probe, outer probe,
//! scratchpad) from anchor phrases in the prompt text, and extracts what it
//! needs — move labels, the round number, the offered split — from the
//! request itself, so a policy like "always defect" works for any label pair
//! and either 2x2 game without extra plumbing.

use crate::{ChatSession, Completion, CompletionRequest, Gateway, GatewayError, Role};
use regex::Regex;
use std::sync::{Arc, LazyLock};

/// What a request is asking the model for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnKind {
    MoveAnswer,
    SplitAnswer,
    AcceptAnswer,
    EmotionProbe,
    OuterProbe,
    Scratchpad,
}

impl TurnKind {
    pub fn name(self) -> &'static str {
        match self {
            TurnKind::MoveAnswer => "move answer",
            TurnKind::SplitAnswer => "split answer",
            TurnKind::AcceptAnswer => "accept answer",
            TurnKind::EmotionProbe => "emotion probe",
            TurnKind::OuterProbe => "outer probe",
            TurnKind::Scratchpad => "scratchpad",
        }
    }
}

/// Classify a request. The last user message is checked first; bargaining
/// requests whose question lives in the system prompt fall back to it.
pub fn classify_turn(request: &CompletionRequest) -> Option<TurnKind> {
    let last_user = request.messages.iter().rev().find(|m| m.role == Role::User);
    if let Some(kind) = last_user.and_then(|m| classify_text(&m.content)) {
        return Some(kind);
    }
    request
        .messages
        .iter()
        .find(|m| m.role == Role::System)
        .and_then(|m| classify_text(&m.content))
}

fn classify_text(text: &str) -> Option<TurnKind> {
    if text.contains("Think step by step about which Option")
        || text.contains("Think step by step about your decision")
    {
        Some(TurnKind::Scratchpad)
    } else if text.contains("Which Option do you choose") {
        Some(TurnKind::MoveAnswer)
    } else if text.contains("Take a deep breath") {
        Some(TurnKind::EmotionProbe)
    } else if text.contains("Imagine your opponent is seeing you") {
        Some(TurnKind::OuterProbe)
    } else if text.contains("Propose a split") {
        Some(TurnKind::SplitAnswer)
    } else if text.contains(r#""ACCEPT" or "REJECT""#) {
        Some(TurnKind::AcceptAnswer)
    } else {
        None
    }
}

static DIAGONAL_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"- If you choose (\S) and your .+? also chooses (\S), you will (?:both )?earn (\d+)",
    )
    .expect("valid regex")
});
static ROUND_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"You are currently playing round (\d+)").expect("valid regex"));
static KEEP_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"keep (\d+)").expect("valid regex"));
static TOTAL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"fixed amount of money - (\d+)").expect("valid regex"));
static GIVE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"give (\d+)").expect("valid regex"));

/// A classified request plus accessors for the context policies care about.
pub struct TurnView<'a> {
    pub kind: TurnKind,
    pub request: &'a CompletionRequest,
}

impl<'a> TurnView<'a> {
    fn system_text(&self) -> &str {
        self.request
            .messages
            .iter()
            .find(|m| m.role == Role::System)
            .map(|m| m.content.as_str())
            .unwrap_or_default()
    }

    fn last_user_text(&self) -> &str {
        self.request
            .messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or_default()
    }

    /// `(cooperative, selfish)` move labels recovered from the rules text:
    /// the diagonal payoffs identify them for both games (3/2 in PD, 7/10 in
    /// BotS, where conceding is the cooperative action).
    pub fn move_labels(&self) -> Option<(char, char)> {
        let mut cooperative = None;
        let mut selfish = None;
        for caps in DIAGONAL_RE.captures_iter(self.system_text()) {
            if caps[1] != caps[2] {
                continue;
            }
            let label = caps[1].chars().next()?;
            match caps[3].parse::<i64>().ok()? {
                3 | 7 => cooperative = Some(label),
                2 | 10 => selfish = Some(label),
                _ => {}
            }
        }
        Some((cooperative?, selfish?))
    }

    /// 0-based round number from the question text.
    pub fn round_index(&self) -> Option<usize> {
        ROUND_RE
            .captures(self.last_user_text())?
            .get(1)?
            .as_str()
            .parse()
            .ok()
    }

    /// The `(keep, give)` amounts of an offer presented to the responder.
    pub fn offer(&self) -> Option<(i64, i64)> {
        let text = self.last_user_text();
        let keep = KEEP_RE.captures(text)?.get(1)?.as_str().parse().ok()?;
        let give = GIVE_RE.captures(text)?.get(1)?.as_str().parse().ok()?;
        Some((keep, give))
    }

    /// The bargaining budget named in the rules text.
    pub fn total_sum(&self) -> Option<i64> {
        TOTAL_RE
            .captures(self.system_text())?
            .get(1)?
            .as_str()
            .parse()
            .ok()
    }
}

/// Deterministic reply policy: (turn kind, match context) -> reply text.
pub trait MockPolicy: Send + Sync {
    fn reply(&self, turn: &TurnView<'_>) -> Result<String, GatewayError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitRule {
    /// Reply with this text verbatim.
    Fixed(String),
    /// Keep half, give half (odd budgets keep the extra unit).
    Fair,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MoveRule {
    AlwaysCooperate,
    AlwaysDefect,
    /// Cooperate on even rounds, defect on odd rounds.
    Alternate,
    /// Play `letters[round]` verbatim.
    Sequence(Vec<char>),
}

/// The standard configurable policy behind `mock:<spec>` backend selectors.
#[derive(Debug, Clone)]
pub struct StandardPolicy {
    pub move_rule: Option<MoveRule>,
    pub split_rule: Option<SplitRule>,
    /// Accept iff give / total >= threshold.
    pub accept_threshold: Option<f64>,
    /// When set, every turn kind gets this reply verbatim.
    pub constant_reply: Option<String>,
    pub probe_reply: String,
    pub outer_reply: String,
    pub scratchpad_reply: String,
}

impl Default for StandardPolicy {
    fn default() -> Self {
        StandardPolicy {
            move_rule: None,
            split_rule: None,
            accept_threshold: None,
            constant_reply: None,
            probe_reply: "neutral".to_string(),
            outer_reply: "neutral".to_string(),
            scratchpad_reply: "I weigh the payoffs and commit to a choice.".to_string(),
        }
    }
}

impl StandardPolicy {
    /// Parse a backend policy spec, e.g. `always-defect`, `alternate`,
    /// `sequence:JFFJ`, `fixed-split:67,33`, `accept-if-share>=0.2`,
    /// `constant:TEXT`.
    pub fn parse(spec: &str) -> Result<StandardPolicy, String> {
        let mut policy = StandardPolicy::default();
        match spec {
            "always-defect" => policy.move_rule = Some(MoveRule::AlwaysDefect),
            "always-cooperate" => policy.move_rule = Some(MoveRule::AlwaysCooperate),
            "alternate" => policy.move_rule = Some(MoveRule::Alternate),
            _ => {
                if let Some(letters) = spec.strip_prefix("sequence:") {
                    if letters.is_empty() {
                        return Err("sequence policy needs at least one letter".to_string());
                    }
                    policy.move_rule = Some(MoveRule::Sequence(letters.chars().collect()));
                } else if let Some(split) = spec.strip_prefix("fixed-split:") {
                    policy.split_rule = Some(SplitRule::Fixed(split.to_string()));
                } else if spec == "fair-split" {
                    policy.split_rule = Some(SplitRule::Fair);
                } else if let Some(threshold) = spec.strip_prefix("accept-if-share>=") {
                    let threshold = threshold
                        .strip_suffix('%')
                        .map(|p| p.parse::<f64>().map(|v| v / 100.0))
                        .unwrap_or_else(|| threshold.parse::<f64>());
                    policy.accept_threshold =
                        Some(threshold.map_err(|e| format!("bad threshold: {e}"))?);
                } else if let Some(text) = spec.strip_prefix("constant:") {
                    policy.constant_reply = Some(text.to_string());
                } else {
                    return Err(format!("unknown mock policy '{spec}'"));
                }
            }
        }
        Ok(policy)
    }

    fn gap(turn: &TurnView<'_>) -> GatewayError {
        GatewayError::PolicyGap {
            turn: turn.kind.name().to_string(),
        }
    }
}

impl MockPolicy for StandardPolicy {
    fn reply(&self, turn: &TurnView<'_>) -> Result<String, GatewayError> {
        if let Some(text) = &self.constant_reply {
            return Ok(text.clone());
        }
        match turn.kind {
            TurnKind::MoveAnswer => {
                let rule = self.move_rule.as_ref().ok_or_else(|| Self::gap(turn))?;
                let label = match rule {
                    MoveRule::AlwaysCooperate => {
                        turn.move_labels().ok_or_else(|| Self::gap(turn))?.0
                    }
                    MoveRule::AlwaysDefect => turn.move_labels().ok_or_else(|| Self::gap(turn))?.1,
                    MoveRule::Alternate => {
                        let labels = turn.move_labels().ok_or_else(|| Self::gap(turn))?;
                        let round = turn.round_index().ok_or_else(|| Self::gap(turn))?;
                        if round % 2 == 0 {
                            labels.0
                        } else {
                            labels.1
                        }
                    }
                    MoveRule::Sequence(letters) => {
                        let round = turn.round_index().ok_or_else(|| Self::gap(turn))?;
                        *letters.get(round).ok_or_else(|| Self::gap(turn))?
                    }
                };
                Ok(format!("Option {label}"))
            }
            TurnKind::SplitAnswer => {
                match self.split_rule.as_ref().ok_or_else(|| Self::gap(turn))? {
                    SplitRule::Fixed(text) => Ok(text.clone()),
                    SplitRule::Fair => {
                        let total = turn.total_sum().ok_or_else(|| Self::gap(turn))?;
                        let give = total / 2;
                        Ok(format!("{},{give}", total - give))
                    }
                }
            }
            TurnKind::AcceptAnswer => {
                let threshold = self.accept_threshold.ok_or_else(|| Self::gap(turn))?;
                let (keep, give) = turn.offer().ok_or_else(|| Self::gap(turn))?;
                let share = give as f64 / (keep + give) as f64;
                Ok(if share >= threshold {
                    "ACCEPT"
                } else {
                    "REJECT"
                }
                .to_string())
            }
            TurnKind::EmotionProbe => Ok(self.probe_reply.clone()),
            TurnKind::OuterProbe => Ok(self.outer_reply.clone()),
            TurnKind::Scratchpad => Ok(self.scratchpad_reply.clone()),
        }
    }
}

/// A policy built from a closure, for tests that need full control.
pub struct FnPolicy<F>(pub F);

impl<F> MockPolicy for FnPolicy<F>
where
    F: Fn(&TurnView<'_>) -> Result<String, GatewayError> + Send + Sync,
{
    fn reply(&self, turn: &TurnView<'_>) -> Result<String, GatewayError> {
        (self.0)(turn)
    }
}

/// Deterministic backend driven by a [`MockPolicy`].
pub struct MockGateway {
    policy: Arc<dyn MockPolicy>,
}

impl MockGateway {
    pub fn new(policy: Arc<dyn MockPolicy>) -> Self {
        MockGateway { policy }
    }

    pub fn from_spec(spec: &str) -> Result<Self, String> {
        Ok(MockGateway::new(Arc::new(StandardPolicy::parse(spec)?)))
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&TurnView<'_>) -> Result<String, GatewayError> + Send + Sync + 'static,
    {
        MockGateway::new(Arc::new(FnPolicy(f)))
    }
}

impl Gateway for MockGateway {
    fn session(&self, _match_key: &str) -> Box<dyn ChatSession> {
        Box::new(MockSession {
            policy: Arc::clone(&self.policy),
        })
    }
}

struct MockSession {
    policy: Arc<dyn MockPolicy>,
}

impl ChatSession for MockSession {
    fn complete(&mut self, request: &CompletionRequest) -> Result<Completion, GatewayError> {
        let kind = classify_turn(request).ok_or_else(|| GatewayError::PolicyGap {
            turn: "unclassifiable".to_string(),
        })?;
        let text = self.policy.reply(&TurnView { kind, request })?;
        Ok(Completion { text, attempt: 1 })
    }
}
