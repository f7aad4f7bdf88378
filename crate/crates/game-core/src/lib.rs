//! Core game definitions: the two repeated 2x2 games (Prisoner's Dilemma and
//! Battle of the Sexes), the two one-shot bargaining games (Dictator and
//! Ultimatum), their payoff functions, and pure state transitions.
//!
//! Everything here is a plain value type or a pure function, so the whole
//! module is safe to share across any number of concurrent match workers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("illegal move {semantic:?} for {game:?}")]
    IllegalMove {
        game: GameKind,
        semantic: MoveSemantic,
    },
    #[error("illegal move label '{label}'")]
    IllegalLabel { label: char },
    #[error("invalid split: keep {keep} + give {give} != total {total}")]
    InvalidSplit { keep: i64, give: i64, total: i64 },
    #[error("{game:?} is not a bargaining game")]
    NotBargaining { game: GameKind },
}

/// The four games in the experiment suite.
///
/// The 2x2 games are repeated-capable; the bargaining games are one-shot only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    PrisonersDilemma,
    BattleOfSexes,
    Dictator,
    Ultimatum,
}

impl GameKind {
    pub fn is_repeated(self) -> bool {
        matches!(self, GameKind::PrisonersDilemma | GameKind::BattleOfSexes)
    }

    pub fn is_bargaining(self) -> bool {
        !self.is_repeated()
    }
}

impl std::fmt::Display for GameKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GameKind::PrisonersDilemma => "prisoners_dilemma",
            GameKind::BattleOfSexes => "battle_of_sexes",
            GameKind::Dictator => "dictator",
            GameKind::Ultimatum => "ultimatum",
        };
        f.write_str(s)
    }
}

/// Perspective-local meaning of a move in a 2x2 game.
///
/// PD uses `Cooperate`/`Defect` for both seats. BotS is asymmetric: each
/// player either insists on their own preferred equilibrium or concedes to
/// the other player's, so the same table cell reads differently per seat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveSemantic {
    Cooperate,
    Defect,
    OwnPreference,
    ConcedePreference,
}

impl MoveSemantic {
    pub fn is_legal_for(self, game: GameKind) -> bool {
        match game {
            GameKind::PrisonersDilemma => {
                matches!(self, MoveSemantic::Cooperate | MoveSemantic::Defect)
            }
            GameKind::BattleOfSexes => matches!(
                self,
                MoveSemantic::OwnPreference | MoveSemantic::ConcedePreference
            ),
            _ => false,
        }
    }
}

/// A concrete move: the single-character agent-facing label plus its meaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub label: char,
    pub semantic: MoveSemantic,
}

/// The pair of single-character move labels for one match, e.g. `('J', 'F')`.
///
/// `first` is the label bound to Cooperate (PD) or OwnPreference (BotS);
/// `second` is bound to Defect (PD) or ConcedePreference (BotS). The mapping
/// is fixed for a whole match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveLabels {
    pub first: char,
    pub second: char,
}

impl Default for MoveLabels {
    fn default() -> Self {
        MoveLabels {
            first: 'J',
            second: 'F',
        }
    }
}

/// Binds a label pair to one game, resolving semantics to letters in both
/// directions and for both seats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelMap {
    pub game: GameKind,
    pub labels: MoveLabels,
}

impl LabelMap {
    pub fn new(game: GameKind, labels: MoveLabels) -> Self {
        LabelMap { game, labels }
    }

    /// The `{move1}` template substitution: always the first configured
    /// letter. The rules text leads with it — mutual cooperation for PD,
    /// the agent's preferred equilibrium for BotS.
    pub fn move1(&self) -> char {
        self.labels.first
    }

    /// The `{move2}` template substitution: the second configured letter.
    pub fn move2(&self) -> char {
        self.labels.second
    }

    /// The agent's move for a semantic, with its displayed label.
    pub fn agent_move(&self, semantic: MoveSemantic) -> Result<Move, GameError> {
        if !semantic.is_legal_for(self.game) {
            return Err(GameError::IllegalMove {
                game: self.game,
                semantic,
            });
        }
        let label = match semantic {
            MoveSemantic::Cooperate | MoveSemantic::OwnPreference => self.labels.first,
            MoveSemantic::Defect | MoveSemantic::ConcedePreference => self.labels.second,
        };
        Ok(Move { label, semantic })
    }

    /// The co-player's move as displayed to the agent. In BotS the letters
    /// are shared but the meanings flip across the table: the co-player
    /// insisting on its own equilibrium shows up as the agent's concede
    /// letter, and vice versa.
    pub fn coplayer_move(&self, semantic: MoveSemantic) -> Result<Move, GameError> {
        if !semantic.is_legal_for(self.game) {
            return Err(GameError::IllegalMove {
                game: self.game,
                semantic,
            });
        }
        let label = match (self.game, semantic) {
            (GameKind::BattleOfSexes, MoveSemantic::OwnPreference) => self.labels.second,
            (GameKind::BattleOfSexes, MoveSemantic::ConcedePreference) => self.labels.first,
            (_, MoveSemantic::Cooperate) => self.labels.first,
            (_, MoveSemantic::Defect) => self.labels.second,
            _ => unreachable!("legality checked above"),
        };
        Ok(Move { label, semantic })
    }

    /// Resolve a parsed label back to the agent's semantic.
    pub fn agent_semantic(&self, label: char) -> Result<MoveSemantic, GameError> {
        let (first, second) = match self.game {
            GameKind::PrisonersDilemma => (MoveSemantic::Cooperate, MoveSemantic::Defect),
            GameKind::BattleOfSexes => {
                (MoveSemantic::OwnPreference, MoveSemantic::ConcedePreference)
            }
            _ => return Err(GameError::IllegalLabel { label }),
        };
        if label == self.labels.first {
            Ok(first)
        } else if label == self.labels.second {
            Ok(second)
        } else {
            Err(GameError::IllegalLabel { label })
        }
    }
}

/// Payoff for one simultaneous round, `(my_reward, opp_reward)` in integer
/// currency units, both moves given in each seat's local semantics.
///
/// PD: (C,C)=(3,3), (C,D)=(1,4), (D,C)=(4,1), (D,D)=(2,2).
/// BotS: coordination on my preference pays (10,7), on theirs (7,10), and
/// both mismatched pairings pay (0,0).
pub fn payoff(
    game: GameKind,
    mine: MoveSemantic,
    theirs: MoveSemantic,
) -> Result<(i64, i64), GameError> {
    if !mine.is_legal_for(game) {
        return Err(GameError::IllegalMove {
            game,
            semantic: mine,
        });
    }
    if !theirs.is_legal_for(game) {
        return Err(GameError::IllegalMove {
            game,
            semantic: theirs,
        });
    }
    use MoveSemantic::*;
    let entry = match (game, mine, theirs) {
        (GameKind::PrisonersDilemma, Cooperate, Cooperate) => (3, 3),
        (GameKind::PrisonersDilemma, Cooperate, Defect) => (1, 4),
        (GameKind::PrisonersDilemma, Defect, Cooperate) => (4, 1),
        (GameKind::PrisonersDilemma, Defect, Defect) => (2, 2),
        // Coordination happens when exactly one side insists: my insistence
        // plus their concession lands on my preferred equilibrium.
        (GameKind::BattleOfSexes, OwnPreference, ConcedePreference) => (10, 7),
        (GameKind::BattleOfSexes, ConcedePreference, OwnPreference) => (7, 10),
        (GameKind::BattleOfSexes, _, _) => (0, 0),
        _ => unreachable!("legality checked above"),
    };
    Ok(entry)
}

/// One completed round as stored in [`MatchState`] history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub mine: MoveSemantic,
    pub theirs: MoveSemantic,
    pub my_reward: i64,
    pub opp_reward: i64,
}

/// Accumulated state of a repeated match from the agent's perspective.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchState {
    pub history: Vec<RoundOutcome>,
    pub cumulative: (i64, i64),
}

impl MatchState {
    pub fn new() -> Self {
        Self::default()
    }

    /// 0-based index of the next round; always equals the history length.
    pub fn round_index(&self) -> usize {
        self.history.len()
    }
}

/// Extend a match state by one round. Pure: the input state is untouched.
pub fn apply_round(
    state: &MatchState,
    mine: MoveSemantic,
    theirs: MoveSemantic,
    game: GameKind,
) -> Result<MatchState, GameError> {
    let (my_reward, opp_reward) = payoff(game, mine, theirs)?;
    let mut next = state.clone();
    next.history.push(RoundOutcome {
        mine,
        theirs,
        my_reward,
        opp_reward,
    });
    next.cumulative.0 += my_reward;
    next.cumulative.1 += opp_reward;
    Ok(next)
}

/// Which bargaining seat the model occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BargainRole {
    DictatorProposer,
    UltimatumProposer,
    UltimatumResponder,
}

/// Outcome of the responder's veto in bargaining games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accepted,
    Rejected,
    /// The Dictator game has no veto.
    NotApplicable,
}

/// A proposed split of `total_sum` plus the responder's decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BargainState {
    pub total_sum: i64,
    pub keep: i64,
    pub give: i64,
    pub decision: Decision,
}

impl BargainState {
    pub fn new(total_sum: i64, keep: i64, give: i64, decision: Decision) -> Self {
        BargainState {
            total_sum,
            keep,
            give,
            decision,
        }
    }
}

/// Settle a bargaining game as `(proposer_payout, receiver_payout)`.
///
/// Dictator pays out unconditionally. Ultimatum pays out on acceptance and
/// zeroes both sides on rejection.
pub fn settle_bargain(game: GameKind, state: &BargainState) -> Result<(i64, i64), GameError> {
    if !game.is_bargaining() {
        return Err(GameError::NotBargaining { game });
    }
    if state.keep < 0 || state.give < 0 || state.keep + state.give != state.total_sum {
        return Err(GameError::InvalidSplit {
            keep: state.keep,
            give: state.give,
            total: state.total_sum,
        });
    }
    let payout = match (game, state.decision) {
        (GameKind::Dictator, _) => (state.keep, state.give),
        (GameKind::Ultimatum, Decision::Accepted) => (state.keep, state.give),
        (GameKind::Ultimatum, Decision::Rejected) => (0, 0),
        // An Ultimatum split with no decision yet settles as rejected-off;
        // callers record the decision before settling.
        (GameKind::Ultimatum, Decision::NotApplicable) => (0, 0),
        _ => unreachable!("bargaining games handled above"),
    };
    Ok(payout)
}
