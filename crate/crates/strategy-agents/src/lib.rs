//! Scripted co-players for the repeated games, plus the predetermined offer
//! schedule used for bargaining responder experiments.
//!
//! All five strategies are deterministic automata over a cooperate/defect
//! action alphabet. Battle of the Sexes play is projected onto that alphabet:
//! insisting on one's own preferred equilibrium counts as defection and
//! conceding counts as cooperation.

use game_core::{GameKind, MoveSemantic};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("round index {round_index} does not match observed history length {history_len}")]
    HistoryMismatch {
        round_index: usize,
        history_len: usize,
    },
    #[error("offer schedule requires a positive budget")]
    EmptyBudget,
}

/// The five predefined co-player strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    NaiveCooperative,
    Defective,
    Alternating,
    Vindictive,
    Imitating,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::NaiveCooperative,
        StrategyKind::Defective,
        StrategyKind::Alternating,
        StrategyKind::Vindictive,
        StrategyKind::Imitating,
    ];

    /// Parse a strategy name. Accepts a few spellings that show up in run
    /// configurations ("deflecting", "alterating", "imitative").
    pub fn parse(name: &str) -> Option<StrategyKind> {
        let lower = name.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        match lower.as_str() {
            "naive_cooperative" | "cooperative" | "naive" => Some(StrategyKind::NaiveCooperative),
            "defective" | "deflecting" => Some(StrategyKind::Defective),
            "alternating" | "alterating" | "alternative" => Some(StrategyKind::Alternating),
            "vindictive" => Some(StrategyKind::Vindictive),
            "imitating" | "imitative" => Some(StrategyKind::Imitating),
            _ => None,
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StrategyKind::NaiveCooperative => "naive_cooperative",
            StrategyKind::Defective => "defective",
            StrategyKind::Alternating => "alternating",
            StrategyKind::Vindictive => "vindictive",
            StrategyKind::Imitating => "imitating",
        };
        f.write_str(s)
    }
}

/// The cooperate/defect alphabet the strategy automata operate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Cooperate,
    Defect,
}

/// Project a game-local move semantic onto the strategy alphabet.
///
/// PD is the identity; in BotS, playing one's own preference is the selfish
/// (defect-like) action and conceding is the cooperative one.
pub fn action_of_semantic(game: GameKind, semantic: MoveSemantic) -> Action {
    match (game, semantic) {
        (_, MoveSemantic::Cooperate)
        | (GameKind::BattleOfSexes, MoveSemantic::ConcedePreference) => Action::Cooperate,
        _ => Action::Defect,
    }
}

/// Project an action back into the acting seat's local semantic for `game`:
/// in BotS, defection means insisting on one's own preferred equilibrium and
/// cooperation means conceding to the other player's. Works for either seat
/// because the semantics are seat-local.
pub fn semantic_of_action(game: GameKind, action: Action) -> MoveSemantic {
    match (game, action) {
        (GameKind::BattleOfSexes, Action::Cooperate) => MoveSemantic::ConcedePreference,
        (GameKind::BattleOfSexes, Action::Defect) => MoveSemantic::OwnPreference,
        (_, Action::Cooperate) => MoveSemantic::Cooperate,
        (_, Action::Defect) => MoveSemantic::Defect,
    }
}

/// Running state of one scripted co-player within a match.
///
/// `opponent_history` holds the agent's observed actions in order. The
/// vindictive grudge flag is monotone: once set it never resets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyState {
    pub kind: StrategyKind,
    pub opponent_history: Vec<Action>,
    pub triggered: bool,
}

impl StrategyState {
    pub fn new(kind: StrategyKind) -> Self {
        StrategyState {
            kind,
            opponent_history: Vec::new(),
            triggered: false,
        }
    }

    /// Record the agent's move for this round after both moves are revealed.
    pub fn observe(&mut self, agent_action: Action) {
        if agent_action == Action::Defect {
            self.triggered = true;
        }
        self.opponent_history.push(agent_action);
    }
}

/// The scripted co-player's move for `round_index`, given everything it has
/// observed so far.
///
/// NaiveCooperative always cooperates; Defective always defects; Alternating
/// cooperates on even rounds and defects on odd ones; Vindictive cooperates
/// until the first observed defection and defects forever after; Imitating
/// replays the agent's previous move, opening with cooperation.
pub fn scripted_move(state: &StrategyState, round_index: usize) -> Result<Action, StrategyError> {
    if round_index != state.opponent_history.len() {
        return Err(StrategyError::HistoryMismatch {
            round_index,
            history_len: state.opponent_history.len(),
        });
    }
    let action = match state.kind {
        StrategyKind::NaiveCooperative => Action::Cooperate,
        StrategyKind::Defective => Action::Defect,
        StrategyKind::Alternating => {
            if round_index.is_multiple_of(2) {
                Action::Cooperate
            } else {
                Action::Defect
            }
        }
        StrategyKind::Vindictive => {
            if state.triggered || state.opponent_history.contains(&Action::Defect) {
                Action::Defect
            } else {
                Action::Cooperate
            }
        }
        StrategyKind::Imitating => state
            .opponent_history
            .last()
            .copied()
            .unwrap_or(Action::Cooperate),
    };
    Ok(action)
}

/// Compact automaton view of the same five strategies, used by the
/// best-response oracle: the move depends only on `(round, state)` and the
/// state advances on each observed agent action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AutomatonState {
    pub triggered: bool,
    pub last_agent: Option<Action>,
}

impl AutomatonState {
    /// Dense index into the 6-element state space, for DP tables.
    pub fn index(&self) -> usize {
        let last = match self.last_agent {
            None => 0,
            Some(Action::Cooperate) => 1,
            Some(Action::Defect) => 2,
        };
        usize::from(self.triggered) * 3 + last
    }

    pub const COUNT: usize = 6;
}

pub fn automaton_move(kind: StrategyKind, state: &AutomatonState, round_index: usize) -> Action {
    match kind {
        StrategyKind::NaiveCooperative => Action::Cooperate,
        StrategyKind::Defective => Action::Defect,
        StrategyKind::Alternating => {
            if round_index.is_multiple_of(2) {
                Action::Cooperate
            } else {
                Action::Defect
            }
        }
        StrategyKind::Vindictive => {
            if state.triggered {
                Action::Defect
            } else {
                Action::Cooperate
            }
        }
        StrategyKind::Imitating => state.last_agent.unwrap_or(Action::Cooperate),
    }
}

pub fn automaton_advance(state: AutomatonState, observed: Action) -> AutomatonState {
    AutomatonState {
        triggered: state.triggered || observed == Action::Defect,
        last_agent: Some(observed),
    }
}

/// Predetermined responder offers: the share grid of the budget given to the
/// responder, as integer `(keep, give)` splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferSchedule {
    pub budget: i64,
    /// Give-fractions in [0, 1], strictly increasing.
    pub shares: Vec<f64>,
}

impl OfferSchedule {
    /// The default 11-point grid: 0%, 10%, ..., 100% of the budget given away.
    pub fn default_grid(budget: i64) -> Result<Self, StrategyError> {
        let shares = (0..=10).map(|i| f64::from(i) / 10.0).collect();
        Self::new(budget, shares)
    }

    pub fn new(budget: i64, shares: Vec<f64>) -> Result<Self, StrategyError> {
        if budget <= 0 {
            return Err(StrategyError::EmptyBudget);
        }
        Ok(OfferSchedule { budget, shares })
    }

    /// Expand to integer splits. `give` is the floored share of the budget
    /// and `keep` the remainder, so every split conserves the budget exactly.
    pub fn splits(&self) -> Vec<(i64, i64)> {
        self.shares
            .iter()
            .map(|share| {
                let give = (share * self.budget as f64).floor() as i64;
                (self.budget - give, give)
            })
            .collect()
    }
}

/// The default grid of `(keep, give)` splits for a budget.
pub fn responder_offer_schedule(budget: i64) -> Result<Vec<(i64, i64)>, StrategyError> {
    Ok(OfferSchedule::default_grid(budget)?.splits())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn play_against(kind: StrategyKind, agent_moves: &[Action]) -> Vec<Action> {
        let mut state = StrategyState::new(kind);
        let mut out = Vec::new();
        for (round, agent) in agent_moves.iter().enumerate() {
            out.push(scripted_move(&state, round).unwrap());
            state.observe(*agent);
        }
        out
    }

    #[test]
    fn vindictive_holds_the_grudge() {
        // Opponent history [C, D]: defect on round 2 and every later round.
        let seq = play_against(
            StrategyKind::Vindictive,
            &[
                Action::Cooperate,
                Action::Defect,
                Action::Cooperate,
                Action::Cooperate,
            ],
        );
        assert_eq!(
            seq,
            vec![
                Action::Cooperate,
                Action::Cooperate,
                Action::Defect,
                Action::Defect
            ]
        );
    }

    #[test]
    fn alternating_follows_round_parity() {
        let mut state = StrategyState::new(StrategyKind::Alternating);
        for round in 0..4 {
            let m = scripted_move(&state, round).unwrap();
            let expected = if round % 2 == 0 {
                Action::Cooperate
            } else {
                Action::Defect
            };
            assert_eq!(m, expected);
            state.observe(Action::Defect);
        }
    }

    #[test]
    fn imitating_opens_cooperatively_then_copies() {
        let seq = play_against(
            StrategyKind::Imitating,
            &[Action::Defect, Action::Cooperate],
        );
        assert_eq!(seq, vec![Action::Cooperate, Action::Defect]);
    }

    #[test]
    fn history_mismatch_is_an_error() {
        let state = StrategyState::new(StrategyKind::Imitating);
        assert_eq!(
            scripted_move(&state, 3),
            Err(StrategyError::HistoryMismatch {
                round_index: 3,
                history_len: 0
            })
        );
    }

    #[test]
    fn bots_projection_round_trips_the_run_example() {
        use game_core::{GameKind::BattleOfSexes, LabelMap, MoveLabels};
        let map = LabelMap::new(BattleOfSexes, MoveLabels::default());
        // A defective co-player insists on its own preference, which the
        // agent observes as "Option F" every round.
        let theirs = semantic_of_action(BattleOfSexes, Action::Defect);
        assert_eq!(map.coplayer_move(theirs).unwrap().label, 'F');
        // A naive cooperative co-player always plays the agent's preference.
        let conceding = semantic_of_action(BattleOfSexes, Action::Cooperate);
        assert_eq!(map.coplayer_move(conceding).unwrap().label, 'J');
    }

    #[test]
    fn alternating_bots_projection_by_round() {
        use game_core::GameKind::BattleOfSexes;
        let seq = play_against(
            StrategyKind::Alternating,
            &[
                Action::Defect,
                Action::Defect,
                Action::Defect,
                Action::Defect,
            ],
        );
        let projected: Vec<_> = seq
            .into_iter()
            .map(|a| semantic_of_action(BattleOfSexes, a))
            .collect();
        use game_core::MoveSemantic::*;
        assert_eq!(
            projected,
            vec![
                ConcedePreference,
                OwnPreference,
                ConcedePreference,
                OwnPreference
            ]
        );
    }

    #[test]
    fn offer_schedule_hits_the_documented_points() {
        let splits = responder_offer_schedule(100).unwrap();
        assert_eq!(splits.len(), 11);
        assert!(splits.contains(&(80, 20)));
        assert!(splits.contains(&(50, 50)));
        assert_eq!(splits[0], (100, 0));
        assert_eq!(splits[10], (0, 100));

        let splits = responder_offer_schedule(1000).unwrap();
        assert_eq!(splits[1], (900, 100));

        let splits = responder_offer_schedule(1_000_000).unwrap();
        assert_eq!(splits[10], (0, 1_000_000));
    }

    #[test]
    fn offer_schedule_rejects_zero_budget() {
        assert!(responder_offer_schedule(0).is_err());
    }

    fn action() -> impl Strategy<Value = Action> {
        prop_oneof![Just(Action::Cooperate), Just(Action::Defect)]
    }

    proptest! {
        #[test]
        fn constants_never_cross(history in proptest::collection::vec(action(), 0..20)) {
            let coop = play_against(StrategyKind::NaiveCooperative, &history);
            let defect = play_against(StrategyKind::Defective, &history);
            prop_assert!(coop.iter().all(|a| *a == Action::Cooperate));
            prop_assert!(defect.iter().all(|a| *a == Action::Defect));
        }

        #[test]
        fn vindictive_matches_cooperative_on_clean_prefix(
            history in proptest::collection::vec(Just(Action::Cooperate), 0..20)
        ) {
            let vindictive = play_against(StrategyKind::Vindictive, &history);
            let coop = play_against(StrategyKind::NaiveCooperative, &history);
            prop_assert_eq!(vindictive, coop);
        }

        #[test]
        fn imitating_is_a_delay_line(history in proptest::collection::vec(action(), 1..20)) {
            let seq = play_against(StrategyKind::Imitating, &history);
            prop_assert_eq!(seq[0], Action::Cooperate);
            for i in 1..seq.len() {
                prop_assert_eq!(seq[i], history[i - 1]);
            }
        }

        #[test]
        fn alternating_ignores_history(
            a in proptest::collection::vec(action(), 8),
            b in proptest::collection::vec(action(), 8),
        ) {
            prop_assert_eq!(
                play_against(StrategyKind::Alternating, &a),
                play_against(StrategyKind::Alternating, &b)
            );
        }

        #[test]
        fn scripted_and_automaton_views_agree(
            kind in proptest::sample::select(&StrategyKind::ALL),
            history in proptest::collection::vec(action(), 0..20),
        ) {
            let mut state = StrategyState::new(kind);
            let mut aut = AutomatonState::default();
            for (round, agent) in history.iter().enumerate() {
                let a = scripted_move(&state, round).unwrap();
                let b = automaton_move(kind, &aut, round);
                prop_assert_eq!(a, b);
                state.observe(*agent);
                aut = automaton_advance(aut, *agent);
            }
        }

        #[test]
        fn offer_splits_conserve_budget(budget in 1i64..=1_000_000) {
            for (keep, give) in responder_offer_schedule(budget).unwrap() {
                prop_assert_eq!(keep + give, budget);
                prop_assert!(keep >= 0 && give >= 0);
            }
        }
    }
}
