//! Best-response oracle: the maximum cumulative payoff attainable against a
//! deterministic scripted opponent over a fixed number of rounds.
//!
//! Two routes compute the same number: exhaustive enumeration over all
//! 2^rounds agent move sequences (the reference, capped at 16 rounds) and a
//! dynamic program over (round, opponent internal state). The DP also yields
//! one payoff-maximizing sequence, which doubles as a scripted best-response
//! player in tests.

use crate::MetricsError;
use game_core::{payoff, GameKind};
use strategy_agents::{
    automaton_advance, automaton_move, semantic_of_action, Action, AutomatonState, StrategyKind,
};

pub const EXHAUSTIVE_ROUNDS_CAP: u32 = 16;

fn agent_reward(game: GameKind, agent: Action, opponent: Action) -> i64 {
    let mine = semantic_of_action(game, agent);
    let theirs = semantic_of_action(game, opponent);
    payoff(game, mine, theirs)
        .expect("projected moves are legal")
        .0
}

/// Reference oracle: enumerate every agent move sequence.
pub fn max_payoff_exhaustive(
    game: GameKind,
    opponent: StrategyKind,
    rounds: u32,
) -> Result<i64, MetricsError> {
    if !game.is_repeated() {
        return Err(MetricsError::WrongGameKind { game });
    }
    if rounds > EXHAUSTIVE_ROUNDS_CAP {
        return Err(MetricsError::TooManyRounds {
            rounds,
            cap: EXHAUSTIVE_ROUNDS_CAP,
        });
    }
    let mut best = i64::MIN;
    for mask in 0u32..(1 << rounds) {
        let mut state = AutomatonState::default();
        let mut total = 0;
        for round in 0..rounds {
            let agent = if mask >> round & 1 == 1 {
                Action::Defect
            } else {
                Action::Cooperate
            };
            let theirs = automaton_move(opponent, &state, round as usize);
            total += agent_reward(game, agent, theirs);
            state = automaton_advance(state, agent);
        }
        best = best.max(total);
    }
    Ok(best)
}

/// Fast path: value iteration over (round, opponent internal state).
pub fn max_payoff_dp(
    game: GameKind,
    opponent: StrategyKind,
    rounds: u32,
) -> Result<i64, MetricsError> {
    Ok(best_response(game, opponent, rounds)?.0)
}

/// The DP optimum together with one sequence achieving it.
pub fn best_response(
    game: GameKind,
    opponent: StrategyKind,
    rounds: u32,
) -> Result<(i64, Vec<Action>), MetricsError> {
    if !game.is_repeated() {
        return Err(MetricsError::WrongGameKind { game });
    }
    let rounds = rounds as usize;
    // Reachable automaton states are few; index them densely.
    let states: Vec<AutomatonState> = {
        let mut all = Vec::new();
        for triggered in [false, true] {
            for last in [None, Some(Action::Cooperate), Some(Action::Defect)] {
                all.push(AutomatonState {
                    triggered,
                    last_agent: last,
                });
            }
        }
        all
    };
    debug_assert_eq!(states.len(), AutomatonState::COUNT);

    // value[round][state]; choice[round][state] = best agent action.
    let mut value = vec![vec![0i64; AutomatonState::COUNT]; rounds + 1];
    let mut choice = vec![vec![Action::Cooperate; AutomatonState::COUNT]; rounds];
    for round in (0..rounds).rev() {
        for state in &states {
            let theirs = automaton_move(opponent, state, round);
            let mut best = (i64::MIN, Action::Cooperate);
            for agent in [Action::Cooperate, Action::Defect] {
                let next = automaton_advance(*state, agent);
                let total = agent_reward(game, agent, theirs) + value[round + 1][next.index()];
                if total > best.0 {
                    best = (total, agent);
                }
            }
            value[round][state.index()] = best.0;
            choice[round][state.index()] = best.1;
        }
    }

    let mut sequence = Vec::with_capacity(rounds);
    let mut state = AutomatonState::default();
    for round_choice in choice.iter().take(rounds) {
        let agent = round_choice[state.index()];
        sequence.push(agent);
        state = automaton_advance(state, agent);
    }
    Ok((value[0][AutomatonState::default().index()], sequence))
}

/// The denominator of percent-of-max: best response against the actual
/// scripted opponent. Uses the DP; callers wanting the reference route use
/// [`max_payoff_exhaustive`] directly.
pub fn max_attainable_payoff(
    game: GameKind,
    opponent: StrategyKind,
    rounds: u32,
) -> Result<i64, MetricsError> {
    max_payoff_dp(game, opponent, rounds)
}
