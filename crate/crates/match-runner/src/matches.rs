//! The two game pipelines: repeated 2x2 matches (round questions, scripted
//! opponents, memory updates, emotion probes) and one-shot bargaining.
//!
//! A parse failure re-asks the same question up to `max_reasks` times (the
//! failed reply stays in the local context so the model can correct itself),
//! then the match is recorded as aborted. Gateway failures abort immediately.

use crate::config::{MatchConfig, OpponentSpec};
use crate::transcript::{BargainRecord, MatchStatus, MoveRecord, RoundRecord, Transcript};
use game_core::{
    apply_round, settle_bargain, BargainRole, BargainState, Decision, GameKind, LabelMap,
    MatchState, MoveLabels,
};
use llm_gateway::{ChatMessage, ChatSession, CompletionRequest, GatewayError};
use prompt_kit::{
    parse_accept, parse_free_emotion, parse_move, parse_probe_emotion, parse_split,
    render_bargain_scratchpad_prompt, render_emotion_probe, render_memory_update,
    render_offer_message, render_outer_emotion_probe, render_round_question,
    render_scratchpad_prompt, render_system_prompt, MemoryUpdate, PromptBundle, PromptError,
    SystemPromptSpec,
};
use strategy_agents::{action_of_semantic, scripted_move, semantic_of_action, StrategyState};

/// Why a match stopped early. Folded into [`MatchStatus::Aborted`].
enum Abort {
    Parse(PromptError),
    Gateway(GatewayError),
    Internal(String),
}

impl Abort {
    fn reason(&self) -> String {
        match self {
            Abort::Parse(e) => format!("parse: {e}"),
            Abort::Gateway(e) => format!("gateway: {e}"),
            Abort::Internal(e) => format!("internal: {e}"),
        }
    }
}

struct Turns<'a> {
    session: &'a mut dyn ChatSession,
    model_id: &'a str,
    temperature: f64,
    max_reasks: u32,
}

impl<'a> Turns<'a> {
    fn call(&mut self, messages: Vec<ChatMessage>) -> Result<String, Abort> {
        let mut request = CompletionRequest::new(self.model_id, messages);
        request.temperature = self.temperature;
        self.session
            .complete(&request)
            .map(|c| c.text)
            .map_err(Abort::Gateway)
    }

    /// Ask and parse, re-sending `question` after each unparseable reply.
    /// `suffix` holds the turn's opening messages (the question itself for
    /// round turns; empty for bargaining turns whose question lives in the
    /// system prompt).
    fn ask<T>(
        &mut self,
        base: &[ChatMessage],
        suffix: Vec<ChatMessage>,
        question: &str,
        parse: impl Fn(&str) -> Result<T, PromptError>,
    ) -> Result<(T, String), Abort> {
        let mut messages: Vec<ChatMessage> = base.to_vec();
        messages.extend(suffix);
        let mut last_error = None;
        for _ in 0..=self.max_reasks {
            let reply = self.call(messages.clone())?;
            match parse(&reply) {
                Ok(value) => return Ok((value, reply)),
                Err(err) => {
                    messages.push(ChatMessage::assistant(reply));
                    messages.push(ChatMessage::user(question));
                    last_error = Some(err);
                }
            }
        }
        Err(Abort::Parse(last_error.expect("at least one attempt")))
    }
}

/// Run one match of any game kind against an open chat session.
///
/// Aborts are not `Err`: they come back as a transcript with partial records
/// and `Aborted` status so the manifest can flag them. `Err` is reserved for
/// invalid configurations.
pub fn run_match(
    config: &MatchConfig,
    session: &mut dyn ChatSession,
) -> Result<Transcript, crate::RunnerError> {
    config.params.validate()?;
    let transcript = match config.params.game {
        GameKind::PrisonersDilemma | GameKind::BattleOfSexes => run_repeated(config, session),
        GameKind::Dictator | GameKind::Ultimatum => run_bargain(config, session),
    };
    Ok(transcript)
}

fn system_prompt(config: &MatchConfig) -> Result<(String, LabelMap), PromptError> {
    let p = &config.params;
    let labels = LabelMap::new(
        p.game,
        MoveLabels {
            first: p.labels.0,
            second: p.labels.1,
        },
    );
    let text = render_system_prompt(&SystemPromptSpec {
        game: p.game,
        bargain_role: p.bargain_role,
        emotion: p.emotion,
        emotion_strategy: p.emotion_strategy,
        coplayer: &p.coplayer_display,
        ordering: p.ordering,
        labels,
        currency: &p.currency,
        total_sum: p.budget,
    })?;
    Ok((text, labels))
}

fn run_repeated(config: &MatchConfig, session: &mut dyn ChatSession) -> Transcript {
    let p = &config.params;
    let (system, labels) = match system_prompt(config) {
        Ok(v) => v,
        Err(e) => return aborted_transcript(config, Vec::new(), None, (0, 0), Abort::Parse(e)),
    };
    let strategy_kind = match p.opponent {
        OpponentSpec::Strategy { strategy } => strategy,
        _ => unreachable!("validated"),
    };
    let rounds = p.rounds.expect("validated");

    let mut turns = Turns {
        session,
        model_id: &p.model_id,
        temperature: p.temperature,
        max_reasks: p.max_reasks,
    };
    let mut bundle = PromptBundle {
        system_prompt: system,
        memory: Vec::new(),
    };
    let mut state = MatchState::new();
    let mut opponent = StrategyState::new(strategy_kind);
    let mut records: Vec<RoundRecord> = Vec::new();

    for round in 0..rounds {
        let base: Vec<ChatMessage> =
            std::iter::once(ChatMessage::system(bundle.system_prompt.as_str()))
                .chain(bundle.memory.iter().map(|m| ChatMessage::user(m.as_str())))
                .collect();

        // Optional free-form reasoning turn, kept in the answer context.
        let mut answer_suffix: Vec<ChatMessage> = Vec::new();
        let mut internal_dialog = None;
        if p.flags.do_scratchpad_step {
            let scratch_q = match render_scratchpad_prompt(round as usize) {
                Ok(q) => q,
                Err(e) => {
                    return aborted_transcript(
                        config,
                        records,
                        None,
                        state.cumulative,
                        Abort::Parse(e),
                    )
                }
            };
            let mut messages = base.clone();
            messages.push(ChatMessage::user(scratch_q.as_str()));
            match turns.call(messages) {
                Ok(dialog) => {
                    answer_suffix.push(ChatMessage::user(scratch_q.as_str()));
                    answer_suffix.push(ChatMessage::assistant(dialog.as_str()));
                    internal_dialog = Some(dialog);
                }
                Err(abort) => {
                    return aborted_transcript(config, records, None, state.cumulative, abort)
                }
            }
        }

        let question = match render_round_question(round as usize, &labels) {
            Ok(q) => q,
            Err(e) => {
                return aborted_transcript(config, records, None, state.cumulative, Abort::Parse(e))
            }
        };
        answer_suffix.push(ChatMessage::user(question.as_str()));
        let label_pair = (labels.move1(), labels.move2());
        let (label, raw_reply) = match turns.ask(&base, answer_suffix, &question, |r| {
            parse_move(r, label_pair)
        }) {
            Ok(v) => v,
            Err(abort) => {
                return aborted_transcript(config, records, None, state.cumulative, abort)
            }
        };

        let agent_semantic = match labels.agent_semantic(label) {
            Ok(s) => s,
            Err(e) => {
                return aborted_transcript(
                    config,
                    records,
                    None,
                    state.cumulative,
                    Abort::Internal(e.to_string()),
                )
            }
        };
        let opponent_action = match scripted_move(&opponent, round as usize) {
            Ok(a) => a,
            Err(e) => {
                return aborted_transcript(
                    config,
                    records,
                    None,
                    state.cumulative,
                    Abort::Internal(e.to_string()),
                )
            }
        };
        let opponent_semantic = semantic_of_action(p.game, opponent_action);
        state = match apply_round(&state, agent_semantic, opponent_semantic, p.game) {
            Ok(s) => s,
            Err(e) => {
                return aborted_transcript(
                    config,
                    records,
                    None,
                    state.cumulative,
                    Abort::Internal(e.to_string()),
                )
            }
        };
        let outcome = *state.history.last().expect("just applied");
        let agent_move = labels.agent_move(agent_semantic).expect("legal");
        let opponent_move = labels.coplayer_move(opponent_semantic).expect("legal");

        // Memory core first, so the probes can see the round outcome.
        let core_entry = render_memory_update(&MemoryUpdate {
            round: round as usize,
            my_label: agent_move.label,
            opponent_label: opponent_move.label,
            my_reward: outcome.my_reward,
            opponent_reward: outcome.opp_reward,
            currency: &p.currency,
            own_emotion: None,
            demonstrated_emotion: None,
            seen_emotion: None,
        })
        .expect("memory template renders");

        let mut own_emotion = None;
        let mut own_emotion_flagged = false;
        if p.flags.need_check_emotions {
            let mut messages = base.clone();
            messages.push(ChatMessage::user(core_entry.as_str()));
            messages.push(ChatMessage::user(render_emotion_probe()));
            match turns.call(messages) {
                Ok(reply) => {
                    let parsed = parse_probe_emotion(&reply);
                    own_emotion_flagged = parsed.flagged;
                    own_emotion = Some(parsed.word);
                }
                Err(abort) => {
                    return aborted_transcript(config, records, None, state.cumulative, abort)
                }
            }
        }

        let mut shown_emotion = None;
        if p.flags.need_demonstrate_emotions {
            let mut messages = base.clone();
            messages.push(ChatMessage::user(core_entry.as_str()));
            messages.push(ChatMessage::user(render_outer_emotion_probe()));
            match turns.call(messages) {
                Ok(reply) => shown_emotion = Some(parse_free_emotion(&reply).word),
                Err(abort) => {
                    return aborted_transcript(config, records, None, state.cumulative, abort)
                }
            }
        }

        let seen_emotion = p
            .flags
            .memorize_seen_emotions
            .then(|| p.opponent_shown_emotion.clone());

        let memory_entry = render_memory_update(&MemoryUpdate {
            round: round as usize,
            my_label: agent_move.label,
            opponent_label: opponent_move.label,
            my_reward: outcome.my_reward,
            opponent_reward: outcome.opp_reward,
            currency: &p.currency,
            own_emotion: own_emotion.as_deref(),
            demonstrated_emotion: if p.flags.memorize_demonstrated_emotions {
                shown_emotion.as_deref()
            } else {
                None
            },
            seen_emotion: seen_emotion.as_deref(),
        })
        .expect("memory template renders");
        bundle.memory.push(memory_entry.clone());
        opponent.observe(action_of_semantic(p.game, agent_semantic));

        records.push(RoundRecord {
            round,
            agent_move: MoveRecord {
                label: agent_move.label,
                semantic: agent_move.semantic,
            },
            opponent_move: MoveRecord {
                label: opponent_move.label,
                semantic: opponent_move.semantic,
            },
            rewards: (outcome.my_reward, outcome.opp_reward),
            internal_dialog,
            own_emotion,
            own_emotion_flagged,
            shown_emotion,
            seen_emotion,
            question,
            raw_reply,
            memory_entry,
        });
    }

    Transcript {
        config: p.clone(),
        rounds: records,
        bargain: None,
        totals: state.cumulative,
        status: MatchStatus::Completed,
    }
}

fn run_bargain(config: &MatchConfig, session: &mut dyn ChatSession) -> Transcript {
    let p = &config.params;
    let (system, _labels) = match system_prompt(config) {
        Ok(v) => v,
        Err(e) => return aborted_transcript(config, Vec::new(), None, (0, 0), Abort::Parse(e)),
    };
    let total = p.budget.expect("validated");
    let role = match p.game {
        GameKind::Dictator => BargainRole::DictatorProposer,
        _ => p.bargain_role.expect("validated"),
    };

    let mut turns = Turns {
        session,
        model_id: &p.model_id,
        temperature: p.temperature,
        max_reasks: p.max_reasks,
    };
    let base = vec![ChatMessage::system(system.as_str())];

    // The responder sees the proposed split as its opening user message.
    let mut suffix: Vec<ChatMessage> = Vec::new();
    let offer_text = if let OpponentSpec::Offer { keep, give } = p.opponent {
        let text = render_offer_message(keep, give, &p.currency, &p.coplayer_display)
            .expect("offer template renders");
        suffix.push(ChatMessage::user(text.as_str()));
        Some(text)
    } else {
        None
    };

    let mut internal_dialog = None;
    if p.flags.do_scratchpad_step {
        let scratch_q = render_bargain_scratchpad_prompt();
        let mut messages = base.clone();
        messages.extend(suffix.iter().cloned());
        messages.push(ChatMessage::user(scratch_q));
        match turns.call(messages) {
            Ok(dialog) => {
                suffix.push(ChatMessage::user(scratch_q));
                suffix.push(ChatMessage::assistant(dialog.as_str()));
                internal_dialog = Some(dialog);
            }
            Err(abort) => return aborted_transcript(config, Vec::new(), None, (0, 0), abort),
        }
    }

    // The question to resend on re-asks: the offer message for responders,
    // the summary-step stem otherwise (the original ask lives in the system
    // prompt).
    let reask_question = offer_text
        .clone()
        .unwrap_or_else(|| "Propose a split. Answer format: number1,number2\n\nSplit:".to_string());

    let (record, totals) = match role {
        BargainRole::DictatorProposer | BargainRole::UltimatumProposer => {
            let (split, raw_reply) = match turns
                .ask(&base, suffix, &reask_question, |r| parse_split(r, total))
            {
                Ok(v) => v,
                Err(abort) => return aborted_transcript(config, Vec::new(), None, (0, 0), abort),
            };
            let (keep, give) = split;
            let decision = match (role, &p.opponent) {
                (BargainRole::DictatorProposer, _) => Decision::NotApplicable,
                (_, OpponentSpec::ScriptedResponder { accept_threshold }) => {
                    if give as f64 / total as f64 >= *accept_threshold {
                        Decision::Accepted
                    } else {
                        Decision::Rejected
                    }
                }
                _ => unreachable!("validated"),
            };
            let payouts =
                match settle_bargain(p.game, &BargainState::new(total, keep, give, decision)) {
                    Ok(v) => v,
                    Err(e) => {
                        return aborted_transcript(
                            config,
                            Vec::new(),
                            None,
                            (0, 0),
                            Abort::Internal(e.to_string()),
                        )
                    }
                };
            let record = BargainRecord {
                role,
                split,
                decision,
                payouts,
                internal_dialog,
                prompt: system.clone(),
                raw_reply,
            };
            // The agent proposes, so it holds the keep side.
            (record, (payouts.0, payouts.1))
        }
        BargainRole::UltimatumResponder => {
            let (keep, give) = match p.opponent {
                OpponentSpec::Offer { keep, give } => (keep, give),
                _ => unreachable!("validated"),
            };
            let (decision, raw_reply) =
                match turns.ask(&base, suffix, &reask_question, parse_accept) {
                    Ok(v) => v,
                    Err(abort) => {
                        return aborted_transcript(config, Vec::new(), None, (0, 0), abort)
                    }
                };
            let payouts =
                match settle_bargain(p.game, &BargainState::new(total, keep, give, decision)) {
                    Ok(v) => v,
                    Err(e) => {
                        return aborted_transcript(
                            config,
                            Vec::new(),
                            None,
                            (0, 0),
                            Abort::Internal(e.to_string()),
                        )
                    }
                };
            let record = BargainRecord {
                role,
                split: (keep, give),
                decision,
                payouts,
                internal_dialog,
                prompt: offer_text.unwrap_or_else(|| system.clone()),
                raw_reply,
            };
            // The agent responds, so it holds the give side.
            (record, (payouts.1, payouts.0))
        }
    };

    Transcript {
        config: p.clone(),
        rounds: Vec::new(),
        bargain: Some(record),
        totals,
        status: MatchStatus::Completed,
    }
}

fn aborted_transcript(
    config: &MatchConfig,
    rounds: Vec<RoundRecord>,
    bargain: Option<BargainRecord>,
    totals: (i64, i64),
    abort: Abort,
) -> Transcript {
    Transcript {
        config: config.params.clone(),
        rounds,
        bargain,
        totals,
        status: MatchStatus::Aborted {
            reason: abort.reason(),
        },
    }
}
