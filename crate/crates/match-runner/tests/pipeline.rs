//! End-to-end pipeline tests against deterministic mock backends.

use game_core::{BargainRole, Decision, GameKind};
use llm_gateway::mock::{MockGateway, TurnKind};
use llm_gateway::{CompletionRequest, Gateway, GatewayError, Role};
use match_runner::{
    run_match, ExperimentConfig, MatchConfig, MatchParams, MatchStatus, OpponentSpec,
};
use prompt_kit::{EmotionKind, EmotionPromptStrategy, PipelineFlags, PromptOrdering, RelationKind};
use std::sync::Mutex;
use strategy_agents::StrategyKind;

fn pd_params(opponent: StrategyKind, rounds: u32) -> MatchParams {
    MatchParams {
        game: GameKind::PrisonersDilemma,
        bargain_role: None,
        opponent: OpponentSpec::Strategy { strategy: opponent },
        rounds: Some(rounds),
        budget: None,
        emotion: EmotionKind::Neutral,
        emotion_strategy: EmotionPromptStrategy::Simple,
        relation: RelationKind::AnotherPerson,
        coplayer_display: "coplayer".to_string(),
        flags: PipelineFlags::default(),
        labels: ('J', 'F'),
        currency: "dollars".to_string(),
        ordering: PromptOrdering::Basic,
        model_id: "mock".to_string(),
        temperature: 0.0,
        opponent_shown_emotion: "happy".to_string(),
        max_reasks: 3,
    }
}

fn bots_params(opponent: StrategyKind, rounds: u32) -> MatchParams {
    let mut p = pd_params(opponent, rounds);
    p.game = GameKind::BattleOfSexes;
    p
}

fn run(params: MatchParams, gateway: &dyn Gateway) -> match_runner::Transcript {
    let config = MatchConfig {
        params,
        repetition: 0,
    };
    let mut session = gateway.session(&config.match_key());
    run_match(&config, session.as_mut()).unwrap()
}

#[test]
fn always_defect_vs_naive_cooperative_scores_forty() {
    let gateway = MockGateway::from_spec("always-defect").unwrap();
    let t = run(pd_params(StrategyKind::NaiveCooperative, 10), &gateway);
    assert_eq!(t.status, MatchStatus::Completed);
    assert_eq!(t.rounds.len(), 10);
    assert_eq!(t.totals, (40, 10));
}

#[test]
fn always_defect_vs_vindictive_scores_twenty_two() {
    let gateway = MockGateway::from_spec("always-defect").unwrap();
    let t = run(pd_params(StrategyKind::Vindictive, 10), &gateway);
    // 4 on the first round, then mutual defection: 4 + 9x2.
    assert_eq!(t.totals, (22, 19));
}

#[test]
fn own_preference_vs_defective_bots_never_coordinates() {
    // The selfish mock insists on its own equilibrium, so does the scripted
    // co-player: every round mismatches.
    let gateway = MockGateway::from_spec("always-defect").unwrap();
    let t = run(bots_params(StrategyKind::Defective, 10), &gateway);
    assert_eq!(t.totals, (0, 0));
    assert!(t.rounds.iter().all(|r| r.opponent_move.label == 'F'));
    assert!(t.rounds.iter().all(|r| r.agent_move.label == 'J'));
}

#[test]
fn conceding_vs_defective_bots_scores_seventy() {
    let gateway = MockGateway::from_spec("always-cooperate").unwrap();
    let t = run(bots_params(StrategyKind::Defective, 10), &gateway);
    assert_eq!(t.totals, (70, 100));
}

#[test]
fn rewards_in_records_rederive_from_moves() {
    let gateway = MockGateway::from_spec("alternate").unwrap();
    let t = run(pd_params(StrategyKind::Imitating, 8), &gateway);
    for r in &t.rounds {
        let expected = game_core::payoff(
            GameKind::PrisonersDilemma,
            r.agent_move.semantic,
            r.opponent_move.semantic,
        )
        .unwrap();
        assert_eq!(r.rewards, expected);
    }
}

/// Capture every request the runner sends so the context shape can be
/// audited.
struct Recorder {
    requests: Mutex<Vec<CompletionRequest>>,
}

#[test]
fn context_carries_exactly_r_memories_and_the_round_question() {
    let recorder = std::sync::Arc::new(Recorder {
        requests: Mutex::new(Vec::new()),
    });
    let seen = recorder.clone();
    let gateway = MockGateway::from_fn(move |turn| {
        seen.requests.lock().unwrap().push(turn.request.clone());
        match turn.kind {
            TurnKind::MoveAnswer => Ok("Option J".to_string()),
            TurnKind::Scratchpad => Ok("thinking".to_string()),
            _ => Err(GatewayError::PolicyGap {
                turn: turn.kind.name().to_string(),
            }),
        }
    });
    let mut params = pd_params(StrategyKind::NaiveCooperative, 4);
    params.flags.do_scratchpad_step = true;
    let t = run(params, &gateway);
    assert_eq!(t.status, MatchStatus::Completed);

    let requests = recorder.requests.lock().unwrap();
    // Scratchpad turn + answer turn per round.
    assert_eq!(requests.len(), 8);
    for (i, request) in requests.iter().enumerate() {
        let round = i / 2;
        let is_answer = i % 2 == 1;
        assert_eq!(request.messages[0].role, Role::System);
        let memories = request
            .messages
            .iter()
            .filter(|m| m.role == Role::User && m.content.starts_with("In round"))
            .count();
        assert_eq!(memories, round, "request {i} carries {memories} memories");
        if is_answer {
            let last = request.messages.last().unwrap();
            assert!(last
                .content
                .contains(&format!("You are currently playing round {round}.")));
            // Exactly one scratchpad turn precedes the answer turn.
            let scratch_turns = request
                .messages
                .iter()
                .filter(|m| m.content.contains("Think step by step about which Option"))
                .count();
            assert_eq!(scratch_turns, 1);
            assert_eq!(
                request
                    .messages
                    .iter()
                    .filter(|m| m.role == Role::Assistant)
                    .count(),
                1
            );
        }
    }
    assert!(t
        .rounds
        .iter()
        .all(|r| r.internal_dialog.as_deref() == Some("thinking")));
}

#[test]
fn emotion_probes_fill_memory_like_the_run_examples() {
    let gateway = MockGateway::from_fn(|turn| match turn.kind {
        TurnKind::MoveAnswer => Ok("Option J".to_string()),
        TurnKind::EmotionProbe => Ok("I feel angry".to_string()),
        TurnKind::OuterProbe => Ok("I will show that I am happy".to_string()),
        _ => Err(GatewayError::PolicyGap {
            turn: turn.kind.name().to_string(),
        }),
    });
    let mut params = bots_params(StrategyKind::Defective, 2);
    params.emotion = EmotionKind::Anger;
    params.emotion_strategy = EmotionPromptStrategy::CoplayerBased;
    params.flags.need_check_emotions = true;
    params.flags.need_demonstrate_emotions = true;
    params.flags.memorize_seen_emotions = true;
    let t = run(params, &gateway);
    assert_eq!(t.status, MatchStatus::Completed);
    let r0 = &t.rounds[0];
    assert_eq!(r0.own_emotion.as_deref(), Some("angry"));
    assert_eq!(r0.shown_emotion.as_deref(), Some("happy"));
    assert_eq!(r0.seen_emotion.as_deref(), Some("happy"));
    assert_eq!(
        r0.memory_entry,
        "In round 0, you chose Option J and the other player chose Option F. Thus, you won 0 dollars and the other player won 0 dollars. You felt angry at the end of the last round. Your opponent is feeling happy."
    );
}

#[test]
fn unparseable_replies_abort_after_the_reask_budget() {
    let calls = std::sync::Arc::new(Mutex::new(0usize));
    let counter = calls.clone();
    let gateway = MockGateway::from_fn(move |_| {
        *counter.lock().unwrap() += 1;
        Ok("I refuse to answer".to_string())
    });
    let t = run(pd_params(StrategyKind::NaiveCooperative, 10), &gateway);
    match &t.status {
        MatchStatus::Aborted { reason } => assert!(reason.contains("parse"), "{reason}"),
        other => panic!("expected abort, got {other:?}"),
    }
    // 1 initial ask + 3 re-asks.
    assert_eq!(*calls.lock().unwrap(), 4);
    assert!(t.rounds.is_empty());
}

#[test]
fn reask_recovers_when_a_later_reply_parses() {
    let calls = std::sync::Arc::new(Mutex::new(0usize));
    let counter = calls.clone();
    let gateway = MockGateway::from_fn(move |_| {
        let mut n = counter.lock().unwrap();
        *n += 1;
        if *n == 1 {
            Ok("hmm".to_string())
        } else {
            Ok("Option F".to_string())
        }
    });
    let t = run(pd_params(StrategyKind::NaiveCooperative, 1), &gateway);
    assert_eq!(t.status, MatchStatus::Completed);
    assert_eq!(t.totals, (4, 1));
}

#[test]
fn dictator_records_the_split() {
    let gateway = MockGateway::from_spec("fixed-split:67,33").unwrap();
    let mut params = pd_params(StrategyKind::NaiveCooperative, 1);
    params.game = GameKind::Dictator;
    params.opponent = OpponentSpec::None;
    params.bargain_role = Some(BargainRole::DictatorProposer);
    params.rounds = None;
    params.budget = Some(100);
    let t = run(params, &gateway);
    let record = t.bargain.as_ref().unwrap();
    assert_eq!(record.split, (67, 33));
    assert_eq!(record.decision, Decision::NotApplicable);
    assert_eq!(record.payouts, (67, 33));
    assert_eq!(t.totals, (67, 33));
}

#[test]
fn ultimatum_proposer_faces_the_scripted_threshold() {
    let mut params = pd_params(StrategyKind::NaiveCooperative, 1);
    params.game = GameKind::Ultimatum;
    params.bargain_role = Some(BargainRole::UltimatumProposer);
    params.rounds = None;
    params.budget = Some(100);

    params.opponent = OpponentSpec::ScriptedResponder {
        accept_threshold: 0.2,
    };
    let gateway = MockGateway::from_spec("fixed-split:65,35").unwrap();
    let t = run(params.clone(), &gateway);
    let record = t.bargain.as_ref().unwrap();
    assert_eq!(record.decision, Decision::Accepted);
    assert_eq!(record.payouts, (65, 35));

    // A threshold above any attainable share is an always-reject responder.
    params.opponent = OpponentSpec::ScriptedResponder {
        accept_threshold: 1.1,
    };
    let gateway = MockGateway::from_spec("fixed-split:50,50").unwrap();
    let t = run(params, &gateway);
    let record = t.bargain.as_ref().unwrap();
    assert_eq!(record.decision, Decision::Rejected);
    assert_eq!(record.payouts, (0, 0));
    assert_eq!(t.totals, (0, 0));
}

#[test]
fn ultimatum_responder_judges_one_offer_per_match() {
    let gateway = MockGateway::from_spec("accept-if-share>=0.2").unwrap();
    let mut params = pd_params(StrategyKind::NaiveCooperative, 1);
    params.game = GameKind::Ultimatum;
    params.bargain_role = Some(BargainRole::UltimatumResponder);
    params.rounds = None;
    params.budget = Some(100);

    params.opponent = OpponentSpec::Offer { keep: 90, give: 10 };
    let t = run(params.clone(), &gateway);
    let record = t.bargain.as_ref().unwrap();
    assert_eq!(record.decision, Decision::Rejected);
    assert_eq!(t.totals, (0, 0));

    params.opponent = OpponentSpec::Offer { keep: 50, give: 50 };
    let t = run(params, &gateway);
    let record = t.bargain.as_ref().unwrap();
    assert_eq!(record.decision, Decision::Accepted);
    // Agent holds the give side.
    assert_eq!(t.totals, (50, 50));
    assert_eq!(record.payouts, (50, 50));
}

#[test]
fn responder_context_is_one_shot() {
    // System prompt, then exactly one user message (the offer) per match.
    let recorder = std::sync::Arc::new(Recorder {
        requests: Mutex::new(Vec::new()),
    });
    let seen = recorder.clone();
    let gateway = MockGateway::from_fn(move |turn| {
        seen.requests.lock().unwrap().push(turn.request.clone());
        Ok("ACCEPT".to_string())
    });
    let mut params = pd_params(StrategyKind::NaiveCooperative, 1);
    params.game = GameKind::Ultimatum;
    params.bargain_role = Some(BargainRole::UltimatumResponder);
    params.rounds = None;
    params.budget = Some(100);
    params.opponent = OpponentSpec::Offer { keep: 40, give: 60 };
    run(params, &gateway);
    let requests = recorder.requests.lock().unwrap();
    assert_eq!(requests.len(), 1);
    assert_eq!(requests[0].messages.len(), 2);
    assert!(requests[0].messages[1]
        .content
        .contains("keep 40 dollars for himself and give 60 dollars to you"));
}

#[test]
fn experiment_runs_resume_and_stay_deterministic() {
    let toml = r#"
        [experiment]
        repetitions = 5
        [grid]
        games = ["prisoners_dilemma"]
        opponents = ["vindictive"]
        emotions = ["none"]
    "#;
    let config = ExperimentConfig::from_toml(toml).unwrap();
    let gateway = MockGateway::from_spec("always-defect").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let options = match_runner::ExperimentOptions {
        jobs: 2,
        deterministic: true,
        argv: vec!["test".to_string()],
    };
    let manifest = match_runner::run_experiment(&config, &gateway, dir.path(), &options).unwrap();
    assert_eq!(manifest.entries.len(), 5);
    assert_eq!(manifest.completed(), 5);

    // All five repetition transcripts are byte-identical.
    let bytes: Vec<Vec<u8>> = manifest
        .entries
        .iter()
        .map(|e| std::fs::read(manifest.transcript_path(e)).unwrap())
        .collect();
    assert!(bytes.iter().all(|b| *b == bytes[0]));

    // Resume is a no-op: identical manifest, no new work.
    let manifest2 = match_runner::run_experiment(&config, &gateway, dir.path(), &options).unwrap();
    assert_eq!(
        manifest.entries, manifest2.entries,
        "resume must keep the manifest stable"
    );

    // A fresh directory reproduces the same transcript bytes.
    let dir2 = tempfile::tempdir().unwrap();
    let manifest3 = match_runner::run_experiment(&config, &gateway, dir2.path(), &options).unwrap();
    let bytes3 = std::fs::read(manifest3.transcript_path(&manifest3.entries[0])).unwrap();
    assert_eq!(bytes[0], bytes3);

    // The recorded run replays byte-for-byte.
    let replay = llm_gateway::ReplayGateway::from_log(&dir.path().join("call_log.jsonl")).unwrap();
    let dir4 = tempfile::tempdir().unwrap();
    let manifest4 = match_runner::run_experiment(&config, &replay, dir4.path(), &options).unwrap();
    let bytes4 = std::fs::read(manifest4.transcript_path(&manifest4.entries[0])).unwrap();
    assert_eq!(bytes[0], bytes4);
}

#[test]
fn aborted_matches_are_flagged_not_fatal() {
    let toml = r#"
        [experiment]
        repetitions = 1
        [grid]
        games = ["prisoners_dilemma"]
        opponents = ["defective", "vindictive"]
        emotions = ["none"]
    "#;
    let config = ExperimentConfig::from_toml(toml).unwrap();
    // Replies are junk, so every match aborts.
    let gateway = MockGateway::from_spec("constant:shrug").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = match_runner::run_experiment(
        &config,
        &gateway,
        dir.path(),
        &match_runner::ExperimentOptions {
            jobs: 1,
            deterministic: true,
            argv: vec![],
        },
    )
    .unwrap();
    assert_eq!(manifest.entries.len(), 2);
    assert_eq!(manifest.aborted(), 2);
    for entry in &manifest.entries {
        let t = match_runner::read_transcript(&manifest.transcript_path(entry)).unwrap();
        assert!(matches!(t.status, MatchStatus::Aborted { .. }));
    }
}
