use std::sync::Arc;

use advlogic::eval::{encode_graph, Part, TrainExample};
use advlogic::game::{GameConfig, GameState, Outcome, OutcomeReason, Phase, Player, Playout, Trace};
use advlogic::logic::{bundled_logic, LogicDef};
use advlogic::replay::{
    baseline_examples, frozen_theorem, make_auxiliary, read_archive, record_playout, write_archive, BaselineConfig, ReplayBuffer,
    ReplayError,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn logic(name: &str) -> Arc<LogicDef> {
    bundled_logic(name).unwrap().into_shared()
}

fn example(part: Part, tag: usize) -> TrainExample {
    TrainExample {
        graph: encode_graph(&GameState::initial(logic("fig2-mini"), GameConfig::default()).unwrap()),
        policy_target: vec![tag as f64],
        value_target: if part == Part::AdversaryWon { -1.0 } else { 1.0 },
        value_weight: 1.0,
        part,
    }
}

fn filled(prover: usize, adversary: usize, aux: usize, balance: bool) -> ReplayBuffer {
    let mut b = ReplayBuffer::new(7, balance);
    for (part, n) in [(Part::ProverWon, prover), (Part::AdversaryWon, adversary), (Part::Auxiliary, aux)] {
        for i in 0..n {
            b.push(example(part, i));
        }
    }
    b
}

fn count(batch: &[TrainExample], part: Part) -> usize {
    batch.iter().filter(|e| e.part == part).count()
}

#[test]
fn four_to_one_split_weights_and_counts() {
    let mut b = filled(400, 100, 0, true);
    assert!((b.value_weight(Part::ProverWon) - 0.8).abs() < 1e-12);
    assert!((b.value_weight(Part::AdversaryWon) - 0.2).abs() < 1e-12);
    let mut totals = [0usize; 2];
    for _ in 0..1000 {
        let batch = b.sample_batch(2).unwrap();
        totals[0] += count(&batch, Part::ProverWon);
        totals[1] += count(&batch, Part::AdversaryWon);
        for e in &batch {
            let w = if e.part == Part::ProverWon { 0.8 } else { 0.2 };
            assert!((e.value_weight - w).abs() < 1e-12);
        }
    }
    assert_eq!(totals, [1000, 1000]);
}

#[test]
fn unbalanced_sampling_keeps_unit_weights() {
    let mut b = filled(400, 100, 50, false);
    let batch = b.sample_batch(1000).unwrap();
    for e in &batch {
        let w = if e.part == Part::Auxiliary { 0.0 } else { 1.0 };
        assert_eq!(e.value_weight, w);
    }
    // Proportional draws: the prover part dominates.
    assert!(count(&batch, Part::ProverWon) > count(&batch, Part::AdversaryWon));
}

#[test]
fn indivisible_batch_is_rejected() {
    let mut b = filled(3, 3, 3, true);
    assert!(matches!(b.sample_batch(4), Err(ReplayError::BatchSize { batch: 4, parts: 3 })));
    assert!(matches!(ReplayBuffer::new(0, true).sample_batch(3), Err(ReplayError::EmptyBuffer)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn balanced_batches_split_evenly(prover in 0usize..60, adversary in 0usize..60, aux in 0usize..30, per in 1usize..8) {
        prop_assume!(prover + adversary + aux > 0);
        let mut b = filled(prover, adversary, aux, true);
        let parts: Vec<Part> = Part::ALL.into_iter().filter(|&p| b.part_len(p) > 0).collect();
        let batch = b.sample_batch(per * parts.len()).unwrap();
        prop_assert_eq!(batch.len(), per * parts.len());
        for &p in &parts {
            prop_assert_eq!(count(&batch, p), per);
        }
        let decided = (prover + adversary) as f64;
        for e in &batch {
            let expected = match e.part {
                Part::Auxiliary => 0.0,
                Part::ProverWon => prover as f64 / decided,
                Part::AdversaryWon => adversary as f64 / decided,
            };
            prop_assert!((e.value_weight - expected).abs() < 1e-12);
        }
        let w = b.value_weight(Part::ProverWon) + b.value_weight(Part::AdversaryWon);
        if prover + adversary > 0 {
            prop_assert!((w - 1.0).abs() < 1e-12);
        }
    }
}

/// Random legal play to the end of the game.
fn random_game(lg: &Arc<LogicDef>, cfg: GameConfig, rng: &mut ChaCha8Rng) -> (Trace, Outcome, Vec<Vec<f64>>) {
    let mut p = Playout::new(GameState::initial(lg.clone(), cfg).unwrap());
    let mut policies = Vec::new();
    while let Some(s) = p.state() {
        let legal = s.legal_actions().to_vec();
        let mut pi = vec![0.0; lg.action_space()];
        legal.iter().for_each(|&a| pi[a] = 1.0 / legal.len() as f64);
        policies.push(pi);
        p.play(legal[rng.random_range(0..legal.len())]).unwrap();
    }
    let o = p.outcome().unwrap();
    (p.into_trace(), o, policies)
}

#[test]
fn auxiliary_replays_prove_the_frozen_theorem() {
    let cfg = GameConfig {
        max_moves_per_phase: 12,
        ..GameConfig::default()
    };
    for name in ["fig2-mini", "int-prop-sequent", "modal-k"] {
        let lg = logic(name);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut made = 0;
        for id in 0..300 {
            let (trace, outcome, _) = random_game(&lg, cfg, &mut rng);
            let Some(theorem) = frozen_theorem(&trace).cloned() else { continue };
            if outcome.winner != Player::Adversary {
                assert!(matches!(make_auxiliary(lg.clone(), id, &trace, outcome, cfg), Err(ReplayError::NotProverLoss)));
                continue;
            }
            let aux = make_auxiliary(lg.clone(), id, &trace, outcome, cfg).unwrap();
            made += 1;
            // Follow the one-hot targets from the frozen theorem.
            let mut p = Playout::new(GameState::from_conjecture(lg.clone(), &theorem, cfg).unwrap());
            for e in &aux.examples {
                assert_eq!(e.part, Part::Auxiliary);
                assert_eq!(e.value_weight, 0.0);
                assert_eq!(e.graph, encode_graph(p.state().unwrap()));
                let hot: Vec<usize> = (0..e.policy_target.len()).filter(|&a| e.policy_target[a] == 1.0).collect();
                assert_eq!(hot.len(), 1);
                assert_eq!(e.policy_target.iter().sum::<f64>(), 1.0);
                p.play(hot[0]).unwrap();
            }
            assert_eq!(p.outcome().map(|o| o.reason), Some(OutcomeReason::ProofComplete));
            assert_eq!(aux.examples.len(), trace.moves_in(Phase::Construct).len());
        }
        assert!(made > 0, "{name}: no adversary wins");
    }
}

#[test]
fn recorded_replays_survive_the_archive() {
    let lg = logic("fig2-mini");
    let cfg = GameConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let replays: Vec<_> = (0..20)
        .map(|id| {
            let (trace, outcome, policies) = random_game(&lg, cfg, &mut rng);
            let r = record_playout(lg.clone(), id, &trace, outcome, &policies, cfg).unwrap();
            let sign = if outcome.winner == Player::Prover { 1.0 } else { -1.0 };
            assert!(r.examples.iter().all(|e| e.value_target == sign && e.value_weight == 1.0));
            assert_eq!(r.examples.len(), trace.moves().len());
            r
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("replays.jsonl");
    write_archive(&path, &replays).unwrap();
    assert_eq!(read_archive(&path).unwrap(), replays);

    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("\"version\":1", "\"version\":9", 1)).unwrap();
    assert!(matches!(read_archive(&path), Err(ReplayError::Archive(_))));
}

#[test]
fn recorded_outcome_must_match_the_replay() {
    let lg = logic("fig2-mini");
    let cfg = GameConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (trace, outcome, policies) = random_game(&lg, cfg, &mut rng);
    let flipped = Outcome {
        winner: outcome.winner.opponent(),
        ..outcome
    };
    assert!(matches!(
        record_playout(lg, 0, &trace, flipped, &policies, cfg),
        Err(ReplayError::OutcomeMismatch { .. })
    ));
}

#[test]
fn baseline_values_discount_by_remaining_moves() {
    let cfg = BaselineConfig {
        playouts: 300,
        seed: 8,
        ..BaselineConfig::default()
    };
    let data = baseline_examples(logic("int-prop-sequent"), &cfg).unwrap();
    assert_eq!(data.move_counts.len(), data.constructed);
    assert_eq!(data.examples.len(), data.move_counts.iter().sum::<usize>());
    let mut at = 0;
    for &n in &data.move_counts {
        let mut expected = 1.0;
        for i in (0..n).rev() {
            let e = &data.examples[at + i];
            assert!((e.value_target - expected).abs() < 1e-12, "move {i} of {n}");
            assert_eq!(e.value_weight, 1.0);
            assert_eq!(e.policy_target.iter().filter(|&&x| x == 1.0).count(), 1);
            expected *= 0.99;
        }
        at += n;
    }
}
