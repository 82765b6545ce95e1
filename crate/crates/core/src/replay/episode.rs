use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::{frozen_theorem, make_auxiliary, record_playout, ReplayBuffer, ReplayError};
use crate::eval::Evaluator;
use crate::game::{GameConfig, GameState, Outcome, OutcomeReason, Player, Playout, Trace};
use crate::logic::LogicDef;
use crate::search::{SearchConfig, Tree};

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeConfig {
    pub games: usize,
    pub search: SearchConfig,
    pub game: GameConfig,
    /// Gradient steps after generation.
    pub train_steps: usize,
    /// Rounded down to a multiple of the nonempty part count.
    pub batch_size: usize,
    /// Build auxiliary replays from games the prover lost.
    pub auxiliary: bool,
    /// Keep the searched subtree of the chosen move for the next decision.
    pub reuse_tree: bool,
    pub workers: usize,
    pub seed: u64,
    /// Keep replays from earlier episodes in the buffer.
    pub retain: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            games: 200,
            search: SearchConfig::default(),
            game: GameConfig::default(),
            train_steps: 64,
            batch_size: 48,
            auxiliary: true,
            reuse_tree: true,
            workers: 1,
            seed: 0,
            retain: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EpisodeStats {
    pub games: usize,
    pub prover_wins: usize,
    pub adversary_wins: usize,
    /// Prover wins caused by the adversary failing to construct.
    pub construction_failures: usize,
    pub mean_game_length: f64,
    pub aux_replays: usize,
    pub examples: usize,
    pub nodes_expanded: usize,
    pub train_steps: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub test_solved: Option<usize>,
}

#[derive(Debug, Error)]
#[error("episode aborted after {} games: {source}", partial.games)]
pub struct EpisodeError {
    pub partial: Box<EpisodeStats>,
    #[source]
    pub source: ReplayError,
}

/// A finished self-play game.
#[derive(Clone, Debug)]
pub struct PlayedGame {
    pub game_id: u64,
    pub trace: Trace,
    pub outcome: Outcome,
    /// Improved policy of every decision.
    pub policies: Vec<Vec<f64>>,
    pub nodes_expanded: usize,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one game, independent of scheduling.
pub fn game_seed(seed: u64, episode: u64, game: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ episode) ^ game)
}

/// Plays one full game with search for both players.
pub fn play_game<R: Rng + ?Sized>(
    logic: Arc<LogicDef>,
    evaluator: &dyn Evaluator,
    cfg: &EpisodeConfig,
    game_id: u64,
    rng: &mut R,
) -> Result<PlayedGame, ReplayError> {
    let mut playout = Playout::new(GameState::initial(logic, cfg.game)?);
    let mut tree: Option<Tree<GameState>> = None;
    let mut policies = Vec::new();
    let mut nodes_expanded = 0;
    while let Some(state) = playout.state() {
        let state = state.clone();
        let mut t = match tree.take() {
            Some(t) => t,
            None => Tree::new_root(state.clone(), evaluator, cfg.search.cvp)?,
        };
        t.add_root_noise(&cfg.search, rng);
        let r = t.run_search(evaluator, &cfg.search)?;
        nodes_expanded += r.expanded;
        let temperature = if state.moves_in_phase() < cfg.search.temperature_moves {
            cfg.search.temperature
        } else {
            0.0
        };
        let action = t.choose_action(&r.improved_policy, &cfg.search, temperature, rng);
        log::trace!("game {game_id} {} -> {action}: {}", state.mover().as_str(), r.trace_line());
        policies.push(r.improved_policy);
        playout.play(action)?;
        if cfg.reuse_tree {
            tree = t.reuse_subtree(action);
        }
    }
    let outcome = playout.outcome().expect("finished playout has an outcome");
    Ok(PlayedGame {
        game_id,
        trace: playout.into_trace(),
        outcome,
        policies,
        nodes_expanded,
    })
}

/// Plays `cfg.games` games in parallel, records them into `buffer` and
/// trains `evaluator` on balanced batches.
pub fn run_episode(
    logic: Arc<LogicDef>,
    evaluator: &mut dyn Evaluator,
    buffer: &mut ReplayBuffer,
    cfg: &EpisodeConfig,
    episode: u64,
) -> Result<EpisodeStats, EpisodeError> {
    let mut stats = EpisodeStats::default();
    let fail = |stats: &EpisodeStats, source: ReplayError| EpisodeError {
        partial: Box::new(stats.clone()),
        source,
    };
    if !cfg.retain {
        buffer.clear();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .expect("thread pool");
    let shared: &dyn Evaluator = &*evaluator;
    let results: Vec<Result<PlayedGame, ReplayError>> = pool.install(|| {
        (0..cfg.games as u64)
            .into_par_iter()
            .map(|g| {
                let mut rng = ChaCha8Rng::seed_from_u64(game_seed(cfg.seed, episode, g));
                play_game(logic.clone(), shared, cfg, g, &mut rng)
            })
            .collect()
    });
    let mut total_moves = 0;
    for result in results {
        let game = result.map_err(|e| fail(&stats, e))?;
        let replay = record_playout(logic.clone(), game.game_id, &game.trace, game.outcome, &game.policies, cfg.game)
            .map_err(|e| fail(&stats, e))?;
        stats.games += 1;
        match game.outcome.winner {
            Player::Prover => stats.prover_wins += 1,
            Player::Adversary => stats.adversary_wins += 1,
        }
        if game.outcome.reason == OutcomeReason::ConstructionFailed {
            stats.construction_failures += 1;
        }
        total_moves += game.policies.len();
        stats.nodes_expanded += game.nodes_expanded;
        stats.examples += replay.examples.len();
        buffer.add_replay(&replay);
        if cfg.auxiliary && game.outcome.winner == Player::Adversary && frozen_theorem(&game.trace).is_some() {
            let aux = make_auxiliary(logic.clone(), game.game_id, &game.trace, game.outcome, cfg.game)
                .map_err(|e| fail(&stats, e))?;
            stats.aux_replays += 1;
            stats.examples += aux.examples.len();
            buffer.add_replay(&aux);
        }
    }
    if stats.games > 0 {
        stats.mean_game_length = total_moves as f64 / stats.games as f64;
    }
    if evaluator.is_trainable() && !buffer.is_empty() {
        let parts = buffer.nonempty_count();
        let batch_size = (cfg.batch_size / parts).max(1) * parts;
        for _ in 0..cfg.train_steps {
            let batch = buffer.sample_batch(batch_size).map_err(|e| fail(&stats, e))?;
            let loss = evaluator
                .train_batch(&batch)
                .map_err(|e| fail(&stats, ReplayError::Eval(e)))?;
            stats.policy_loss += loss.policy_loss;
            stats.value_loss += loss.value_loss;
            stats.train_steps += 1;
        }
        if stats.train_steps > 0 {
            stats.policy_loss /= stats.train_steps as f64;
            stats.value_loss /= stats.train_steps as f64;
        }
    }
    log::info!(
        "episode {episode}: {} games, prover {} / adversary {}, {} auxiliary, {} examples, loss {:.4}/{:.4}",
        stats.games,
        stats.prover_wins,
        stats.adversary_wins,
        stats.aux_replays,
        stats.examples,
        stats.policy_loss,
        stats.value_loss
    );
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{FeatureModel, UniformEvaluator};
    use crate::logic::bundled_logic;

    fn small() -> EpisodeConfig {
        EpisodeConfig {
            games: 10,
            search: SearchConfig {
                node_budget: 16,
                ..SearchConfig::default()
            },
            train_steps: 4,
            ..EpisodeConfig::default()
        }
    }

    #[test]
    fn smoke_episode_fills_buffer() {
        let logic = bundled_logic("fig2-mini").unwrap().into_shared();
        let mut model = FeatureModel::new(logic.action_space(), 1 << 12);
        let mut buffer = ReplayBuffer::new(0, true);
        let stats = run_episode(logic, &mut model, &mut buffer, &small(), 0).unwrap();
        assert_eq!(stats.games, 10);
        assert_eq!(stats.prover_wins + stats.adversary_wins, 10);
        assert!(!buffer.is_empty());
        assert_eq!(stats.train_steps, 4);
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let logic = bundled_logic("fig2-mini").unwrap().into_shared();
        let run = |workers| {
            let mut e = UniformEvaluator::new(logic.action_space());
            let mut buffer = ReplayBuffer::new(0, true);
            let cfg = EpisodeConfig { workers, ..small() };
            run_episode(logic.clone(), &mut e, &mut buffer, &cfg, 2).unwrap()
        };
        assert_eq!(run(1), run(3));
    }
}
