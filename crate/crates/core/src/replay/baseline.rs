use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{proof_states, ReplayBuffer, ReplayError};
use crate::eval::{encode_graph, Evaluator, LossReport, Part, TrainExample};
use crate::game::{random_construction, GameConfig};
use crate::logic::LogicDef;

/// Per-move discount of the baseline value target.
pub const BASELINE_DISCOUNT: f64 = 0.99;

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineConfig {
    pub playouts: usize,
    pub game: GameConfig,
    pub seed: u64,
    pub train_steps: usize,
    pub batch_size: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            playouts: 2000,
            game: GameConfig::default(),
            seed: 0,
            train_steps: 200,
            batch_size: 48,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineData {
    pub playouts: usize,
    /// Playouts that ended with a constructed theorem.
    pub constructed: usize,
    /// Construction length of every constructed theorem, in order.
    pub move_counts: Vec<usize>,
    pub examples: Vec<TrainExample>,
}

impl BaselineData {
    pub fn construction_rate(&self) -> f64 {
        if self.playouts == 0 {
            return 0.0;
        }
        self.constructed as f64 / self.playouts as f64
    }
}

/// Random constructions turned into proof demonstrations. For a theorem
/// built in `n` moves, the prover state before move `i` (0-based) gets the
/// adversary's move as a one-hot policy and value `0.99^(n - 1 - i)`, the
/// discount per move still to be made after this one.
pub fn baseline_examples(logic: Arc<LogicDef>, cfg: &BaselineConfig) -> Result<BaselineData, ReplayError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_actions = logic.action_space();
    let mut data = BaselineData {
        playouts: cfg.playouts,
        constructed: 0,
        move_counts: Vec::new(),
        examples: Vec::new(),
    };
    for _ in 0..cfg.playouts {
        let c = random_construction(logic.clone(), cfg.game, &mut rng)?;
        let Some(theorem) = c.theorem else {
            continue;
        };
        let n = c.moves.len();
        let states = proof_states(logic.clone(), &theorem, &c.moves, cfg.game)?;
        for (i, (s, &m)) in states.iter().zip(&c.moves).enumerate() {
            let mut policy_target = vec![0.0; n_actions];
            policy_target[m] = 1.0;
            data.examples.push(TrainExample {
                graph: encode_graph(s),
                policy_target,
                value_target: BASELINE_DISCOUNT.powi((n - 1 - i) as i32),
                value_weight: 1.0,
                part: Part::ProverWon,
            });
        }
        data.constructed += 1;
        data.move_counts.push(n);
    }
    Ok(data)
}

/// Generates baseline data and trains `evaluator` on it.
pub fn generate_baseline(
    logic: Arc<LogicDef>,
    cfg: &BaselineConfig,
    evaluator: &mut dyn Evaluator,
) -> Result<(BaselineData, LossReport), ReplayError> {
    let data = baseline_examples(logic, cfg)?;
    let mut buffer = ReplayBuffer::new(cfg.seed, true);
    for e in &data.examples {
        buffer.push(e.clone());
    }
    let mut loss = LossReport::default();
    if buffer.is_empty() || !evaluator.is_trainable() {
        return Ok((data, loss));
    }
    for _ in 0..cfg.train_steps {
        let l = evaluator.train_batch(&buffer.sample_batch(cfg.batch_size.max(1))?)?;
        loss.policy_loss += l.policy_loss / cfg.train_steps as f64;
        loss.value_loss += l.value_loss / cfg.train_steps as f64;
    }
    log::info!(
        "baseline: {}/{} playouts constructed a theorem, {} examples, loss {:.4}/{:.4}",
        data.constructed,
        data.playouts,
        data.examples.len(),
        loss.policy_loss,
        loss.value_loss
    );
    Ok((data, loss))
}
