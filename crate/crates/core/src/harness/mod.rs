//! Test-time proving, evaluation runs, the training loop and their reports.

mod config;
mod plot;
mod training;

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::eval::{EvalError, Evaluator};
use crate::game::{verify_trace, GameConfig, GameState, OutcomeReason, Phase, Player, Playout, Trace};
use crate::logic::{LogicDef, LogicError, ProblemSet};
use crate::replay::EpisodeError;
use crate::search::{SearchConfig, Tree};
use crate::term::Term;

pub use config::RunConfig;
pub use plot::render_curve_svg;
pub use training::{run_training, CurveRow, TrainingConfig, TrainingReport, CURVE_CSV_HEADER};

pub const EVAL_CSV_HEADER: &str = "problem_id,solved,moves,nodes,seconds";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error("config: {0}")]
    Config(String),
}

pub(crate) fn io_error(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    /// Total nodes the search may add for one problem.
    pub node_budget: usize,
    /// Nodes per decision; `None` lets one decision use the rest of the
    /// budget.
    pub move_budget: Option<usize>,
    pub search: SearchConfig,
    pub game: GameConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            node_budget: 10_000,
            move_budget: None,
            search: SearchConfig {
                test_mode: true,
                ..SearchConfig::default()
            },
            game: GameConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProblemResult {
    pub id: String,
    /// The proof was found and its trace re-verified.
    pub solved: bool,
    /// Prover moves played.
    pub moves: usize,
    pub nodes: usize,
    pub seconds: f64,
    pub trace: Option<Trace>,
    pub error: Option<String>,
}

/// Proves `conjecture` with test-mode search: no noise, argmax moves, the
/// certified path as soon as the root is known to be won. Stops once the
/// expanded nodes reach the budget; nodes kept from an earlier decision's
/// tree are not counted again.
pub fn solve_problem(
    logic: Arc<LogicDef>,
    id: &str,
    conjecture: &Term,
    evaluator: &dyn Evaluator,
    cfg: &SolveConfig,
) -> ProblemResult {
    let start = Instant::now();
    let mut result = ProblemResult {
        id: id.to_string(),
        solved: false,
        moves: 0,
        nodes: 0,
        seconds: 0.0,
        trace: None,
        error: None,
    };
    let state = match GameState::from_conjecture(logic.clone(), conjecture, cfg.game) {
        Ok(s) => s,
        Err(e) => {
            result.error = Some(e.to_string());
            return result;
        }
    };
    let search = SearchConfig {
        test_mode: true,
        ..cfg.search.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut playout = Playout::new(state);
    let mut tree: Option<Tree<GameState>> = None;
    let mut failure = None;
    while let Some(state) = playout.state() {
        let remaining = cfg.node_budget.saturating_sub(result.nodes);
        if remaining == 0 {
            break;
        }
        let mut t = match tree.take() {
            Some(t) => t,
            None => match Tree::new_root(state.clone(), evaluator, search.cvp) {
                Ok(t) => t,
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            },
        };
        let budget = cfg.move_budget.map_or(remaining, |m| m.min(remaining));
        let r = match t.run_search(evaluator, &SearchConfig { node_budget: budget, ..search.clone() }) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        result.nodes += r.expanded;
        if let Some(path) = t.follow_final_path() {
            for a in path {
                if let Err(e) = playout.play(a) {
                    failure = Some(e.to_string());
                    break;
                }
            }
            break;
        }
        let root = t.node(t.root());
        if root.upper == -1.0 || (root.exhausted && r.expanded == 0) {
            break;
        }
        let action = t.choose_action(&r.improved_policy, &search, 0.0, &mut rng);
        if let Err(e) = playout.play(action) {
            failure = Some(e.to_string());
            break;
        }
        tree = t.reuse_subtree(action);
    }
    let trace = playout.into_trace();
    result.moves = trace.moves_in(Phase::Prove).len();
    result.error = failure;
    let claimed = trace
        .outcome
        .is_some_and(|o| o.winner == Player::Prover && o.reason == OutcomeReason::ProofComplete);
    if claimed {
        result.solved = match reverify(logic, &trace, cfg.game) {
            Ok(()) => true,
            Err(e) => {
                result.error = Some(format!("proof failed re-verification: {e}"));
                false
            }
        };
    }
    result.trace = Some(trace);
    result.seconds = start.elapsed().as_secs_f64();
    result
}

/// Round-trips the trace through its text form and replays it.
fn reverify(logic: Arc<LogicDef>, trace: &Trace, game: GameConfig) -> Result<(), String> {
    let parsed = Trace::parse(&trace.format(&logic)).map_err(|e| e.to_string())?;
    match verify_trace(logic, &parsed, game) {
        Ok(Some(o)) if o.winner == Player::Prover && o.reason == OutcomeReason::ProofComplete => Ok(()),
        Ok(o) => Err(format!("replay ended with {o:?}")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Clone, Debug)]
pub struct EvalReport {
    pub logic: String,
    pub problems: String,
    pub rows: Vec<ProblemResult>,
}

impl EvalReport {
    pub fn solved(&self) -> usize {
        self.rows.iter().filter(|r| r.solved).count()
    }

    pub fn solved_ids(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().filter(|r| r.solved).map(|r| r.id.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{EVAL_CSV_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{:.3}", r.id, r.solved, r.moves, r.nodes, r.seconds);
        }
        out
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} on {}: solved {}/{}",
            self.logic,
            self.problems,
            self.solved(),
            self.rows.len()
        )
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_csv()).map_err(io_error(path))
    }
}

/// Solves every problem independently on up to `workers` threads. Rows
/// keep the problem-set order.
pub fn run_eval(
    logic: Arc<LogicDef>,
    problems: &ProblemSet,
    evaluator: &dyn Evaluator,
    cfg: &SolveConfig,
    workers: usize,
) -> EvalReport {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let rows = pool.install(|| {
        problems
            .problems
            .par_iter()
            .map(|p| {
                let r = solve_problem(logic.clone(), &p.id, &p.conjecture, evaluator, cfg);
                log::debug!("{}: solved={} nodes={} moves={}", r.id, r.solved, r.nodes, r.moves);
                r
            })
            .collect()
    });
    EvalReport {
        logic: logic.name.clone(),
        problems: problems.name.clone(),
        rows,
    }
}
