//! Training data from played games.
//!
//! A finished game becomes a [`Replay`]: one example per decision with the
//! search's improved policy as the policy target and the prover-centric
//! outcome as the value target. Games the prover lost additionally yield an
//! auxiliary replay that demonstrates the proof hidden in the adversary's
//! construction moves. The [`ReplayBuffer`] keeps the three kinds apart and
//! draws balanced batches.

mod archive;
mod baseline;
mod buffer;
mod episode;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{encode_graph, EvalError, Part, TrainExample};
use crate::game::{
    GameConfig, GameError, GameState, Outcome, OutcomeReason, Phase, Player, Step, Trace, TraceError, TraceRowKind,
};
use crate::logic::LogicDef;
use crate::term::Term;

pub use archive::{read_archive, write_archive, ARCHIVE_VERSION};
pub use baseline::{baseline_examples, generate_baseline, BaselineConfig, BaselineData, BASELINE_DISCOUNT};
pub use buffer::ReplayBuffer;
pub use episode::{game_seed, play_game, run_episode, EpisodeConfig, EpisodeError, EpisodeStats, PlayedGame};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("trace has {moves} moves but {policies} policies were given")]
    Length { moves: usize, policies: usize },
    #[error("policy of length {found} for action space {expected}")]
    PolicyLength { expected: usize, found: usize },
    #[error("auxiliary replays are only made for games the prover lost")]
    NotProverLoss,
    #[error("auxiliary moves do not prove the theorem (ended with {0:?})")]
    AuxiliaryUnsound(Option<Outcome>),
    #[error("replayed game ended with {replayed:?}, recorded {recorded:?}")]
    OutcomeMismatch {
        recorded: Outcome,
        replayed: Option<Outcome>,
    },
    #[error("all buffer parts are empty")]
    EmptyBuffer,
    #[error("batch size {batch} is not a positive multiple of {parts} nonempty parts")]
    BatchSize { batch: usize, parts: usize },
    #[error("replay archive: {0}")]
    Archive(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Examples from one game plus its metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replay {
    pub game_id: u64,
    pub logic: String,
    pub winner: Player,
    pub reason: String,
    /// Moves in the construction and proving phases.
    pub phase_lengths: [u32; 2],
    pub examples: Vec<TrainExample>,
}

impl Replay {
    pub fn part(&self) -> Option<Part> {
        self.examples.first().map(|e| e.part)
    }
}

pub fn winner_part(winner: Player) -> Part {
    match winner {
        Player::Prover => Part::ProverWon,
        Player::Adversary => Part::AdversaryWon,
    }
}

fn start_state(logic: Arc<LogicDef>, trace: &Trace, config: GameConfig) -> Result<GameState, ReplayError> {
    let start = &trace.rows[0];
    let state = match (&start.kind, &start.goals[..]) {
        (TraceRowKind::Start(Phase::Construct), _) => GameState::initial(logic, config)?,
        (TraceRowKind::Start(Phase::Prove), [conjecture]) => GameState::from_conjecture(logic, conjecture, config)?,
        _ => {
            return Err(TraceError::Mismatch {
                row: 0,
                message: "trace must begin with a start row".into(),
            }
            .into())
        }
    };
    Ok(state)
}

/// Decision states of a trace, reproduced through the game engine, and the
/// outcome the replay reached.
pub fn decision_states(
    logic: Arc<LogicDef>,
    trace: &Trace,
    config: GameConfig,
) -> Result<(Vec<GameState>, Option<Outcome>), ReplayError> {
    let mut state = start_state(logic, trace, config)?;
    if let Some(o) = state.stuck_outcome() {
        return Ok((Vec::new(), Some(o)));
    }
    let mut states = Vec::new();
    for (_, rule) in trace.moves() {
        states.push(state.clone());
        match state.step(rule)? {
            Step::Over(o) => return Ok((states, Some(o))),
            Step::Continue(s) => state = s,
        }
    }
    Ok((states, None))
}

/// One example per decision of a finished game.
pub fn record_playout(
    logic: Arc<LogicDef>,
    game_id: u64,
    trace: &Trace,
    outcome: Outcome,
    policies: &[Vec<f64>],
    config: GameConfig,
) -> Result<Replay, ReplayError> {
    let moves = trace.moves();
    if moves.len() != policies.len() {
        return Err(ReplayError::Length {
            moves: moves.len(),
            policies: policies.len(),
        });
    }
    let n = logic.action_space();
    if let Some(p) = policies.iter().find(|p| p.len() != n) {
        return Err(ReplayError::PolicyLength {
            expected: n,
            found: p.len(),
        });
    }
    let name = logic.name.clone();
    let (states, replayed) = decision_states(logic, trace, config)?;
    if replayed != Some(outcome) {
        return Err(ReplayError::OutcomeMismatch {
            recorded: outcome,
            replayed,
        });
    }
    let part = winner_part(outcome.winner);
    let examples = states
        .iter()
        .zip(policies)
        .map(|(s, p)| TrainExample {
            graph: encode_graph(s),
            policy_target: p.clone(),
            value_target: outcome.reward(),
            value_weight: 1.0,
            part,
        })
        .collect();
    Ok(Replay {
        game_id,
        logic: name,
        winner: outcome.winner,
        reason: outcome.reason.as_str().to_string(),
        phase_lengths: phase_lengths(trace),
        examples,
    })
}

pub fn phase_lengths(trace: &Trace) -> [u32; 2] {
    [
        trace.moves_in(Phase::Construct).len() as u32,
        trace.moves_in(Phase::Prove).len() as u32,
    ]
}

/// Theorem handed to the prover, if the trace reached a handover.
pub fn frozen_theorem(trace: &Trace) -> Option<&Term> {
    trace
        .rows
        .iter()
        .find(|r| r.kind == TraceRowKind::Handover)
        .map(|r| &r.theorem)
}

/// Prover-phase states obtained by proving `theorem` with `moves`, checking
/// that the moves complete the proof.
pub fn proof_states(
    logic: Arc<LogicDef>,
    theorem: &Term,
    moves: &[usize],
    config: GameConfig,
) -> Result<Vec<GameState>, ReplayError> {
    let mut state = GameState::from_conjecture(logic, theorem, config)?;
    let mut states = Vec::with_capacity(moves.len());
    for (i, &m) in moves.iter().enumerate() {
        states.push(state.clone());
        match state.step(m)? {
            Step::Over(o) if o.reason == OutcomeReason::ProofComplete && i + 1 == moves.len() => return Ok(states),
            Step::Over(o) => return Err(ReplayError::AuxiliaryUnsound(Some(o))),
            Step::Continue(s) => state = s,
        }
    }
    Err(ReplayError::AuxiliaryUnsound(None))
}

/// Demonstration of how the prover could have proven the theorem of a game
/// it lost: the construction moves replayed on the frozen theorem, with
/// one-hot policy targets and no value loss.
pub fn make_auxiliary(
    logic: Arc<LogicDef>,
    game_id: u64,
    trace: &Trace,
    outcome: Outcome,
    config: GameConfig,
) -> Result<Replay, ReplayError> {
    let theorem = match (outcome.winner, frozen_theorem(trace)) {
        (Player::Adversary, Some(t)) => t.clone(),
        _ => return Err(ReplayError::NotProverLoss),
    };
    let moves = trace.moves_in(Phase::Construct);
    let n = logic.action_space();
    let name = logic.name.clone();
    let states = proof_states(logic, &theorem, &moves, config)?;
    let examples = states
        .iter()
        .zip(&moves)
        .map(|(s, &m)| {
            let mut policy_target = vec![0.0; n];
            policy_target[m] = 1.0;
            TrainExample {
                graph: encode_graph(s),
                policy_target,
                value_target: 0.0,
                value_weight: 0.0,
                part: Part::Auxiliary,
            }
        })
        .collect();
    Ok(Replay {
        game_id,
        logic: name,
        winner: Player::Prover,
        reason: OutcomeReason::ProofComplete.as_str().to_string(),
        phase_lengths: [0, moves.len() as u32],
        examples,
    })
}
