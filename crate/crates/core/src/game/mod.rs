//! The two-phase theorem-construction game.
//!
//! The adversary starts from the goal template and resolves goals backwards
//! with the logic's rules. Once its goal list is empty the tracked theorem is
//! frozen (remaining variables become fresh constants) and the prover has to
//! prove it with the same rules. A failed unification loses for the mover.
//! All values exchanged with the search are prover-centric.

mod trace;

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::LogicDef;
use crate::term::{freshen_to_constants, unify_with, Renamer, Substitution, Term, VarBank};

pub use trace::{verify_trace, Playout, Trace, TraceError, TraceRow, TraceRowKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Adversary,
    Prover,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Adversary => Player::Prover,
            Player::Prover => Player::Adversary,
        }
    }

    /// +1 for the prover, -1 for the adversary.
    pub fn sign(self) -> f64 {
        match self {
            Player::Prover => 1.0,
            Player::Adversary => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Player::Adversary => "adversary",
            Player::Prover => "prover",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Construct,
    Prove,
}

impl Phase {
    pub fn mover(self) -> Player {
        match self {
            Phase::Construct => Player::Adversary,
            Phase::Prove => Player::Prover,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Construct => "construct",
            Phase::Prove => "prove",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutcomeReason {
    ProofComplete,
    UnificationFailed,
    MoveLimit,
    ConstructionFailed,
}

impl OutcomeReason {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeReason::ProofComplete => "proof_complete",
            OutcomeReason::UnificationFailed => "unification_failed",
            OutcomeReason::MoveLimit => "move_limit",
            OutcomeReason::ConstructionFailed => "construction_failed",
        }
    }

    pub fn parse(s: &str) -> Option<OutcomeReason> {
        [
            OutcomeReason::ProofComplete,
            OutcomeReason::UnificationFailed,
            OutcomeReason::MoveLimit,
            OutcomeReason::ConstructionFailed,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub winner: Player,
    pub reason: OutcomeReason,
}

impl Outcome {
    /// Prover-centric reward.
    pub fn reward(&self) -> f64 {
        self.winner.sign()
    }

    /// Outcome of the mover losing in `phase`. Every adversary failure counts
    /// as a failed construction.
    fn loss_for(phase: Phase, prover_reason: OutcomeReason) -> Outcome {
        match phase {
            Phase::Construct => Outcome {
                winner: Player::Prover,
                reason: OutcomeReason::ConstructionFailed,
            },
            Phase::Prove => Outcome {
                winner: Player::Adversary,
                reason: prover_reason,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameConfig {
    /// A phase may contain at most this many moves; a move that reaches the
    /// cap without emptying the goal list loses for the mover.
    pub max_moves_per_phase: u32,
    /// Restrict actions to rules whose head unifies with the first goal. A
    /// state without such a rule is then lost for the mover.
    pub filter_legal: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            max_moves_per_phase: 64,
            filter_legal: true,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("rule index {index} out of range (action space {size})")]
    RuleIndex { index: usize, size: usize },
    #[error("handover requires the construction phase with an empty goal list")]
    Handover,
    #[error("conjecture is not ground: {0}")]
    NonGround(String),
    #[error("the game is already waiting for handover")]
    AwaitingHandover,
    #[error("move cap must be at least 1")]
    ZeroMoveCap,
}

/// A non-terminal game position. Immutable: moves produce new states.
#[derive(Clone, Debug)]
pub struct GameState {
    logic: Arc<LogicDef>,
    config: GameConfig,
    phase: Phase,
    goals: Vec<Term>,
    theorem: Term,
    bank: VarBank,
    moves_in_phase: u32,
    legal: Arc<[usize]>,
}

/// Result of a move.
#[derive(Clone, Debug)]
pub enum Step {
    Continue(GameState),
    Over(Outcome),
}

impl GameState {
    /// Construction-phase start: the only goal is a fresh copy of the goal
    /// template, and the theorem tracks that same term.
    pub fn initial(logic: Arc<LogicDef>, config: GameConfig) -> Result<GameState, GameError> {
        if config.max_moves_per_phase == 0 {
            return Err(GameError::ZeroMoveCap);
        }
        let mut bank = VarBank::new();
        let goal = Renamer::new(&mut bank).rename(&logic.goal_template);
        Ok(GameState::build(logic, config, Phase::Construct, vec![goal.clone()], goal, bank, 0))
    }

    /// Prove-phase start from a ground conjecture, skipping construction.
    pub fn from_conjecture(logic: Arc<LogicDef>, conjecture: &Term, config: GameConfig) -> Result<GameState, GameError> {
        if config.max_moves_per_phase == 0 {
            return Err(GameError::ZeroMoveCap);
        }
        if !conjecture.is_ground() {
            return Err(GameError::NonGround(conjecture.to_string()));
        }
        Ok(GameState::build(
            logic,
            config,
            Phase::Prove,
            vec![conjecture.clone()],
            conjecture.clone(),
            VarBank::new(),
            0,
        ))
    }

    fn build(
        logic: Arc<LogicDef>,
        config: GameConfig,
        phase: Phase,
        goals: Vec<Term>,
        theorem: Term,
        bank: VarBank,
        moves_in_phase: u32,
    ) -> GameState {
        let legal: Arc<[usize]> = match goals.first() {
            Some(goal) if config.filter_legal => unifiable_rules(&logic, goal).into(),
            Some(_) => (0..logic.action_space()).collect(),
            None => Arc::from([]),
        };
        GameState {
            logic,
            config,
            phase,
            goals,
            theorem,
            bank,
            moves_in_phase,
            legal,
        }
    }

    pub fn logic(&self) -> &Arc<LogicDef> {
        &self.logic
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn mover(&self) -> Player {
        self.phase.mover()
    }

    pub fn goals(&self) -> &[Term] {
        &self.goals
    }

    pub fn theorem(&self) -> &Term {
        &self.theorem
    }

    pub fn moves_in_phase(&self) -> u32 {
        self.moves_in_phase
    }

    pub fn bank(&self) -> &VarBank {
        &self.bank
    }

    /// Construction finished, handover pending.
    pub fn awaiting_handover(&self) -> bool {
        self.phase == Phase::Construct && self.goals.is_empty()
    }

    /// Actions the mover may choose: every rule when filtering is off,
    /// otherwise the rules whose head unifies with the first goal.
    pub fn legal_actions(&self) -> &[usize] {
        &self.legal
    }

    /// Outcome that holds before any move is made: a filtered state with no
    /// legal action is lost for the mover.
    pub fn stuck_outcome(&self) -> Option<Outcome> {
        (!self.goals.is_empty() && self.legal.is_empty())
            .then(|| Outcome::loss_for(self.phase, OutcomeReason::UnificationFailed))
    }

    /// Resolves the first goal with rule `index`. Handover is left to the
    /// caller: a construction that empties its goals returns a state for
    /// which `awaiting_handover` holds.
    pub fn apply_action(&self, index: usize) -> Result<Step, GameError> {
        let size = self.logic.action_space();
        if index >= size {
            return Err(GameError::RuleIndex { index, size });
        }
        if self.awaiting_handover() {
            return Err(GameError::AwaitingHandover);
        }
        let mut bank = self.bank.clone();
        let rule = self.logic.rules[index].rename_apart(&mut bank);
        let Some(sigma) = unify_with(&rule.head, &self.goals[0], &Substitution::new(), self.logic.occurs_check) else {
            return Ok(Step::Over(Outcome::loss_for(self.phase, OutcomeReason::UnificationFailed)));
        };
        let goals: Vec<Term> = rule
            .body
            .iter()
            .chain(&self.goals[1..])
            .map(|t| sigma.apply(t))
            .collect();
        let theorem = sigma.apply(&self.theorem);
        let moves = self.moves_in_phase + 1;
        if goals.is_empty() && self.phase == Phase::Prove {
            return Ok(Step::Over(Outcome {
                winner: Player::Prover,
                reason: OutcomeReason::ProofComplete,
            }));
        }
        if !goals.is_empty() && moves >= self.config.max_moves_per_phase {
            return Ok(Step::Over(Outcome::loss_for(self.phase, OutcomeReason::MoveLimit)));
        }
        let next = GameState::build(self.logic.clone(), self.config, self.phase, goals, theorem, bank, moves);
        match next.stuck_outcome() {
            Some(o) => Ok(Step::Over(o)),
            None => Ok(Step::Continue(next)),
        }
    }

    /// Freezes the constructed theorem and hands it to the prover.
    pub fn handover(&self) -> Result<GameState, GameError> {
        if !self.awaiting_handover() {
            return Err(GameError::Handover);
        }
        let mut bank = self.bank.clone();
        let theorem = freshen_to_constants(&self.theorem, &mut bank);
        Ok(GameState::build(
            self.logic.clone(),
            self.config,
            Phase::Prove,
            vec![theorem.clone()],
            theorem,
            bank,
            0,
        ))
    }

    /// `apply_action` followed by handover when construction completes.
    /// This is the transition the search and the playout drivers use.
    pub fn step(&self, index: usize) -> Result<Step, GameError> {
        match self.apply_action(index)? {
            Step::Continue(s) if s.awaiting_handover() => {
                let next = s.handover()?;
                match next.stuck_outcome() {
                    Some(o) => Ok(Step::Over(o)),
                    None => Ok(Step::Continue(next)),
                }
            }
            other => Ok(other),
        }
    }
}

/// Indices of rules whose head unifies with `goal`. Rule variables live in a
/// namespace game terms never use, so no renaming is needed for the test.
pub fn unifiable_rules(logic: &LogicDef, goal: &Term) -> Vec<usize> {
    let empty = Substitution::new();
    logic
        .rules
        .iter()
        .enumerate()
        .filter(|(_, r)| unify_with(&r.head, goal, &empty, logic.occurs_check).is_some())
        .map(|(i, _)| i)
        .collect()
}

/// A finished random construction.
#[derive(Clone, Debug)]
pub struct Construction {
    /// Adversary moves in order.
    pub moves: Vec<usize>,
    /// Construction-phase states before each move.
    pub states: Vec<GameState>,
    /// Frozen theorem when construction succeeded.
    pub theorem: Option<Term>,
}

/// Plays the construction phase with uniformly random legal moves.
pub fn random_construction<R: Rng + ?Sized>(
    logic: Arc<LogicDef>,
    config: GameConfig,
    rng: &mut R,
) -> Result<Construction, GameError> {
    let mut state = GameState::initial(logic, config)?;
    let mut moves = Vec::new();
    let mut states = Vec::new();
    loop {
        if state.stuck_outcome().is_some() {
            return Ok(Construction { moves, states, theorem: None });
        }
        let &action = state.legal_actions().choose(rng).expect("non-stuck state has a legal action");
        moves.push(action);
        states.push(state.clone());
        match state.apply_action(action)? {
            Step::Over(_) => return Ok(Construction { moves, states, theorem: None }),
            Step::Continue(s) if s.awaiting_handover() => {
                let frozen = s.handover()?;
                return Ok(Construction {
                    moves,
                    states,
                    theorem: Some(frozen.theorem().clone()),
                });
            }
            Step::Continue(s) => state = s,
        }
    }
}

/// Plays `moves` from `state` with automatic handover, returning the
/// outcome if the game ends on the way.
pub fn replay_moves(state: &GameState, moves: &[usize]) -> Result<Option<Outcome>, GameError> {
    let mut state = state.clone();
    for &m in moves {
        match state.step(m)? {
            Step::Over(o) => return Ok(Some(o)),
            Step::Continue(s) => state = s,
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::bundled_logic;
    use crate::term::parse_term;

    fn mini() -> Arc<LogicDef> {
        bundled_logic("fig2-mini").unwrap().into_shared()
    }

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn cont(step: Step) -> GameState {
        match step {
            Step::Continue(s) => s,
            Step::Over(o) => panic!("unexpected end {o:?}"),
        }
    }

    #[test]
    fn initial_state_is_a_bare_variable() {
        let s = GameState::initial(mini(), GameConfig::default()).unwrap();
        assert_eq!(s.phase(), Phase::Construct);
        assert_eq!(s.mover(), Player::Adversary);
        assert_eq!(s.goals().len(), 1);
        assert!(s.goals()[0].is_var());
        assert_eq!(&s.goals()[0], s.theorem());
        assert_eq!(s.legal_actions(), &[0, 1, 2, 3, 4, 5]);
        let other = GameState::initial(mini(), GameConfig::default()).unwrap();
        assert_ne!(s.goals()[0], other.goals()[0]);
    }

    #[test]
    fn first_construction_move() {
        let s = GameState::initial(mini(), GameConfig::default()).unwrap();
        let s = cont(s.apply_action(1).unwrap());
        assert!(crate::term::alpha_equivalent(
            &[s.goals()[0].clone(), s.theorem().clone()],
            &[t("tee(comma(A, B), C)"), t("tee(B, implies(A, C))")]
        ));
        assert_eq!(s.moves_in_phase(), 1);
    }

    #[test]
    fn failed_prover_unification_loses() {
        let s = GameState::from_conjecture(mini(), &t("tee(comma(and(d, false), b), false)"), GameConfig::default()).unwrap();
        match s.apply_action(2).unwrap() {
            Step::Over(o) => assert_eq!(
                o,
                Outcome {
                    winner: Player::Adversary,
                    reason: OutcomeReason::UnificationFailed
                }
            ),
            Step::Continue(_) => panic!("rule 3 cannot apply"),
        }
        // The axiom needs `false` as first hypothesis; only the three
        // elimination rules and ex falso fit this goal.
        assert_eq!(s.legal_actions(), &[3, 4, 5]);
        let unfiltered = GameConfig {
            filter_legal: false,
            ..GameConfig::default()
        };
        let s = GameState::from_conjecture(mini(), &t("tee(comma(and(d, false), b), false)"), unfiltered).unwrap();
        assert_eq!(s.legal_actions().len(), 6);
    }

    #[test]
    fn adversary_failure_is_construction_failure() {
        let s = GameState::initial(mini(), GameConfig::default()).unwrap();
        let stuck = GameState::build(s.logic.clone(), s.config, Phase::Construct, vec![t("tee(nil, p)")], t("x"), s.bank.clone(), 1);
        match stuck.apply_action(0).unwrap() {
            Step::Over(o) => assert_eq!(
                o,
                Outcome {
                    winner: Player::Prover,
                    reason: OutcomeReason::ConstructionFailed
                }
            ),
            Step::Continue(_) => panic!("axiom needs a hypothesis"),
        }
    }

    #[test]
    fn move_cap_ends_phase() {
        let cfg = GameConfig {
            max_moves_per_phase: 2,
            filter_legal: true,
        };
        let s = GameState::from_conjecture(mini(), &t("tee(b, implies(and(d, false), and(d, e)))"), cfg).unwrap();
        let s = cont(s.apply_action(1).unwrap());
        match s.apply_action(5).unwrap() {
            Step::Over(o) => assert_eq!(
                o,
                Outcome {
                    winner: Player::Adversary,
                    reason: OutcomeReason::MoveLimit
                }
            ),
            _ => panic!("cap reached"),
        }
        let cfg = GameConfig {
            max_moves_per_phase: 1,
            filter_legal: true,
        };
        let s = GameState::from_conjecture(mini(), &t("tee(comma(p, nil), p)"), cfg).unwrap();
        assert!(matches!(s.apply_action(0).unwrap(), Step::Over(o) if o.reason == OutcomeReason::ProofComplete));
    }

    #[test]
    fn handover_freezes_variables() {
        let s = GameState::initial(mini(), GameConfig::default()).unwrap();
        assert_eq!(s.handover().unwrap_err(), GameError::Handover);
        let s = cont(s.apply_action(0).unwrap());
        assert!(s.awaiting_handover());
        let p = s.handover().unwrap();
        assert_eq!(p.phase(), Phase::Prove);
        assert_eq!(p.mover(), Player::Prover);
        assert_eq!(p.moves_in_phase(), 0);
        assert!(p.goals()[0].is_ground());
        assert_eq!(p.goals()[0].to_string(), "tee(comma(c_0, c_1), c_0)");
        assert_eq!(s.apply_action(0).unwrap_err(), GameError::AwaitingHandover);
    }

    #[test]
    fn conjecture_must_be_ground() {
        assert!(matches!(
            GameState::from_conjecture(mini(), &t("tee(X, p)"), GameConfig::default()),
            Err(GameError::NonGround(_))
        ));
        let bad = GameConfig {
            max_moves_per_phase: 0,
            filter_legal: true,
        };
        assert_eq!(GameState::initial(mini(), bad).unwrap_err(), GameError::ZeroMoveCap);
    }

    #[test]
    fn index_out_of_range_is_an_error() {
        let s = GameState::initial(mini(), GameConfig::default()).unwrap();
        assert_eq!(s.apply_action(6).unwrap_err(), GameError::RuleIndex { index: 6, size: 6 });
    }

    #[test]
    fn apply_does_not_mutate() {
        let s = GameState::initial(mini(), GameConfig::default()).unwrap();
        let before = (s.goals().to_vec(), s.theorem().clone(), s.moves_in_phase());
        let _ = s.apply_action(2).unwrap();
        assert_eq!(before, (s.goals().to_vec(), s.theorem().clone(), s.moves_in_phase()));
    }

    #[test]
    fn sokoban_template_is_instantiated() {
        let logic = bundled_logic("sokoban-6x6").unwrap().into_shared();
        let s = GameState::initial(logic, GameConfig::default()).unwrap();
        let g = &s.goals()[0];
        assert_eq!(&*g.functor().unwrap().0.name(), "solvable");
        assert_eq!(s.theorem(), g);
        assert!(g.args()[0].is_var());
    }
}
