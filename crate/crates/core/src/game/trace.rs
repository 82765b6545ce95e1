//! Playout traces.
//!
//! A trace lists the goal list and tracked theorem after every transition,
//! in the same layout as a proof table:
//!
//! ```text
//! trace 1
//! logic fig2-mini
//! start construct | _G3_0 | _G3_0
//! move 1 imp_r | tee(comma(_G3_1, _G3_2), _G3_3) | tee(_G3_2, implies(_G3_1, _G3_3))
//! handover | tee(c_0, ...) | tee(c_0, ...)
//! move 0 ax |  | tee(c_0, ...)
//! outcome prover proof_complete
//! ```
//!
//! `move` carries the 0-based rule index followed by the rule name. Goals are
//! separated by ` ; `. The row of a game-ending move has no goals.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::{GameConfig, GameError, GameState, Outcome, OutcomeReason, Phase, Player, Step};
use crate::logic::LogicDef;
use crate::term::{alpha_equivalent, parse_term, Term};

const HEADER: &str = "trace 1";

#[derive(Clone, Debug, PartialEq)]
pub enum TraceRowKind {
    Start(Phase),
    Move { phase: Phase, rule: usize },
    Handover,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub kind: TraceRowKind,
    pub goals: Vec<Term>,
    pub theorem: Term,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub logic: String,
    pub rows: Vec<TraceRow>,
    pub outcome: Option<Outcome>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trace is for logic `{found}`, expected `{expected}`")]
    Logic { expected: String, found: String },
    #[error("trace row {row}: {message}")]
    Mismatch { row: usize, message: String },
    #[error(transparent)]
    Game(#[from] GameError),
}

impl Trace {
    /// Rule indices of all moves, with the phase they were played in.
    pub fn moves(&self) -> Vec<(Phase, usize)> {
        self.rows
            .iter()
            .filter_map(|r| match r.kind {
                TraceRowKind::Move { phase, rule } => Some((phase, rule)),
                _ => None,
            })
            .collect()
    }

    pub fn moves_in(&self, phase: Phase) -> Vec<usize> {
        self.moves().into_iter().filter(|(p, _)| *p == phase).map(|(_, r)| r).collect()
    }

    pub fn format(&self, logic: &LogicDef) -> String {
        let mut out = format!("{HEADER}\nlogic {}\n", self.logic);
        for row in &self.rows {
            let label = match &row.kind {
                TraceRowKind::Start(p) => format!("start {}", p.as_str()),
                TraceRowKind::Move { rule, .. } => {
                    let name = logic.rules.get(*rule).map(|r| r.label()).unwrap_or_default();
                    format!("move {rule} {name}")
                }
                TraceRowKind::Handover => "handover".to_string(),
            };
            let goals: Vec<String> = row.goals.iter().map(|g| g.to_string()).collect();
            out.push_str(&format!("{label} | {} | {}\n", goals.join(" ; "), row.theorem));
        }
        if let Some(o) = &self.outcome {
            out.push_str(&format!("outcome {} {}\n", o.winner.as_str(), o.reason.as_str()));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Trace, TraceError> {
        let err = |line: usize, message: &str| TraceError::Parse {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        match lines.next() {
            Some((_, HEADER)) => {}
            _ => return Err(err(1, "expected `trace 1` header")),
        }
        let logic = match lines.next() {
            Some((_, l)) if l.starts_with("logic ") => l[6..].trim().to_string(),
            _ => return Err(err(2, "expected `logic <name>`")),
        };
        let mut rows = Vec::new();
        let mut outcome = None;
        let mut phase = Phase::Construct;
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            if outcome.is_some() {
                return Err(err(n, "content after outcome line"));
            }
            if let Some(rest) = line.strip_prefix("outcome ") {
                let mut parts = rest.split_whitespace();
                let winner = match parts.next() {
                    Some("prover") => Player::Prover,
                    Some("adversary") => Player::Adversary,
                    _ => return Err(err(n, "unknown winner")),
                };
                let reason = parts
                    .next()
                    .and_then(OutcomeReason::parse)
                    .ok_or_else(|| err(n, "unknown outcome reason"))?;
                outcome = Some(Outcome { winner, reason });
                continue;
            }
            let fields: Vec<&str> = line.split(" | ").collect();
            let [label, goals, theorem] = fields[..] else {
                return Err(err(n, "expected `<label> | <goals> | <theorem>`"));
            };
            let words: Vec<&str> = label.split_whitespace().collect();
            let kind = match words[..] {
                ["start", p] => {
                    phase = match p {
                        "construct" => Phase::Construct,
                        "prove" => Phase::Prove,
                        _ => return Err(err(n, "unknown phase")),
                    };
                    TraceRowKind::Start(phase)
                }
                ["move", idx, ..] => TraceRowKind::Move {
                    phase,
                    rule: idx.parse().map_err(|_| err(n, "bad rule index"))?,
                },
                ["handover"] => {
                    phase = Phase::Prove;
                    TraceRowKind::Handover
                }
                _ => return Err(err(n, "unknown row label")),
            };
            let parse = |s: &str| parse_term(s.trim()).map_err(|e| err(n, &e.to_string()));
            let goals = if goals.trim().is_empty() {
                Vec::new()
            } else {
                goals.split(" ; ").map(parse).collect::<Result<_, _>>()?
            };
            rows.push(TraceRow {
                kind,
                goals,
                theorem: parse(theorem)?,
            });
        }
        if !matches!(rows.first().map(|r| &r.kind), Some(TraceRowKind::Start(_))) {
            return Err(err(3, "trace must begin with a start row"));
        }
        Ok(Trace { logic, rows, outcome })
    }
}

/// Drives a game while recording its trace.
#[derive(Clone, Debug)]
pub struct Playout {
    state: Option<GameState>,
    trace: Trace,
}

impl Playout {
    pub fn new(state: GameState) -> Playout {
        let trace = Trace {
            logic: state.logic().name.clone(),
            rows: vec![TraceRow {
                kind: TraceRowKind::Start(state.phase()),
                goals: state.goals().to_vec(),
                theorem: state.theorem().clone(),
            }],
            outcome: state.stuck_outcome(),
        };
        let state = trace.outcome.is_none().then_some(state);
        Playout { state, trace }
    }

    /// Current state, `None` once the game is over.
    pub fn state(&self) -> Option<&GameState> {
        self.state.as_ref()
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.trace.outcome
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Plays one move (with automatic handover) and records it.
    pub fn play(&mut self, rule: usize) -> Result<Option<Outcome>, GameError> {
        let Some(state) = self.state.take() else {
            return Ok(self.trace.outcome);
        };
        let phase = state.phase();
        let kind = TraceRowKind::Move { phase, rule };
        match state.apply_action(rule) {
            Err(e) => {
                self.state = Some(state);
                Err(e)
            }
            Ok(Step::Over(o)) => {
                self.trace.rows.push(TraceRow {
                    kind,
                    goals: Vec::new(),
                    theorem: state.theorem().clone(),
                });
                self.trace.outcome = Some(o);
                Ok(Some(o))
            }
            Ok(Step::Continue(next)) => {
                self.trace.rows.push(TraceRow {
                    kind,
                    goals: next.goals().to_vec(),
                    theorem: next.theorem().clone(),
                });
                let next = if next.awaiting_handover() {
                    let handed = next.handover()?;
                    self.trace.rows.push(TraceRow {
                        kind: TraceRowKind::Handover,
                        goals: handed.goals().to_vec(),
                        theorem: handed.theorem().clone(),
                    });
                    handed
                } else {
                    next
                };
                if let Some(o) = next.stuck_outcome() {
                    self.trace.outcome = Some(o);
                    return Ok(Some(o));
                }
                self.state = Some(next);
                Ok(None)
            }
        }
    }
}

fn same_row(row: &TraceRow, goals: &[Term], theorem: &Term) -> bool {
    let mut a = row.goals.clone();
    a.push(row.theorem.clone());
    let mut b = goals.to_vec();
    b.push(theorem.clone());
    alpha_equivalent(&a, &b)
}

/// Replays a trace through the engine and checks every recorded row up to
/// variable renaming. Returns the outcome the replay reached, which must
/// equal the recorded one when present.
pub fn verify_trace(logic: Arc<LogicDef>, trace: &Trace, config: GameConfig) -> Result<Option<Outcome>, TraceError> {
    if trace.logic != logic.name {
        return Err(TraceError::Logic {
            expected: logic.name.clone(),
            found: trace.logic.clone(),
        });
    }
    let mismatch = |row: usize, message: String| TraceError::Mismatch { row, message };
    let start = &trace.rows[0];
    let state = match start.kind {
        TraceRowKind::Start(Phase::Construct) => GameState::initial(logic, config)?,
        TraceRowKind::Start(Phase::Prove) => {
            let [conjecture] = &start.goals[..] else {
                return Err(mismatch(0, "prove start needs exactly one goal".into()));
            };
            GameState::from_conjecture(logic, conjecture, config)?
        }
        _ => return Err(mismatch(0, "missing start row".into())),
    };
    if !same_row(start, state.goals(), state.theorem()) {
        return Err(mismatch(0, "start state differs".into()));
    }
    let mut playout = Playout::new(state);
    let mut replayed = 1;
    for (i, row) in trace.rows.iter().enumerate().skip(1) {
        if i < replayed {
            continue;
        }
        let TraceRowKind::Move { phase, rule } = row.kind else {
            return Err(mismatch(i, "handover without a completed construction".into()));
        };
        match playout.state() {
            Some(s) if s.phase() == phase => {}
            Some(_) => return Err(mismatch(i, "move recorded in the wrong phase".into())),
            None => return Err(mismatch(i, "move after the game ended".into())),
        }
        playout.play(rule)?;
        let produced = &playout.trace().rows;
        for (j, got) in produced.iter().enumerate().skip(replayed) {
            let Some(want) = trace.rows.get(j) else {
                return Err(mismatch(j, "trace ends early".into()));
            };
            if want.kind != got.kind || !same_row(want, &got.goals, &got.theorem) {
                return Err(mismatch(j, format!("expected `{}`", format_row(got))));
            }
        }
        replayed = produced.len();
    }
    if replayed != trace.rows.len() {
        return Err(mismatch(replayed, "unexpected extra rows".into()));
    }
    let got = playout.outcome();
    if trace.outcome.is_some() && trace.outcome != got {
        return Err(mismatch(trace.rows.len(), format!("recorded outcome differs from replay ({got:?})")));
    }
    Ok(got)
}

fn format_row(row: &TraceRow) -> String {
    let goals: Vec<String> = row.goals.iter().map(|g| g.to_string()).collect();
    format!("{} | {}", goals.join(" ; "), row.theorem)
}

impl fmt::Display for TraceRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_row(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::bundled_logic;

    fn worked_playout() -> (Arc<LogicDef>, Playout) {
        let logic = bundled_logic("fig2-mini").unwrap().into_shared();
        let mut p = Playout::new(GameState::initial(logic.clone(), GameConfig::default()).unwrap());
        for rule in [1, 2, 3, 0, 5, 4, 0, 1, 5, 4, 0] {
            p.play(rule).unwrap();
        }
        (logic, p)
    }

    #[test]
    fn format_parse_verify() {
        let (logic, p) = worked_playout();
        let text = p.trace().format(&logic);
        let parsed = Trace::parse(&text).unwrap();
        assert_eq!(&parsed, p.trace());
        let o = verify_trace(logic, &parsed, GameConfig::default()).unwrap();
        assert_eq!(o.unwrap().reason, OutcomeReason::ProofComplete);
    }

    #[test]
    fn tampered_trace_is_rejected() {
        let (logic, p) = worked_playout();
        let text = p.trace().format(&logic);
        let tampered = text.replace("move 4 and_e2", "move 3 and_e1");
        let parsed = Trace::parse(&tampered).unwrap();
        assert!(verify_trace(logic.clone(), &parsed, GameConfig::default()).is_err());
        let tampered = text.replacen("and(c_1, c_2)", "and(c_1, c_1)", 1);
        assert_ne!(tampered, text);
        let parsed = Trace::parse(&tampered).unwrap();
        assert!(verify_trace(logic, &parsed, GameConfig::default()).is_err());
    }

    #[test]
    fn parse_errors() {
        assert!(Trace::parse("nope").is_err());
        assert!(Trace::parse("trace 1\nlogic x\nmove 0 a | p | p\n").is_err());
        assert!(Trace::parse("trace 1\nlogic x\nstart prove | p | p\noutcome nobody x\n").is_err());
    }
}
