//! Logics as ordered inference-rule lists, plus problem sets.

mod bundled;
mod format;
pub mod sokoban;

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

use crate::term::{is_fresh_constant_name, Renamer, SyntaxError, Term, VarBank};

pub use bundled::{bundled_logic, bundled_logic_names, bundled_logics, bundled_problems};
pub use format::{format_logic, format_problems, load_logic, load_problems, parse_logic, parse_problems};
pub use sokoban::generate_sokoban_logic;

#[derive(Debug, Error)]
pub enum LogicError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("rule `{rule}`: {message}")]
    InvalidRule { rule: String, message: String },
    #[error("logic `{0}` has no rules")]
    NoRules(String),
    #[error("goal template must contain exactly one distinct variable, found {0}")]
    GoalTemplate(usize),
    #[error("problem `{0}`: conjecture is not ground")]
    NonGroundConjecture(String),
    #[error("duplicate problem id `{0}`")]
    DuplicateProblem(String),
    #[error("unknown logic `{0}`")]
    UnknownLogic(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A head term and body terms sharing variables. An empty body is an axiom.
#[derive(Clone, Debug, PartialEq)]
pub struct InferenceRule {
    pub name: Option<String>,
    pub head: Term,
    pub body: Vec<Term>,
}

impl InferenceRule {
    pub fn new(name: impl Into<String>, head: Term, body: Vec<Term>) -> Self {
        InferenceRule {
            name: Some(name.into()),
            head,
            body,
        }
    }

    pub fn is_axiom(&self) -> bool {
        self.body.is_empty()
    }

    /// Copy of the rule with every variable replaced, consistently, by a
    /// fresh variable from `bank`.
    pub fn rename_apart(&self, bank: &mut VarBank) -> InferenceRule {
        let mut r = Renamer::new(bank);
        InferenceRule {
            name: self.name.clone(),
            head: r.rename(&self.head),
            body: self.body.iter().map(|b| r.rename(b)).collect(),
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| "<unnamed>".to_string())
    }
}

impl std::fmt::Display for InferenceRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" <- ")?;
            for (i, b) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(" , ")?;
                }
                write!(f, "{b}")?;
            }
        }
        Ok(())
    }
}

/// A logic: its ordered rules double as the action space. Position `i` of a
/// policy vector always refers to `rules[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogicDef {
    pub name: String,
    pub rules: Vec<InferenceRule>,
    pub occurs_check: bool,
    pub goal_template: Term,
}

impl LogicDef {
    /// Builds and validates a logic.
    pub fn new(
        name: impl Into<String>,
        rules: Vec<InferenceRule>,
        occurs_check: bool,
        goal_template: Term,
    ) -> Result<LogicDef, LogicError> {
        let def = LogicDef {
            name: name.into(),
            rules,
            occurs_check,
            goal_template,
        };
        def.validate()?;
        Ok(def)
    }

    pub fn action_space(&self) -> usize {
        self.rules.len()
    }

    pub fn rule_index(&self, name: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.name.as_deref() == Some(name))
    }

    pub fn validate(&self) -> Result<(), LogicError> {
        if self.rules.is_empty() {
            return Err(LogicError::NoRules(self.name.clone()));
        }
        let n_vars = self.goal_template.vars().len();
        if n_vars != 1 {
            return Err(LogicError::GoalTemplate(n_vars));
        }
        let mut names = HashSet::new();
        for rule in &self.rules {
            let invalid = |message: &str| LogicError::InvalidRule {
                rule: rule.label(),
                message: message.to_string(),
            };
            if let Some(name) = &rule.name {
                if !names.insert(name.as_str()) {
                    return Err(invalid("duplicate rule name"));
                }
            }
            if rule.head.is_var() {
                return Err(invalid("head must be a compound term"));
            }
            for t in std::iter::once(&rule.head).chain(&rule.body) {
                if t.vars().iter().any(|v| !v.is_named()) {
                    return Err(invalid("rules may only contain named variables"));
                }
                if let Some(sym) = first_reserved_symbol(t) {
                    return Err(invalid(&format!("symbol `{sym}` is reserved for fresh constants")));
                }
            }
        }
        Ok(())
    }

    pub fn into_shared(self) -> Arc<LogicDef> {
        Arc::new(self)
    }
}

fn first_reserved_symbol(t: &Term) -> Option<String> {
    match t {
        Term::Var(_) => None,
        Term::App(f, args) => {
            let name = f.name();
            if args.is_empty() && is_fresh_constant_name(&name) {
                return Some(name.to_string());
            }
            args.iter().find_map(first_reserved_symbol)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub id: String,
    pub conjecture: Term,
}

/// Named list of ground conjectures with unique ids.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSet {
    pub name: String,
    pub problems: Vec<Problem>,
}

impl ProblemSet {
    pub fn new(name: impl Into<String>, problems: Vec<Problem>) -> Result<ProblemSet, LogicError> {
        let mut seen = HashSet::new();
        for p in &problems {
            if !seen.insert(p.id.as_str()) {
                return Err(LogicError::DuplicateProblem(p.id.clone()));
            }
            if !p.conjecture.is_ground() {
                return Err(LogicError::NonGroundConjecture(p.id.clone()));
            }
        }
        Ok(ProblemSet {
            name: name.into(),
            problems,
        })
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    /// Problems whose id starts with `tier` (for example `easy`).
    pub fn tier<'a>(&'a self, tier: &'a str) -> impl Iterator<Item = &'a Problem> + 'a {
        self.problems.iter().filter(move |p| p.id.starts_with(tier))
    }
}
