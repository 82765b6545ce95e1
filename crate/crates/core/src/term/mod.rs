//! First-order terms, substitutions and unification.
//!
//! A [`Term`] is either a variable or an atom applied to an ordered list of
//! subterms. Everything the game manipulates (sequents, boards, clause
//! matrices, inference rules) is built from terms, and every move is a
//! unification between a rule head and the first open goal.

mod bank;
mod subst;
mod symbol;
mod syntax;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

pub use bank::{freshen_to_constants, is_fresh_constant_name, Renamer, VarBank};
pub use subst::{unify, unify_with, Substitution};
pub use symbol::Symbol;
pub use syntax::{format_term, parse_term, SyntaxError, TokenStream, Token};

/// Variable identifier.
///
/// Namespace 0 holds named variables as they appear in source text (the
/// index is the interned name). Every other namespace belongs to a single
/// [`VarBank`] and is never reused within a process.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    ns: u32,
    idx: u32,
}

impl Var {
    pub fn named(name: &str) -> Var {
        Var {
            ns: 0,
            idx: Symbol::intern(name).id(),
        }
    }

    pub(crate) fn fresh(ns: u32, idx: u32) -> Var {
        debug_assert!(ns > 0);
        Var { ns, idx }
    }

    pub fn is_named(self) -> bool {
        self.ns == 0
    }

    pub fn namespace(self) -> u32 {
        self.ns
    }

    pub fn index(self) -> u32 {
        self.idx
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ns == 0 {
            // named variables keep their interned source name
            let name = syntax::named_var_name(self.idx);
            f.write_str(&name)
        } else {
            write!(f, "_G{}_{}", self.ns, self.idx)
        }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    App(Symbol, Arc<[Term]>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::named(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::App(Symbol::intern(name), Arc::from(Vec::new()))
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(Symbol::intern(name), Arc::from(args))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<Var> {
        match self {
            Term::Var(v) => Some(*v),
            Term::App(..) => None,
        }
    }

    /// Functor and arity of a compound (or constant).
    pub fn functor(&self) -> Option<(Symbol, usize)> {
        match self {
            Term::Var(_) => None,
            Term::App(f, args) => Some((*f, args.len())),
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Var(_) => &[],
            Term::App(_, args) => args,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Number of symbol and variable occurrences.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn contains_var(&self, v: Var) -> bool {
        match self {
            Term::Var(w) => *w == v,
            Term::App(_, args) => args.iter().any(|a| a.contains_var(v)),
        }
    }

    /// Distinct variables in order of first occurrence (depth-first, left to right).
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        self.collect_vars(&mut out, &mut seen);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<Var>, seen: &mut HashSet<Var>) {
        match self {
            Term::Var(v) => {
                if seen.insert(*v) {
                    out.push(*v);
                }
            }
            Term::App(_, args) => {
                for a in args.iter() {
                    a.collect_vars(out, seen);
                }
            }
        }
    }

    /// Structural map over variables.
    pub fn map_vars(&self, f: &mut impl FnMut(Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(*v),
            Term::App(s, args) => {
                if args.is_empty() {
                    return self.clone();
                }
                let new: Vec<Term> = args.iter().map(|a| a.map_vars(f)).collect();
                Term::App(*s, Arc::from(new))
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(s, args) => {
                write!(f, "{s}")?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// True when `a` and `b` are equal up to a consistent bijective renaming of
/// variables.
pub fn alpha_equivalent(a: &[Term], b: &[Term]) -> bool {
    use std::collections::HashMap;
    fn go(a: &Term, b: &Term, fw: &mut HashMap<Var, Var>, bw: &mut HashMap<Var, Var>) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                let ok_f = *fw.entry(*x).or_insert(*y) == *y;
                let ok_b = *bw.entry(*y).or_insert(*x) == *x;
                ok_f && ok_b
            }
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| go(x, y, fw, bw))
            }
            _ => false,
        }
    }
    let mut fw = HashMap::new();
    let mut bw = HashMap::new();
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| go(x, y, &mut fw, &mut bw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vars_in_first_occurrence_order() {
        let t = parse_term("f(Y, g(X, Y), Z)").unwrap();
        let names: Vec<String> = t.vars().iter().map(|v| v.to_string()).collect();
        assert_eq!(names, ["Y", "X", "Z"]);
    }

    #[test]
    fn alpha_equivalence_is_bijective() {
        let a = [parse_term("f(X, Y)").unwrap()];
        let b = [parse_term("f(A, B)").unwrap()];
        let c = [parse_term("f(A, A)").unwrap()];
        assert!(alpha_equivalent(&a, &b));
        assert!(!alpha_equivalent(&a, &c));
        assert!(!alpha_equivalent(&c, &a));
    }

    #[test]
    fn same_atom_different_arity_is_distinct() {
        let a = parse_term("f(a)").unwrap();
        let b = parse_term("f(a, a)").unwrap();
        assert_ne!(a.functor(), b.functor());
    }
}
