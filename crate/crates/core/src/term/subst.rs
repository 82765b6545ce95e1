use std::collections::HashMap;
use std::sync::Arc;

use super::{Term, Var};

/// Triangular binding map. Bindings may refer to other bound variables;
/// they are dereferenced on read, so `apply` always yields the fully
/// resolved image.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Substitution {
    bindings: HashMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Raw (not dereferenced) binding of `v`.
    pub fn get(&self, v: Var) -> Option<&Term> {
        self.bindings.get(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.iter()
    }

    /// Adds a binding without any checks. Callers are responsible for the
    /// occurs condition.
    pub fn bind(&mut self, v: Var, t: Term) {
        self.bindings.insert(v, t);
    }

    /// Follows variable-to-variable and variable-to-term bindings until an
    /// unbound variable or a compound is reached.
    pub fn deref<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.bindings.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    /// Replaces bound variables recursively until no bound variable remains.
    ///
    /// A cyclic binding (only possible with the occurs check disabled) is
    /// left unexpanded at the point where the cycle closes.
    pub fn apply(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        let mut expanding = Vec::new();
        self.apply_inner(t, &mut expanding).unwrap_or_else(|| t.clone())
    }

    // Returns None when the term is unchanged so that shared subterms are
    // reused instead of copied.
    fn apply_inner(&self, t: &Term, expanding: &mut Vec<Var>) -> Option<Term> {
        match t {
            Term::Var(v) => {
                let bound = self.bindings.get(v)?;
                if expanding.contains(v) {
                    return None;
                }
                expanding.push(*v);
                let out = self.apply_inner(bound, expanding).unwrap_or_else(|| bound.clone());
                expanding.pop();
                Some(out)
            }
            Term::App(f, args) => {
                let mut changed: Option<Vec<Term>> = None;
                for (i, a) in args.iter().enumerate() {
                    if let Some(new) = self.apply_inner(a, expanding) {
                        let buf = changed.get_or_insert_with(|| args[..i].to_vec());
                        buf.push(new);
                    } else if let Some(buf) = changed.as_mut() {
                        buf.push(a.clone());
                    }
                }
                changed.map(|v| Term::App(*f, Arc::from(v)))
            }
        }
    }

    /// Rewrites every binding to its fully applied image (path compression).
    pub fn normalize(&mut self) {
        let keys: Vec<Var> = self.bindings.keys().copied().collect();
        let resolved: Vec<(Var, Term)> = keys
            .into_iter()
            .map(|k| {
                let t = self.apply(&Term::Var(k));
                (k, t)
            })
            .collect();
        self.bindings = resolved.into_iter().collect();
    }

    fn occurs(&self, v: Var, t: &Term) -> bool {
        match self.deref(t) {
            Term::Var(w) => *w == v,
            Term::App(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    /// In-place unification. Leaves partial bindings behind on failure.
    fn unify_in_place(&mut self, a: &Term, b: &Term, occurs_check: bool) -> bool {
        let mut stack: Vec<(Term, Term)> = vec![(a.clone(), b.clone())];
        while let Some((x, y)) = stack.pop() {
            let x = self.deref(&x).clone();
            let y = self.deref(&y).clone();
            match (&x, &y) {
                (Term::Var(v), Term::Var(w)) if v == w => {}
                (Term::Var(v), other) | (other, Term::Var(v)) => {
                    if occurs_check && self.occurs(*v, other) {
                        return false;
                    }
                    self.bindings.insert(*v, other.clone());
                }
                (Term::App(f, xs), Term::App(g, ys)) => {
                    if f != g || xs.len() != ys.len() {
                        return false;
                    }
                    for (xa, ya) in xs.iter().zip(ys.iter()).rev() {
                        stack.push((xa.clone(), ya.clone()));
                    }
                }
            }
        }
        true
    }
}

/// Most general unifier of `a` and `b` extending `s`, with the occurs check on.
pub fn unify(a: &Term, b: &Term, s: &Substitution) -> Option<Substitution> {
    unify_with(a, b, s, true)
}

/// Most general unifier of `a` and `b` extending `s`. On failure `s` is
/// untouched and `None` is returned.
pub fn unify_with(a: &Term, b: &Term, s: &Substitution, occurs_check: bool) -> Option<Substitution> {
    let mut out = s.clone();
    out.unify_in_place(a, b, occurs_check).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn variable_binds_to_compound() {
        let s = unify(&t("X"), &t("and(b, c)"), &Substitution::new()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.apply(&t("X")), t("and(b, c)"));
    }

    #[test]
    fn repeated_variable_clash_fails() {
        assert!(unify(&t("f(X, X)"), &t("f(a, b)"), &Substitution::new()).is_none());
    }

    #[test]
    fn final_step_of_example_playout() {
        let s = unify(&t("and(A, false)"), &t("and(d, false)"), &Substitution::new()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.apply(&t("A")), t("d"));
        assert_eq!(s.apply(&t("and(A, false)")), t("and(d, false)"));
    }

    #[test]
    fn occurs_check_rejects_cycle() {
        assert!(unify(&t("X"), &t("f(X)"), &Substitution::new()).is_none());
        assert!(unify_with(&t("X"), &t("f(X)"), &Substitution::new(), false).is_some());
    }

    #[test]
    fn cyclic_binding_apply_terminates() {
        let s = unify_with(&t("X"), &t("f(X)"), &Substitution::new(), false).unwrap();
        assert_eq!(s.apply(&t("X")), t("f(X)"));
    }

    #[test]
    fn failure_leaves_input_untouched() {
        let s = unify(&t("Y"), &t("a"), &Substitution::new()).unwrap();
        let before = s.clone();
        assert!(unify(&t("g(Y, Z)"), &t("g(b, c)"), &s).is_none());
        assert_eq!(s, before);
    }

    #[test]
    fn apply_reaches_fixpoint() {
        let mut s = Substitution::new();
        s.bind(Var::named("X"), t("f(Y)"));
        s.bind(Var::named("Y"), t("a"));
        assert_eq!(s.apply(&t("X")), t("f(a)"));
        assert_eq!(Substitution::new().apply(&t("g(X, b)")), t("g(X, b)"));
    }

    #[test]
    fn normalize_is_idempotent() {
        let s = unify(&t("f(X, Y, Z)"), &t("f(Y, Z, g(a))"), &Substitution::new()).unwrap();
        let mut n = s.clone();
        n.normalize();
        for (v, b) in n.iter() {
            assert_eq!(n.apply(b), *b, "binding of {v} not normalized");
            assert_eq!(s.apply(&Term::Var(*v)), *b);
        }
    }
}
