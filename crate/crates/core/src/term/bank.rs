use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};

use super::{Term, Var};

static NEXT_NAMESPACE: AtomicU32 = AtomicU32::new(1);

const FRESH_CONSTANT_PREFIX: &str = "c_";

/// Source of fresh variables and fresh constants for one game.
///
/// Each bank owns a process-unique variable namespace, so two banks never
/// emit the same variable. Fresh constants are named `c_<n>`; logic files are
/// not allowed to use that pattern, so they cannot clash with rule symbols.
#[derive(Clone, Debug)]
pub struct VarBank {
    namespace: u32,
    next_var: u32,
    next_const: u32,
}

impl Default for VarBank {
    fn default() -> Self {
        Self::new()
    }
}

impl VarBank {
    pub fn new() -> Self {
        VarBank {
            namespace: NEXT_NAMESPACE.fetch_add(1, Ordering::Relaxed),
            next_var: 0,
            next_const: 0,
        }
    }

    pub fn fresh_var(&mut self) -> Var {
        let v = Var::fresh(self.namespace, self.next_var);
        self.next_var = self.next_var.checked_add(1).expect("variable bank exhausted");
        v
    }

    pub fn fresh_constant(&mut self) -> Term {
        let name = format!("{FRESH_CONSTANT_PREFIX}{}", self.next_const);
        self.next_const += 1;
        Term::constant(&name)
    }

    pub fn vars_issued(&self) -> u32 {
        self.next_var
    }

    pub fn constants_issued(&self) -> u32 {
        self.next_const
    }
}

/// True for names of the form `c_<digits>`, reserved for fresh constants.
pub fn is_fresh_constant_name(name: &str) -> bool {
    name.strip_prefix(FRESH_CONSTANT_PREFIX)
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

/// Consistent variable renaming backed by a bank. One renamer per rule
/// application keeps the sharing pattern between head and body.
pub struct Renamer<'a> {
    bank: &'a mut VarBank,
    map: HashMap<Var, Var>,
}

impl<'a> Renamer<'a> {
    pub fn new(bank: &'a mut VarBank) -> Self {
        Renamer {
            bank,
            map: HashMap::new(),
        }
    }

    pub fn rename(&mut self, t: &Term) -> Term {
        t.map_vars(&mut |v| {
            let bank = &mut *self.bank;
            Term::Var(*self.map.entry(v).or_insert_with(|| bank.fresh_var()))
        })
    }
}

/// Replaces each distinct variable of `t` by a distinct fresh constant,
/// in order of first occurrence.
pub fn freshen_to_constants(t: &Term, bank: &mut VarBank) -> Term {
    let mut map: HashMap<Var, Term> = HashMap::new();
    t.map_vars(&mut |v| map.entry(v).or_insert_with(|| bank.fresh_constant()).clone())
}
