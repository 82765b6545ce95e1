use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

/// Interned atom name. Symbols compare and hash by id.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

#[derive(Default)]
struct Interner {
    names: Vec<Arc<str>>,
    ids: HashMap<Arc<str>, u32>,
}

fn interner() -> &'static RwLock<Interner> {
    static INTERNER: OnceLock<RwLock<Interner>> = OnceLock::new();
    INTERNER.get_or_init(|| RwLock::new(Interner::default()))
}

impl Symbol {
    pub fn intern(name: &str) -> Symbol {
        if let Some(&id) = interner().read().expect("symbol table poisoned").ids.get(name) {
            return Symbol(id);
        }
        let mut table = interner().write().expect("symbol table poisoned");
        if let Some(&id) = table.ids.get(name) {
            return Symbol(id);
        }
        let id = u32::try_from(table.names.len()).expect("symbol table overflow");
        let name: Arc<str> = Arc::from(name);
        table.names.push(name.clone());
        table.ids.insert(name, id);
        Symbol(id)
    }

    pub fn name(self) -> Arc<str> {
        interner().read().expect("symbol table poisoned").names[self.0 as usize].clone()
    }

    pub fn id(self) -> u32 {
        self.0
    }

    pub(crate) fn from_id(id: u32) -> Symbol {
        Symbol(id)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}
