//! Name-keyed lookup tables for interchangeable strategies.
//!
//! Optimizers and aggregation rules are registered under a short lowercase
//! name and resolved at runtime from the run configuration or CLI flags.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub struct Registry<F> {
    kind: &'static str,
    entries: BTreeMap<&'static str, F>,
}

impl<F: Copy> Registry<F> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, factory: F) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn get(&self, name: &str) -> Result<F> {
        self.entries.get(name).copied().ok_or_else(|| {
            Error::Config(format!(
                "unknown {} `{}` (available: {})",
                self.kind,
                name,
                self.names().join(", ")
            ))
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_unknown_name() {
        let mut reg: Registry<fn() -> u32> = Registry::new("widget");
        reg.register("one", || 1).register("two", || 2);
        assert_eq!(reg.get("two").unwrap()(), 2);
        assert_eq!(reg.names(), vec!["one", "two"]);
        let err = reg.get("three").err().unwrap().to_string();
        assert!(err.contains("unknown widget `three`"), "{err}");
        assert!(err.contains("one, two"), "{err}");
    }
}
