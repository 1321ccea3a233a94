//! Bridge between FsMPMRS and one-membrane antiport P systems: a rewriting
//! rule `u -> v` corresponds to the exchange rule `(u, out; v, in)`, the
//! register alphabet to the environment objects, and the terminal projection
//! to counting over the output region.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::multiset::{Multiset, Symbol};
use crate::system::{FsMpmrsSystem, MpmrsSystem, RewriteRule};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AntiportRule {
    /// `(out, out; inn, in)`: exchange across the skin membrane.
    Exchange { out: Multiset, inn: Multiset },
    /// Symport rules are representable but not bridgeable.
    SymportIn(Multiset),
    SymportOut(Multiset),
}

/// A symport/antiport P system restricted to the data the bridge needs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AntiportSystem {
    pub objects: BTreeSet<Symbol>,
    pub membranes: usize,
    /// Initial content of the (single) inner region.
    pub inner: Multiset,
    /// Objects available in the environment in unbounded supply.
    pub environment: BTreeSet<Symbol>,
    pub rules: Vec<(String, AntiportRule)>,
    /// Objects counted in the output region when taking results.
    pub count_objects: BTreeSet<Symbol>,
}

/// Exports an FsMPMRS as a one-membrane antiport system.
pub fn to_antiport(fsys: &FsMpmrsSystem) -> AntiportSystem {
    AntiportSystem {
        objects: fsys.base.alphabet.clone(),
        membranes: 1,
        inner: fsys.base.initial.clone(),
        environment: fsys.registers.clone(),
        rules: fsys
            .base
            .rules
            .iter()
            .map(|r| {
                (
                    r.label.clone(),
                    AntiportRule::Exchange {
                        out: r.lhs.clone(),
                        inn: r.rhs.clone(),
                    },
                )
            })
            .collect(),
        count_objects: fsys.terminal.clone(),
    }
}

/// Imports a one-membrane antiport system. Multi-membrane structures and
/// symport rules have no FsMPMRS counterpart and are rejected.
pub fn from_antiport(ap: &AntiportSystem) -> Result<FsMpmrsSystem> {
    if ap.membranes != 1 {
        return Err(Error::UnsupportedAntiport(format!(
            "{} membranes; only one-membrane systems correspond to multiset rewriting",
            ap.membranes
        )));
    }
    let mut rules = Vec::new();
    for (label, rule) in &ap.rules {
        match rule {
            AntiportRule::Exchange { out, inn } => {
                rules.push(RewriteRule::new(label, out.clone(), inn.clone())?);
            }
            AntiportRule::SymportIn(_) | AntiportRule::SymportOut(_) => {
                return Err(Error::UnsupportedAntiport(format!(
                    "symport rule {label} cannot be expressed as a rewriting rule"
                )));
            }
        }
    }
    let base = MpmrsSystem::new(ap.objects.clone(), ap.inner.clone(), rules)?;
    Ok(FsMpmrsSystem::new(
        base,
        ap.environment.clone(),
        ap.count_objects.clone(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiset::{ms, sym};
    use crate::system::example1;

    #[test]
    fn example1_exports_with_registers_as_environment() {
        let ap = to_antiport(&example1());
        assert_eq!(ap.membranes, 1);
        assert_eq!(ap.inner, ms("A^2 B E^2"));
        assert_eq!(
            ap.environment,
            [sym("E"), sym("F")].into_iter().collect::<BTreeSet<_>>()
        );
        match &ap.rules[0].1 {
            AntiportRule::Exchange { out, inn } => {
                assert_eq!(out, &ms("A B"));
                assert_eq!(inn, &ms("C"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let sys = example1();
        let back = from_antiport(&to_antiport(&sys)).unwrap();
        assert_eq!(back.base, sys.base);
        assert_eq!(back.registers, sys.registers);
        assert_eq!(back.terminal, sys.terminal);
    }

    #[test]
    fn multi_membrane_and_symport_are_rejected() {
        let mut ap = to_antiport(&example1());
        ap.membranes = 2;
        assert!(matches!(
            from_antiport(&ap),
            Err(Error::UnsupportedAntiport(_))
        ));
        let mut ap = to_antiport(&example1());
        ap.rules
            .push(("sym".to_string(), AntiportRule::SymportIn(ms("A"))));
        assert!(matches!(
            from_antiport(&ap),
            Err(Error::UnsupportedAntiport(_))
        ));
    }
}
