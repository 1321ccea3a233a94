//! Finite multisets over an interned symbol alphabet.
//!
//! A [`Multiset`] maps symbols to positive counts; an absent symbol has
//! count zero. The canonical text rendering lists symbols in canonical
//! (lexicographic) order with a `^count` suffix for counts above one, and
//! renders the empty multiset as `λ`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// An element of the alphabet. Two symbols with equal names are the same
/// symbol; the canonical total order is lexicographic on the name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    /// Creates a symbol. Names must be non-empty tokens without whitespace
    /// and without the reserved sequences `->`, `^`, `@`; `λ` is reserved
    /// for the empty multiset.
    pub fn new(name: &str) -> Result<Symbol> {
        if name.is_empty()
            || name == "λ"
            || name.chars().any(|c| c.is_whitespace())
            || name.contains("->")
            || name.contains('^')
            || name.contains('@')
        {
            return Err(Error::InvalidSymbol(name.to_string()));
        }
        Ok(Symbol(Arc::from(name)))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({})", self.0)
    }
}

/// Convenience constructor for symbols known to be valid; panics otherwise.
/// Intended for embedded tables and tests.
pub fn sym(name: &str) -> Symbol {
    Symbol::new(name).expect("valid symbol name")
}

/// A finite multiset over [`Symbol`]s.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Multiset {
    entries: BTreeMap<Symbol, u64>,
}

impl Multiset {
    pub fn empty() -> Multiset {
        Multiset::default()
    }

    pub fn singleton(s: Symbol) -> Multiset {
        let mut m = Multiset::empty();
        m.add(s, 1).expect("count 1 cannot overflow");
        m
    }

    /// Builds a multiset from (symbol, count) pairs; zero counts are dropped,
    /// duplicate symbols accumulate.
    pub fn from_pairs<I: IntoIterator<Item = (Symbol, u64)>>(pairs: I) -> Result<Multiset> {
        let mut m = Multiset::empty();
        for (s, n) in pairs {
            m.add(s, n)?;
        }
        Ok(m)
    }

    /// Builds a multiset from a token sequence; repeated tokens accumulate.
    pub fn from_symbols<I: IntoIterator<Item = Symbol>>(symbols: I) -> Multiset {
        let mut m = Multiset::empty();
        for s in symbols {
            m.add(s, 1).expect("token counts stay far below u64::MAX");
        }
        m
    }

    /// Adds `n` occurrences of `s` in place. Overflow is an error, never a wrap.
    pub fn add(&mut self, s: Symbol, n: u64) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        let slot = self.entries.entry(s.clone()).or_insert(0);
        *slot = slot
            .checked_add(n)
            .ok_or_else(|| Error::CountOverflow(s.name().to_string()))?;
        Ok(())
    }

    pub fn count(&self, s: &Symbol) -> u64 {
        self.entries.get(s).copied().unwrap_or(0)
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.entries.contains_key(s)
    }

    /// Total number of occurrences.
    pub fn size(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct symbols.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, u64)> {
        self.entries.iter().map(|(s, &n)| (s, n))
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.entries.keys()
    }

    /// Pointwise sum.
    pub fn sum(&self, other: &Multiset) -> Result<Multiset> {
        let mut out = self.clone();
        for (s, n) in other.iter() {
            out.add(s.clone(), n)?;
        }
        Ok(out)
    }

    /// Pointwise difference. Requires `other ⊆ self`; the error names the
    /// first offending symbol in canonical order.
    pub fn difference(&self, other: &Multiset) -> Result<Multiset> {
        let mut out = self.clone();
        for (s, n) in other.iter() {
            let have = out.count(s);
            if have < n {
                return Err(Error::DifferenceUnderflow {
                    symbol: s.name().to_string(),
                    have,
                    need: n,
                });
            }
            if have == n {
                out.entries.remove(s);
            } else {
                out.entries.insert(s.clone(), have - n);
            }
        }
        Ok(out)
    }

    /// `self(a) ≤ other(a)` for every symbol `a`.
    pub fn is_submultiset(&self, other: &Multiset) -> bool {
        self.iter().all(|(s, n)| other.count(s) >= n)
    }

    /// Keeps only the symbols in `keep`.
    pub fn project(&self, keep: &BTreeSet<Symbol>) -> Multiset {
        Multiset {
            entries: self
                .entries
                .iter()
                .filter(|(s, _)| keep.contains(*s))
                .map(|(s, &n)| (s.clone(), n))
                .collect(),
        }
    }

    /// Drops the symbols in `remove` (complement projection).
    pub fn project_away(&self, remove: &BTreeSet<Symbol>) -> Multiset {
        Multiset {
            entries: self
                .entries
                .iter()
                .filter(|(s, _)| !remove.contains(*s))
                .map(|(s, &n)| (s.clone(), n))
                .collect(),
        }
    }

    /// `self` repeated `k` times.
    pub fn scaled(&self, k: u64) -> Result<Multiset> {
        let mut out = Multiset::empty();
        for (s, n) in self.iter() {
            let scaled = n
                .checked_mul(k)
                .ok_or_else(|| Error::CountOverflow(s.name().to_string()))?;
            out.add(s.clone(), scaled)?;
        }
        Ok(out)
    }
}

impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("λ");
        }
        let mut first = true;
        for (s, n) in self.iter() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            if n == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{n}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

impl FromStr for Multiset {
    type Err = Error;

    /// Parses the canonical text form: whitespace-separated tokens with an
    /// optional `^k` count suffix (`k ≥ 1`); `λ` or the empty string denote
    /// the empty multiset.
    fn from_str(text: &str) -> Result<Multiset> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.is_empty() || (tokens.len() == 1 && tokens[0] == "λ") {
            return Ok(Multiset::empty());
        }
        let mut m = Multiset::empty();
        for tok in tokens {
            if tok == "λ" {
                return Err(Error::Parse {
                    line: 0,
                    msg: "λ cannot be mixed with other tokens".to_string(),
                });
            }
            let (name, count) = match tok.split_once('^') {
                Some((name, k)) => {
                    let k: u64 = k.parse().map_err(|_| Error::Parse {
                        line: 0,
                        msg: format!("bad count in token {tok:?}"),
                    })?;
                    if k == 0 {
                        return Err(Error::Parse {
                            line: 0,
                            msg: format!("zero count in token {tok:?}"),
                        });
                    }
                    (name, k)
                }
                None => (tok, 1),
            };
            m.add(Symbol::new(name)?, count)?;
        }
        Ok(m)
    }
}

/// Parses a multiset, panicking on malformed input. For embedded tables and tests.
pub fn ms(text: &str) -> Multiset {
    text.parse().expect("valid multiset literal")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_pointwise() {
        assert_eq!(ms("a^3 b").sum(&ms("b c")).unwrap(), ms("a^3 b^2 c"));
        assert_eq!(ms("λ").sum(&ms("a^3 b")).unwrap(), ms("a^3 b"));
        // operand shapes from the worked three-rule example
        assert_eq!(ms("A B").sum(&ms("A E")).unwrap(), ms("A^2 B E"));
    }

    #[test]
    fn difference_is_pointwise_with_underflow_error() {
        assert_eq!(ms("a^3 b").difference(&ms("a b")).unwrap(), ms("a^2"));
        assert_eq!(ms("x").difference(&ms("x")).unwrap(), Multiset::empty());
        assert_eq!(
            ms("A^2 B E^2").difference(&ms("A B")).unwrap(),
            ms("A E^2")
        );
        let err = ms("a b").difference(&ms("a^2")).unwrap_err();
        match err {
            Error::DifferenceUnderflow { symbol, have, need } => {
                assert_eq!(symbol, "a");
                assert_eq!((have, need), (1, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn submultiset_examples() {
        assert!(ms("a b").is_submultiset(&ms("a^2 b c")));
        assert!(Multiset::empty().is_submultiset(&ms("a^5")));
        assert!(!ms("A E^2").is_submultiset(&ms("A E")));
    }

    #[test]
    fn projection_examples() {
        let keep: BTreeSet<Symbol> = [sym("F")].into_iter().collect();
        assert_eq!(ms("A C F^2").project(&keep), ms("F^2"));
        assert_eq!(ms("B D^2").project(&keep), Multiset::empty());
        let m = ms("A C F^2");
        let all: BTreeSet<Symbol> = m.symbols().cloned().collect();
        assert_eq!(m.project(&all), m);
    }

    #[test]
    fn canonical_rendering_round_trips() {
        for text in ["λ", "A^2 B E^2", "C'5 R0^7 q16"] {
            let m = ms(text);
            assert_eq!(m.to_string(), text);
            assert_eq!(ms(&m.to_string()), m);
        }
        assert_eq!(Multiset::empty().to_string(), "λ");
    }

    #[test]
    fn symbol_name_validation() {
        assert!(Symbol::new("A").is_ok());
        assert!(Symbol::new("C'5").is_ok());
        assert!(Symbol::new("").is_err());
        assert!(Symbol::new("a b").is_err());
        assert!(Symbol::new("a^2").is_err());
        assert!(Symbol::new("x->y").is_err());
        assert!(Symbol::new("@init").is_err());
        assert!(Symbol::new("λ").is_err());
    }

    #[test]
    fn overflow_is_an_error() {
        let mut m = Multiset::singleton(sym("a"));
        assert!(m.add(sym("a"), u64::MAX).is_err());
        let big = Multiset::from_pairs([(sym("a"), u64::MAX)]).unwrap();
        assert!(big.sum(&ms("a")).is_err());
        assert!(big.scaled(2).is_err());
    }
}
