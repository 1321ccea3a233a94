//! Rewriting systems: rules, MPMRS, and the finite-state variant with a
//! register alphabet.

use std::collections::BTreeSet;
use std::fmt;

use crate::compiler::StateEncoding;
use crate::error::{Error, Result};
use crate::multiset::{Multiset, Symbol};

/// A labeled rewriting rule `lhs -> rhs` with non-empty left side.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RewriteRule {
    pub label: String,
    pub lhs: Multiset,
    pub rhs: Multiset,
}

impl RewriteRule {
    pub fn new(label: &str, lhs: Multiset, rhs: Multiset) -> Result<RewriteRule> {
        if label.is_empty() || label.chars().any(|c| c.is_whitespace() || c == ':') {
            return Err(Error::Invalid(format!("bad rule label {label:?}")));
        }
        if lhs.is_empty() {
            return Err(Error::Invalid(format!("rule {label} has empty left side")));
        }
        Ok(RewriteRule {
            label: label.to_string(),
            lhs,
            rhs,
        })
    }

    /// Rule size: total number of symbol occurrences on both sides.
    pub fn size(&self) -> u64 {
        self.lhs.size() + self.rhs.size()
    }

    /// A rule is applicable to a configuration when its left side fits.
    pub fn applicable_to(&self, cfg: &Multiset) -> bool {
        self.lhs.is_submultiset(cfg)
    }

    /// Single sequential application: `cfg - lhs + rhs`.
    pub fn apply_to(&self, cfg: &Multiset) -> Result<Multiset> {
        if !self.applicable_to(cfg) {
            return Err(Error::NotApplicable {
                rule: self.label.clone(),
                config: cfg.to_string(),
            });
        }
        cfg.difference(&self.lhs)?.sum(&self.rhs)
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}", self.label, self.lhs, self.rhs)
    }
}

/// A maximally parallel multiset rewriting system: alphabet, initial
/// multiset, ordered rule list. The rule order is only used to canonicalize
/// enumeration; it never changes the reachable behavior.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MpmrsSystem {
    pub alphabet: BTreeSet<Symbol>,
    pub initial: Multiset,
    pub rules: Vec<RewriteRule>,
}

impl MpmrsSystem {
    pub fn new(
        alphabet: BTreeSet<Symbol>,
        initial: Multiset,
        rules: Vec<RewriteRule>,
    ) -> Result<MpmrsSystem> {
        let mut labels = BTreeSet::new();
        for rule in &rules {
            if !labels.insert(rule.label.clone()) {
                return Err(Error::Invalid(format!("duplicate rule label {}", rule.label)));
            }
            for s in rule.lhs.symbols().chain(rule.rhs.symbols()) {
                if !alphabet.contains(s) {
                    return Err(Error::Invalid(format!(
                        "rule {} uses symbol {} outside the alphabet",
                        rule.label, s
                    )));
                }
            }
        }
        for s in initial.symbols() {
            if !alphabet.contains(s) {
                return Err(Error::Invalid(format!(
                    "initial multiset uses symbol {s} outside the alphabet"
                )));
            }
        }
        Ok(MpmrsSystem {
            alphabet,
            initial,
            rules,
        })
    }

    pub fn rule(&self, label: &str) -> Option<&RewriteRule> {
        self.rules.iter().find(|r| r.label == label)
    }
}

/// Classification of a rule relative to the register alphabet.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RuleClass {
    /// Left side contains no register symbols.
    PureState,
    /// Left side consumes at least one register symbol.
    RegisterDependent,
}

/// A structural problem found by [`FsMpmrsSystem::validate`]. Violations are
/// data, not errors: an invalid system can still be inspected.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    /// A rule's left side consists of register symbols only.
    RuleAllRegisters { rule: String },
    /// The register alphabet is not a proper subset of the alphabet.
    RegistersNotProperSubset,
    /// A register symbol is missing from the alphabet.
    RegisterOutsideAlphabet { symbol: String },
    /// A terminal register is not a register.
    TerminalNotRegister { symbol: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RuleAllRegisters { rule } => {
                write!(f, "rule {rule}: left side has no non-register symbol")
            }
            Violation::RegistersNotProperSubset => {
                write!(f, "register alphabet is not a proper subset of the alphabet")
            }
            Violation::RegisterOutsideAlphabet { symbol } => {
                write!(f, "register symbol {symbol} is outside the alphabet")
            }
            Violation::TerminalNotRegister { symbol } => {
                write!(f, "terminal symbol {symbol} is not a register")
            }
        }
    }
}

/// An MPMRS with a distinguished register (data) alphabet and terminal
/// registers. State configurations are projections over the non-register
/// part of the alphabet.
#[derive(Clone, PartialEq, Debug)]
pub struct FsMpmrsSystem {
    pub base: MpmrsSystem,
    pub registers: BTreeSet<Symbol>,
    pub terminal: BTreeSet<Symbol>,
    /// Present on compiled systems; the bridge used by co-simulation.
    pub encoding: Option<StateEncoding>,
}

impl FsMpmrsSystem {
    pub fn new(
        base: MpmrsSystem,
        registers: BTreeSet<Symbol>,
        terminal: BTreeSet<Symbol>,
    ) -> FsMpmrsSystem {
        FsMpmrsSystem {
            base,
            registers,
            terminal,
            encoding: None,
        }
    }

    /// Checks the structural invariants; an empty list means the system is
    /// a well-formed FsMPMRS.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for s in &self.registers {
            if !self.base.alphabet.contains(s) {
                out.push(Violation::RegisterOutsideAlphabet {
                    symbol: s.name().to_string(),
                });
            }
        }
        if !self.registers.is_subset(&self.base.alphabet) || self.registers == self.base.alphabet {
            out.push(Violation::RegistersNotProperSubset);
        }
        for s in &self.terminal {
            if !self.registers.contains(s) {
                out.push(Violation::TerminalNotRegister {
                    symbol: s.name().to_string(),
                });
            }
        }
        for rule in &self.base.rules {
            if self.classify_rule(rule) == RuleClass::RegisterDependent
                && rule.lhs.project_away(&self.registers).is_empty()
            {
                out.push(Violation::RuleAllRegisters {
                    rule: rule.label.clone(),
                });
            }
        }
        out
    }

    pub fn classify_rule(&self, rule: &RewriteRule) -> RuleClass {
        if rule.lhs.project(&self.registers).is_empty() {
            RuleClass::PureState
        } else {
            RuleClass::RegisterDependent
        }
    }

    /// Projection of a configuration over the non-register alphabet.
    pub fn state_projection(&self, cfg: &Multiset) -> Multiset {
        cfg.project_away(&self.registers)
    }

    /// Projection over the terminal registers (the computed result).
    pub fn terminal_projection(&self, cfg: &Multiset) -> Multiset {
        cfg.project(&self.terminal)
    }

    /// The initial multiset with extra register content added, e.g. the
    /// input of a compiled machine.
    pub fn initial_with(&self, extra: &Multiset) -> Result<Multiset> {
        self.base.initial.sum(extra)
    }

    /// Register symbols in canonical order.
    pub fn register_order(&self) -> Vec<Symbol> {
        self.registers.iter().cloned().collect()
    }

    /// Builds a register multiset from counts listed in canonical register
    /// order; shorter vectors leave the remaining registers at zero.
    pub fn register_input(&self, counts: &[u64]) -> Result<Multiset> {
        let order = self.register_order();
        if counts.len() > order.len() {
            return Err(Error::Invalid(format!(
                "{} register values supplied but the system has {} registers",
                counts.len(),
                order.len()
            )));
        }
        Multiset::from_pairs(order.into_iter().zip(counts.iter().copied()))
    }
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------
//
//   @alphabet A B C D E F
//   @registers E F
//   @terminal F
//   @init A^2 B E^2
//   r1: A B -> C
//   r2: A E -> D
//
// Rule order in the file is the rule order of the system; an empty right
// side is written λ. Lines whose first non-blank character is `#` are
// comments.

pub fn parse_system_str(text: &str) -> Result<FsMpmrsSystem> {
    let mut alphabet: Option<BTreeSet<Symbol>> = None;
    let mut registers: Option<BTreeSet<Symbol>> = None;
    let mut terminal: Option<BTreeSet<Symbol>> = None;
    let mut initial: Option<Multiset> = None;
    let mut rules: Vec<RewriteRule> = Vec::new();

    let parse_symbols = |line: usize, rest: &str| -> Result<BTreeSet<Symbol>> {
        rest.split_whitespace()
            .map(|t| Symbol::new(t).map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            }))
            .collect()
    };
    let at = |line: usize, e: Error| -> Error {
        match e {
            Error::Parse { msg, .. } => Error::Parse { line, msg },
            other => Error::Parse {
                line,
                msg: other.to_string(),
            },
        }
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("@alphabet") {
            alphabet = Some(parse_symbols(line_no, rest)?);
        } else if let Some(rest) = line.strip_prefix("@registers") {
            registers = Some(parse_symbols(line_no, rest)?);
        } else if let Some(rest) = line.strip_prefix("@terminal") {
            terminal = Some(parse_symbols(line_no, rest)?);
        } else if let Some(rest) = line.strip_prefix("@init") {
            initial = Some(rest.trim().parse().map_err(|e| at(line_no, e))?);
        } else if line.starts_with('@') {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("unknown directive {line:?}"),
            });
        } else {
            let (label, body) = line.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "expected `label: lhs -> rhs`".to_string(),
            })?;
            let (lhs, rhs) = body.split_once("->").ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "rule is missing `->`".to_string(),
            })?;
            let lhs: Multiset = lhs.trim().parse().map_err(|e| at(line_no, e))?;
            let rhs: Multiset = rhs.trim().parse().map_err(|e| at(line_no, e))?;
            if rules.iter().any(|r| r.label == label.trim()) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate rule label {}", label.trim()),
                });
            }
            rules.push(RewriteRule::new(label.trim(), lhs, rhs).map_err(|e| at(line_no, e))?);
        }
    }

    let alphabet = alphabet.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "missing @alphabet".to_string(),
    })?;
    let initial = initial.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "missing @init".to_string(),
    })?;
    let base = MpmrsSystem::new(alphabet, initial, rules).map_err(|e| Error::Parse {
        line: 0,
        msg: e.to_string(),
    })?;
    Ok(FsMpmrsSystem::new(
        base,
        registers.unwrap_or_default(),
        terminal.unwrap_or_default(),
    ))
}

/// Canonical writer; `parse_system_str` of the output reproduces the system.
pub fn write_system(sys: &FsMpmrsSystem) -> String {
    let join = |set: &BTreeSet<Symbol>| {
        set.iter()
            .map(|s| s.name().to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = String::new();
    out.push_str(&format!("@alphabet {}\n", join(&sys.base.alphabet)));
    if !sys.registers.is_empty() {
        out.push_str(&format!("@registers {}\n", join(&sys.registers)));
    }
    if !sys.terminal.is_empty() {
        out.push_str(&format!("@terminal {}\n", join(&sys.terminal)));
    }
    out.push_str(&format!("@init {}\n", sys.base.initial));
    for rule in &sys.base.rules {
        out.push_str(&format!("{}: {} -> {}\n", rule.label, rule.lhs, rule.rhs));
    }
    out
}

/// The worked three-rule example system: rules r1: AB→C, r2: AE→D,
/// r3: DC→AABF over alphabet {A,B,C,D,E,F} with registers {E,F},
/// terminal {F}, and initial multiset AABEE.
pub fn example1() -> FsMpmrsSystem {
    parse_system_str(
        "@alphabet A B C D E F\n\
         @registers E F\n\
         @terminal F\n\
         @init A^2 B E^2\n\
         r1: A B -> C\n\
         r2: A E -> D\n\
         r3: D C -> A^2 B F\n",
    )
    .expect("embedded example system is well-formed")
}
