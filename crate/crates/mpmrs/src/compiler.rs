//! Compilation of register machines into FsMPMRS and the rule-minimization
//! passes, together with the co-simulation harness that checks a compiled
//! system against the machine it was produced from.
//!
//! The basic scheme spends one rule per increment and five rules per
//! test-decrement; the passes then trade rule count against rule size:
//!
//! * P1 (`pass_checker_encoding`) re-encodes each test-decrement state as
//!   `q C_q`, cutting each five-rule block to four, collapses pure rename
//!   chains, and drops unreachable states.
//! * P2 (`pass_fuse_increments`) folds increments that immediately follow a
//!   branch into the branch rule itself.
//! * P3 (`pass_phases`) replaces the per-state tick rules by one global
//!   phase rule `S -> S'`.
//! * P4 (`pass_shared_checkers`) replaces per-state checkers by one checker
//!   per tested register.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::engine::maximal_steps;
use crate::error::{Error, Result};
use crate::machine::{
    rm_step, Instruction, RegisterMachine, RmConfiguration, StateId, StepResult,
};
use crate::multiset::{Multiset, Symbol};
use crate::system::{FsMpmrsSystem, MpmrsSystem, RewriteRule};

/// How many machine instructions a single checkpoint may span (fused
/// increments make the machine take up to two steps per checkpoint; the
/// slack covers deeper chains in hand-built systems).
const CHECKPOINT_LOOKAHEAD: usize = 8;

/// Maps machine states to the state configurations that represent them,
/// together with the register symbol order. A configuration is a checkpoint
/// exactly when its non-register projection equals one of the encodings.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StateEncoding {
    pub map: BTreeMap<StateId, Multiset>,
    pub register_symbols: Vec<Symbol>,
    /// Phase symbols, when the phase discipline is active (after P3).
    pub phase_symbols: BTreeSet<Symbol>,
}

impl StateEncoding {
    /// Reverse lookup: the machine state whose encoding equals `proj`.
    pub fn state_for(&self, proj: &Multiset) -> Option<&StateId> {
        self.map.iter().find(|(_, m)| *m == proj).map(|(s, _)| s)
    }

    pub fn register_multiset(&self, regs: &[u64]) -> Result<Multiset> {
        Multiset::from_pairs(
            self.register_symbols
                .iter()
                .cloned()
                .zip(regs.iter().copied()),
        )
    }

    /// Pairs of states whose encodings are in submultiset relation; must be
    /// empty for the checkpoint convention to be unambiguous.
    pub fn inclusion_violations(&self) -> Vec<(StateId, StateId)> {
        let mut out = Vec::new();
        for (a, ma) in &self.map {
            for (b, mb) in &self.map {
                if a != b && ma.is_submultiset(mb) {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Pass {
    P1,
    P2,
    P3,
    P4,
}

impl fmt::Display for Pass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pass::P1 => f.write_str("p1"),
            Pass::P2 => f.write_str("p2"),
            Pass::P3 => f.write_str("p3"),
            Pass::P4 => f.write_str("p4"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompilationOptions {
    /// Emit the zero-branch rule that targets the final state. When false
    /// (the default) that rule is omitted; the computation then halts by
    /// stability with residual state symbols, which the terminal projection
    /// ignores.
    pub faithful_halt: bool,
    /// Largest rule size `pass_fuse_increments` may produce.
    pub fusion_size_cap: u64,
    /// Increment states P2 folds away; `None` fuses everything eligible.
    pub fusion_targets: Option<BTreeSet<StateId>>,
    /// Registers whose content is the computed result (default: register 0).
    pub terminal_registers: Vec<usize>,
}

impl Default for CompilationOptions {
    fn default() -> Self {
        CompilationOptions {
            faithful_halt: false,
            fusion_size_cap: 5,
            fusion_targets: None,
            terminal_registers: vec![0],
        }
    }
}

/// Per-stage statistics of the pass pipeline.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StageStats {
    pub stage: String,
    pub rule_count: usize,
    pub max_rule_size: u64,
    pub states_eliminated: usize,
    pub rules_glued: usize,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PassReport {
    pub stages: Vec<StageStats>,
}

impl PassReport {
    pub fn to_table(&self) -> String {
        let mut out = String::from("stage      rules  max-size  states-eliminated  rules-glued\n");
        for s in &self.stages {
            out.push_str(&format!(
                "{:<10} {:>5}  {:>8}  {:>17}  {:>11}\n",
                s.stage, s.rule_count, s.max_rule_size, s.states_eliminated, s.rules_glued
            ));
        }
        out
    }
}

/// Rule count and maximal rule size of a system.
pub fn stats(sys: &FsMpmrsSystem) -> (usize, u64) {
    let count = sys.base.rules.len();
    let max = sys.base.rules.iter().map(|r| r.size()).max().unwrap_or(0);
    (count, max)
}

/// A machine compiled to an FsMPMRS at some pass level. Keeps the lowered
/// machine as the co-simulation oracle.
#[derive(Clone, Debug)]
pub struct CompiledSystem {
    pub system: FsMpmrsSystem,
    pub machine: RegisterMachine,
    pub options: CompilationOptions,
    pub level: BTreeSet<Pass>,
    pub report: PassReport,
}

impl CompiledSystem {
    pub fn stats(&self) -> (usize, u64) {
        stats(&self.system)
    }

    pub fn encoding(&self) -> &StateEncoding {
        self.system
            .encoding
            .as_ref()
            .expect("compiled systems always carry an encoding")
    }

    fn with_pass(&self, pass: Pass, requires: Pass) -> Result<CompiledSystem> {
        if pass != Pass::P1 && !self.level.contains(&requires) {
            return Err(Error::Invalid(format!(
                "pass {pass} requires {requires} to be applied first"
            )));
        }
        if self.level.contains(&pass) {
            return Ok(self.clone());
        }
        let mut level = self.level.clone();
        level.insert(pass);
        let (system, info) = emit(&self.machine, &level, &self.options)?;
        let (rule_count, max_rule_size) = stats(&system);
        let mut report = self.report.clone();
        report.stages.push(StageStats {
            stage: pass.to_string(),
            rule_count,
            max_rule_size,
            states_eliminated: info.states_eliminated_by(pass),
            rules_glued: info.rules_glued_by(pass),
        });
        Ok(CompiledSystem {
            system,
            machine: self.machine.clone(),
            options: self.options.clone(),
            level,
            report,
        })
    }

    /// P1: intermediate state elimination. Each five-rule test-decrement
    /// block becomes a four-rule block over the `q C_q` encoding, pure
    /// rename chains collapse, and states unreachable from the start state
    /// are dropped together with their rules.
    pub fn pass_checker_encoding(&self) -> Result<CompiledSystem> {
        self.with_pass(Pass::P1, Pass::P1)
    }

    /// P2: fold increments that directly follow a branch into the branch
    /// rule, within the size cap; orphaned increment rules are removed.
    pub fn pass_fuse_increments(&self) -> Result<CompiledSystem> {
        self.with_pass(Pass::P2, Pass::P1)
    }

    /// P3: one global phase rule replaces the per-state tick rules.
    pub fn pass_phases(&self) -> Result<CompiledSystem> {
        self.with_pass(Pass::P3, Pass::P1)
    }

    /// P4: one checker per tested register replaces per-state checkers.
    pub fn pass_shared_checkers(&self) -> Result<CompiledSystem> {
        self.with_pass(Pass::P4, Pass::P3)
    }

    pub fn cosimulate(&self, inputs: &[Vec<u64>], max_system_steps: usize) -> Result<CosimReport> {
        cosimulate(&self.machine, &self.system, inputs, max_system_steps)
    }
}

// ---------------------------------------------------------------------------
// Lowering
// ---------------------------------------------------------------------------

/// Rewrites `Branch` into `DecJz` plus a fresh re-increment state, and plain
/// `Dec` into `DecJz` with both exits equal. The compiler proper only sees
/// increment / test-decrement machines.
pub fn lower(m: &RegisterMachine) -> Result<RegisterMachine> {
    let existing: BTreeSet<String> = m
        .states()
        .iter()
        .map(|s| s.name().to_string())
        .collect();
    let mut entries: Vec<(StateId, Instruction)> = Vec::new();
    let mut fresh_count = 0usize;
    for (state, instr) in &m.entries {
        match instr {
            Instruction::Branch { reg, nonzero, zero } => {
                let mut name = format!("{}_t", state);
                while existing.contains(&name) {
                    fresh_count += 1;
                    name = format!("{}_t{}", state, fresh_count);
                }
                let fresh = StateId::new(&name)?;
                entries.push((
                    state.clone(),
                    Instruction::DecJz {
                        reg: *reg,
                        success: fresh.clone(),
                        zero: zero.clone(),
                    },
                ));
                entries.push((
                    fresh,
                    Instruction::Inc {
                        reg: *reg,
                        next: nonzero.clone(),
                    },
                ));
            }
            Instruction::Dec { reg, next } => entries.push((
                state.clone(),
                Instruction::DecJz {
                    reg: *reg,
                    success: next.clone(),
                    zero: next.clone(),
                },
            )),
            other => entries.push((state.clone(), other.clone())),
        }
    }
    Ok(RegisterMachine::new(
        m.registers,
        m.start.clone(),
        m.final_state.clone(),
        entries,
    ))
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

#[derive(Default)]
struct EmitInfo {
    unreachable_removed: usize,
    renames_collapsed: usize,
    fused_states: usize,
    branch_rules_rewritten: usize,
    ticks_glued: usize,
    checkers_glued: usize,
}

impl EmitInfo {
    fn states_eliminated_by(&self, pass: Pass) -> usize {
        match pass {
            Pass::P1 => self.unreachable_removed + self.renames_collapsed,
            Pass::P2 => self.fused_states,
            _ => 0,
        }
    }

    fn rules_glued_by(&self, pass: Pass) -> usize {
        match pass {
            Pass::P2 => self.branch_rules_rewritten,
            Pass::P3 => self.ticks_glued,
            Pass::P4 => self.checkers_glued,
            _ => 0,
        }
    }
}

struct Symbols {
    phase: Symbol,
    phase_primed: Symbol,
}

impl Symbols {
    fn state(q: &StateId) -> Symbol {
        Symbol::new(q.name()).expect("state ids are valid symbol names")
    }

    fn primed(q: &StateId) -> Symbol {
        Symbol::new(&format!("{}'", q)).expect("valid symbol")
    }

    fn double_primed(q: &StateId) -> Symbol {
        Symbol::new(&format!("{}''", q)).expect("valid symbol")
    }

    fn checker(q: &StateId) -> Symbol {
        Symbol::new(&format!("C_{}", q)).expect("valid symbol")
    }

    fn checker_primed(q: &StateId) -> Symbol {
        Symbol::new(&format!("C_{}'", q)).expect("valid symbol")
    }

    fn reg_checker(i: usize) -> Symbol {
        Symbol::new(&format!("C{i}")).expect("valid symbol")
    }

    fn reg_checker_primed(i: usize) -> Symbol {
        Symbol::new(&format!("C{i}'")).expect("valid symbol")
    }
}

struct Level {
    p1: bool,
    p2: bool,
    p3: bool,
    p4: bool,
}

impl Level {
    fn of(set: &BTreeSet<Pass>) -> Level {
        Level {
            p1: set.contains(&Pass::P1),
            p2: set.contains(&Pass::P2),
            p3: set.contains(&Pass::P3),
            p4: set.contains(&Pass::P4),
        }
    }
}

fn machine_hard_errors(m: &RegisterMachine) -> Result<()> {
    use crate::machine::{validate_machine, MachineDiagnostic};
    for d in validate_machine(m) {
        match d {
            MachineDiagnostic::UnreachableState { .. } => {}
            other => return Err(Error::MalformedMachine(other.to_string())),
        }
    }
    for (_, i) in &m.entries {
        if matches!(i, Instruction::Branch { .. } | Instruction::Dec { .. }) {
            return Err(Error::MalformedMachine(
                "branch and plain-decrement instructions must be lowered first".to_string(),
            ));
        }
    }
    Ok(())
}

/// Increment states that P2 may fold into their predecessor branch rules:
/// reachable non-start increment states whose every predecessor is a branch
/// edge of a test-decrement state, whose successor is a different state, and
/// whose fused rules stay within the size cap.
pub fn fusion_candidates(m: &RegisterMachine, cap: u64) -> BTreeSet<StateId> {
    let live = m.reachable_states();
    let mut preds: BTreeMap<&StateId, (usize, usize)> = BTreeMap::new(); // (branch preds, other preds)
    for (_, i) in &m.entries {
        match i {
            Instruction::DecJz { success, zero, .. } => {
                for t in [success, zero] {
                    preds.entry(t).or_default().0 += 1;
                }
            }
            Instruction::Inc { next, .. } | Instruction::Dec { next, .. } => {
                preds.entry(next).or_default().1 += 1;
            }
            Instruction::Branch { nonzero, zero, .. } => {
                for t in [nonzero, zero] {
                    preds.entry(t).or_default().1 += 1;
                }
            }
            Instruction::Stop => {}
        }
    }
    let enc_size = |t: &StateId| -> u64 {
        match m.instruction(t) {
            Some(Instruction::DecJz { .. }) => 2, // q C_q
            _ => 1,
        }
    };
    let mut out = BTreeSet::new();
    for (q, i) in &m.entries {
        if let Instruction::Inc { next, .. } = i {
            if !live.contains(q) || *q == m.start || next == q {
                continue;
            }
            let (branch_preds, other_preds) = preds.get(q).copied().unwrap_or((0, 0));
            if branch_preds == 0 || other_preds != 0 {
                continue;
            }
            // fused rule: q' C -> enc(next) R_k, i.e. 2 + enc + 1 symbols
            if 2 + enc_size(next) + 1 <= cap {
                out.insert(q.clone());
            }
        }
    }
    out
}

/// Collapses pure rename chains in a rule list: a rename `x -> y` (one
/// symbol on each side), where `y` is consumed by exactly one rule `y -> γ`
/// with left side exactly `y`, occurs nowhere else, and is not protected,
/// becomes `x -> γ` and the `y` rule is dropped. Runs to a fixed point.
/// Branch rules never qualify (their left sides carry a checker), so folding
/// increments into branches is left entirely to the fusion pass.
pub fn collapse_pure_renames(
    mut rules: Vec<RewriteRule>,
    protected: &BTreeSet<Symbol>,
) -> (Vec<RewriteRule>, usize) {
    let mut collapsed = 0;
    loop {
        let mut change: Option<(usize, usize)> = None;
        'search: for (ai, a) in rules.iter().enumerate() {
            if a.lhs.size() != 1 || a.rhs.size() != 1 {
                continue;
            }
            let y = a.rhs.symbols().next().expect("size is 1").clone();
            if protected.contains(&y) || a.lhs.contains(&y) {
                continue;
            }
            let mut consumer: Option<usize> = None;
            for (bi, b) in rules.iter().enumerate() {
                if bi == ai && b.lhs.contains(&y) {
                    continue 'search;
                }
                if b.lhs.contains(&y) {
                    if b.lhs.size() != 1 || consumer.is_some() {
                        continue 'search;
                    }
                    consumer = Some(bi);
                }
                if bi != ai && b.rhs.contains(&y) {
                    continue 'search;
                }
            }
            if let Some(bi) = consumer {
                change = Some((ai, bi));
                break;
            }
        }
        match change {
            Some((ai, bi)) => {
                let gamma = rules[bi].rhs.clone();
                rules[ai].rhs = gamma;
                rules.remove(bi);
                collapsed += 1;
            }
            None => return (rules, collapsed),
        }
    }
}

fn emit(
    m: &RegisterMachine,
    level_set: &BTreeSet<Pass>,
    opts: &CompilationOptions,
) -> Result<(FsMpmrsSystem, EmitInfo)> {
    machine_hard_errors(m)?;
    let level = Level::of(level_set);
    let mut info = EmitInfo::default();

    let registers: Vec<Symbol> = (0..m.registers)
        .map(|i| Symbol::new(&format!("R{i}")))
        .collect::<Result<_>>()?;
    let syms = Symbols {
        phase: Symbol::new("S")?,
        phase_primed: Symbol::new("S'")?,
    };
    for t in &opts.terminal_registers {
        if *t >= m.registers {
            return Err(Error::Invalid(format!(
                "terminal register {t} out of range (machine has {})",
                m.registers
            )));
        }
    }

    // Which states survive.
    let all_states = m.states();
    let live: BTreeSet<StateId> = if level.p1 {
        m.reachable_states()
    } else {
        all_states.clone()
    };
    info.unreachable_removed = all_states.len() - live.len();

    // Guard against name collisions between generated roles.
    {
        let mut names: BTreeSet<String> = registers.iter().map(|r| r.name().to_string()).collect();
        names.insert("S".to_string());
        names.insert("S'".to_string());
        for q in &all_states {
            for candidate in [
                Symbols::state(q),
                Symbols::primed(q),
                Symbols::double_primed(q),
                Symbols::checker(q),
                Symbols::checker_primed(q),
            ] {
                if !names.insert(candidate.name().to_string()) {
                    return Err(Error::MalformedMachine(format!(
                        "state {q} clashes with a generated symbol name {candidate}"
                    )));
                }
            }
        }
    }

    // Fusion set.
    let fused: BTreeSet<StateId> = if level.p2 {
        let eligible = fusion_candidates(m, opts.fusion_size_cap);
        let set = match &opts.fusion_targets {
            None => eligible,
            Some(requested) => {
                for t in requested {
                    if !eligible.contains(t) {
                        return Err(Error::Invalid(format!(
                            "state {t} is not eligible for increment fusion"
                        )));
                    }
                }
                requested.clone()
            }
        };
        for t in &set {
            if let Some(Instruction::Inc { next, .. }) = m.instruction(t) {
                if set.contains(next) {
                    return Err(Error::Invalid(format!(
                        "chain fusion through {t} -> {next} is not supported"
                    )));
                }
            }
        }
        set
    } else {
        BTreeSet::new()
    };
    info.fused_states = fused.len();

    // Encodings.
    let tested_register = |q: &StateId| -> Option<usize> {
        match m.instruction(q) {
            Some(Instruction::DecJz { reg, .. }) => Some(*reg),
            _ => None,
        }
    };
    let mut encoding_map: BTreeMap<StateId, Multiset> = BTreeMap::new();
    for q in &live {
        if fused.contains(q) {
            continue;
        }
        let mut e = Multiset::singleton(Symbols::state(q));
        if *q != m.final_state {
            if let Some(reg) = tested_register(q) {
                if level.p4 {
                    e.add(Symbols::reg_checker(reg), 1)?;
                } else if level.p1 {
                    e.add(Symbols::checker(q), 1)?;
                }
            }
            if level.p3 {
                e.add(syms.phase.clone(), 1)?;
            }
        }
        encoding_map.insert(q.clone(), e);
    }

    // Branch rule right side: the target encoding, stepping through a fused
    // increment when the target was folded away.
    let branch_rhs = |target: &StateId| -> Result<Multiset> {
        if fused.contains(target) {
            if let Some(Instruction::Inc { reg, next }) = m.instruction(target) {
                let mut rhs = encoding_map
                    .get(next)
                    .ok_or_else(|| {
                        Error::Invalid(format!("fused increment {target} targets unknown {next}"))
                    })?
                    .clone();
                rhs.add(registers[*reg].clone(), 1)?;
                return Ok(rhs);
            }
            unreachable!("fusion candidates are increment states");
        }
        encoding_map
            .get(target)
            .cloned()
            .ok_or_else(|| Error::Invalid(format!("branch targets unknown state {target}")))
    };

    // Rules.
    let mut rules: Vec<RewriteRule> = Vec::new();
    if level.p3 {
        rules.push(RewriteRule::new(
            "phase",
            Multiset::singleton(syms.phase.clone()),
            Multiset::singleton(syms.phase_primed.clone()),
        )?);
    }
    if level.p4 {
        let mut tested: BTreeSet<usize> = BTreeSet::new();
        let mut per_state = 0usize;
        for q in &live {
            if let Some(reg) = tested_register(q) {
                tested.insert(reg);
                per_state += 1;
            }
        }
        info.checkers_glued = per_state;
        for i in tested {
            rules.push(RewriteRule::new(
                &format!("check.R{i}"),
                Multiset::from_symbols([Symbols::reg_checker(i), registers[i].clone()]),
                Multiset::singleton(Symbols::reg_checker_primed(i)),
            )?);
        }
    }

    for (q, instr) in &m.entries {
        if !live.contains(q) || fused.contains(q) {
            continue;
        }
        match instr {
            Instruction::Stop => {}
            Instruction::Inc { reg, next } => {
                let mut rhs = Multiset::singleton(registers[*reg].clone());
                rhs = rhs.sum(&branch_rhs(next)?)?;
                let lhs = if level.p3 {
                    Multiset::from_symbols([Symbols::state(q), syms.phase_primed.clone()])
                } else {
                    Multiset::singleton(Symbols::state(q))
                };
                rules.push(RewriteRule::new(&format!("{q}.inc"), lhs, rhs)?);
            }
            Instruction::DecJz { reg, success, zero } => {
                let state = Symbols::state(q);
                let (checker, checker_primed) = if level.p4 {
                    (Symbols::reg_checker(*reg), Symbols::reg_checker_primed(*reg))
                } else {
                    (Symbols::checker(q), Symbols::checker_primed(q))
                };
                let judge = if level.p1 {
                    Symbols::primed(q)
                } else {
                    Symbols::double_primed(q)
                };
                if !level.p1 {
                    // q -> q' C_q ; q' -> q''
                    rules.push(RewriteRule::new(
                        &format!("{q}.enter"),
                        Multiset::singleton(state.clone()),
                        Multiset::from_symbols([Symbols::primed(q), checker.clone()]),
                    )?);
                    rules.push(RewriteRule::new(
                        &format!("{q}.tick"),
                        Multiset::singleton(Symbols::primed(q)),
                        Multiset::singleton(judge.clone()),
                    )?);
                } else if !level.p3 {
                    // q -> q'
                    rules.push(RewriteRule::new(
                        &format!("{q}.enter"),
                        Multiset::singleton(state.clone()),
                        Multiset::singleton(judge.clone()),
                    )?);
                }
                if !level.p4 {
                    rules.push(RewriteRule::new(
                        &format!("{q}.check"),
                        Multiset::from_symbols([checker.clone(), registers[*reg].clone()]),
                        Multiset::singleton(checker_primed.clone()),
                    )?);
                }
                let branch_lhs = |c: &Symbol| {
                    if level.p3 {
                        Multiset::from_symbols([
                            state.clone(),
                            syms.phase_primed.clone(),
                            c.clone(),
                        ])
                    } else {
                        Multiset::from_symbols([judge.clone(), c.clone()])
                    }
                };
                let succ_rule = RewriteRule::new(
                    &format!("{q}.succ"),
                    branch_lhs(&checker_primed),
                    branch_rhs(success)?,
                )?;
                let zero_rule = RewriteRule::new(
                    &format!("{q}.zero"),
                    branch_lhs(&checker),
                    branch_rhs(zero)?,
                )?;
                if level.p2 {
                    if fused.contains(success) {
                        info.branch_rules_rewritten += 1;
                    }
                    if fused.contains(zero) {
                        info.branch_rules_rewritten += 1;
                    }
                }
                let omit_zero = !opts.faithful_halt && *zero == m.final_state;
                rules.push(succ_rule);
                if !omit_zero {
                    rules.push(zero_rule);
                }
            }
            Instruction::Branch { .. } | Instruction::Dec { .. } => {
                unreachable!("lowered machines carry no branch or plain-dec instructions")
            }
        }
    }

    if level.p3 {
        info.ticks_glued = live
            .iter()
            .filter(|q| tested_register(q).is_some())
            .count();
    }

    if level.p1 {
        let mut protected: BTreeSet<Symbol> = registers.iter().cloned().collect();
        if let Some(e) = encoding_map.get(&m.start) {
            for s in e.symbols() {
                protected.insert(s.clone());
            }
        }
        let (new_rules, collapsed) = collapse_pure_renames(rules, &protected);
        rules = new_rules;
        info.renames_collapsed = collapsed;
    }

    // Assemble.
    let initial = encoding_map
        .get(&m.start)
        .cloned()
        .ok_or_else(|| Error::MalformedMachine("start state has no encoding".to_string()))?;
    let mut alphabet: BTreeSet<Symbol> = registers.iter().cloned().collect();
    for r in &rules {
        for s in r.lhs.symbols().chain(r.rhs.symbols()) {
            alphabet.insert(s.clone());
        }
    }
    for s in initial.symbols() {
        alphabet.insert(s.clone());
    }
    for e in encoding_map.values() {
        for s in e.symbols() {
            alphabet.insert(s.clone());
        }
    }
    let base = MpmrsSystem::new(alphabet, initial, rules)?;
    let register_set: BTreeSet<Symbol> = registers.iter().cloned().collect();
    let terminal: BTreeSet<Symbol> = opts
        .terminal_registers
        .iter()
        .map(|&i| registers[i].clone())
        .collect();
    let mut fsys = FsMpmrsSystem::new(base, register_set, terminal);
    fsys.encoding = Some(StateEncoding {
        map: encoding_map,
        register_symbols: registers,
        phase_symbols: if level.p3 {
            [syms.phase, syms.phase_primed].into_iter().collect()
        } else {
            BTreeSet::new()
        },
    });
    Ok((fsys, info))
}

/// The frozen fusion calibration for the built-in universal machine: the
/// first subset in ascending state-id order whose fused system has exactly
/// 56 rules of maximal size 5 (35 subsets tie; see the calibration search
/// shipped under `examples/`). Also recorded in `data/p2_calibration.txt`.
pub const U22_FUSION_CALIBRATION: &[&str] = &["q3", "q6", "q9"];

/// Options reproducing the published size/count table for the built-in
/// universal machine: default halting convention, size cap 5, and the
/// frozen fusion calibration.
pub fn u22_table_options() -> CompilationOptions {
    CompilationOptions {
        fusion_targets: Some(
            U22_FUSION_CALIBRATION
                .iter()
                .map(|s| StateId::new(s).expect("calibration names are valid"))
                .collect(),
        ),
        ..CompilationOptions::default()
    }
}

/// Parses the calibration file format: state ids separated by whitespace,
/// `#`-lines are comments.
pub fn parse_calibration(text: &str) -> Result<BTreeSet<StateId>> {
    let mut out = BTreeSet::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for tok in line.split_whitespace() {
            out.insert(StateId::new(tok)?);
        }
    }
    Ok(out)
}

/// The basic translation: one rule per increment, five per test-decrement
/// (enter, tick, check, and the two branch rules), with the zero-branch rule
/// targeting the final state omitted unless `faithful_halt` is set. Branch
/// and plain-decrement instructions are lowered first.
pub fn compile_basic(m: &RegisterMachine, opts: &CompilationOptions) -> Result<CompiledSystem> {
    let lowered = lower(m)?;
    let level = BTreeSet::new();
    let (system, _) = emit(&lowered, &level, opts)?;
    let (rule_count, max_rule_size) = stats(&system);
    Ok(CompiledSystem {
        system,
        machine: lowered,
        options: opts.clone(),
        level,
        report: PassReport {
            stages: vec![StageStats {
                stage: "basic".to_string(),
                rule_count,
                max_rule_size,
                states_eliminated: 0,
                rules_glued: 0,
            }],
        },
    })
}

/// Compiles and applies the requested passes in order.
pub fn compile_with_passes(
    m: &RegisterMachine,
    passes: &[Pass],
    opts: &CompilationOptions,
) -> Result<CompiledSystem> {
    let mut compiled = compile_basic(m, opts)?;
    for pass in passes {
        compiled = match pass {
            Pass::P1 => compiled.pass_checker_encoding()?,
            Pass::P2 => compiled.pass_fuse_increments()?,
            Pass::P3 => compiled.pass_phases()?,
            Pass::P4 => compiled.pass_shared_checkers()?,
        };
    }
    Ok(compiled)
}

// ---------------------------------------------------------------------------
// Co-simulation
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CosimWitness {
    pub input: Vec<u64>,
    pub system_step: usize,
    pub machine_step: usize,
    pub detail: String,
    pub system_config: Multiset,
    pub machine_config: RmConfiguration,
}

impl fmt::Display for CosimWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "input {:?}: {} [system step {}, machine step {}; system {}, machine {}]",
            self.input,
            self.detail,
            self.system_step,
            self.machine_step,
            self.system_config,
            self.machine_config
        )
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CosimVerdict {
    Equivalent {
        checkpoints: usize,
        machine_steps: usize,
        system_steps: usize,
    },
    Mismatch(Box<CosimWitness>),
    Inconclusive {
        system_steps: usize,
    },
}

impl CosimVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, CosimVerdict::Equivalent { .. })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CosimReport {
    pub verdicts: Vec<(Vec<u64>, CosimVerdict)>,
}

impl CosimReport {
    pub fn all_equivalent(&self) -> bool {
        self.verdicts.iter().all(|(_, v)| v.is_equivalent())
    }

    pub fn first_mismatch(&self) -> Option<&CosimWitness> {
        self.verdicts.iter().find_map(|(_, v)| match v {
            CosimVerdict::Mismatch(w) => Some(w.as_ref()),
            _ => None,
        })
    }
}

/// Runs the machine and the compiled system side by side on every input.
/// Whenever the system reaches a configuration whose state projection equals
/// a state encoding, the machine is advanced to that state and the full
/// register contents are compared exactly. The system must be deterministic
/// at every step, and on stabilization the machine must halt with the same
/// terminal-register content.
pub fn cosimulate(
    machine: &RegisterMachine,
    sys: &FsMpmrsSystem,
    inputs: &[Vec<u64>],
    max_system_steps: usize,
) -> Result<CosimReport> {
    let encoding = sys.encoding.as_ref().ok_or(Error::MissingEncoding)?;
    let mut verdicts = Vec::new();
    for input in inputs {
        let verdict = cosimulate_one(machine, sys, encoding, input, max_system_steps)?;
        verdicts.push((input.clone(), verdict));
    }
    Ok(CosimReport { verdicts })
}

fn cosimulate_one(
    machine: &RegisterMachine,
    sys: &FsMpmrsSystem,
    encoding: &StateEncoding,
    input: &[u64],
    max_system_steps: usize,
) -> Result<CosimVerdict> {
    if input.len() > machine.registers {
        return Err(Error::Invalid(format!(
            "input has {} registers, machine has {}",
            input.len(),
            machine.registers
        )));
    }
    let mut regs = input.to_vec();
    regs.resize(machine.registers, 0);

    let mut rm_cfg = RmConfiguration::new(machine.start.clone(), regs.clone());
    let mut rm_steps = 0usize;
    let mut rm_halted = false;
    let mut cfg = sys.initial_with(&encoding.register_multiset(&regs)?)?;
    let mut checkpoints = 1usize; // initial configuration is a checkpoint by construction

    let witness = |detail: String, system_step: usize, rm_steps: usize, cfg: &Multiset, rm_cfg: &RmConfiguration| {
        CosimVerdict::Mismatch(Box::new(CosimWitness {
            input: input.to_vec(),
            system_step,
            machine_step: rm_steps,
            detail,
            system_config: cfg.clone(),
            machine_config: rm_cfg.clone(),
        }))
    };

    for system_step in 1..=max_system_steps {
        let steps = maximal_steps(&sys.base, &cfg);
        if steps.is_empty() {
            // System halted by stability; the machine must reach its final
            // state within the lookahead and agree on the terminal registers.
            let mut advanced = 0;
            while !rm_halted {
                if advanced == CHECKPOINT_LOOKAHEAD {
                    return Ok(witness(
                        "system is stable but the machine keeps running".to_string(),
                        system_step,
                        rm_steps,
                        &cfg,
                        &rm_cfg,
                    ));
                }
                match rm_step(machine, &rm_cfg)? {
                    StepResult::Halted => rm_halted = true,
                    StepResult::Next(n) => {
                        rm_cfg = n;
                        rm_steps += 1;
                        advanced += 1;
                    }
                }
            }
            let machine_regs = encoding.register_multiset(&rm_cfg.regs)?;
            if sys.terminal_projection(&cfg) != machine_regs.project(&sys.terminal) {
                return Ok(witness(
                    "terminal projection differs from halting registers".to_string(),
                    system_step,
                    rm_steps,
                    &cfg,
                    &rm_cfg,
                ));
            }
            if cfg.project(&sys.registers) != machine_regs {
                return Ok(witness(
                    "residual register content differs from halting registers".to_string(),
                    system_step,
                    rm_steps,
                    &cfg,
                    &rm_cfg,
                ));
            }
            return Ok(CosimVerdict::Equivalent {
                checkpoints,
                machine_steps: rm_steps,
                system_steps: system_step - 1,
            });
        }

        let mut successors: BTreeSet<&Multiset> = BTreeSet::new();
        for (_, succ) in &steps {
            successors.insert(succ);
        }
        if successors.len() > 1 {
            let bags: Vec<String> = steps.iter().map(|(b, _)| b.to_string()).collect();
            return Ok(witness(
                format!(
                    "state-level nondeterminism: {} distinct successors via {}",
                    successors.len(),
                    bags.join(" / ")
                ),
                system_step,
                rm_steps,
                &cfg,
                &rm_cfg,
            ));
        }
        cfg = steps[0].1.clone();

        let proj = sys.state_projection(&cfg);
        if let Some(q) = encoding.state_for(&proj) {
            // checkpoint: advance the machine (at least one instruction) to q
            let mut advanced = 0;
            loop {
                if advanced > 0 && !rm_halted && rm_cfg.state == *q {
                    break;
                }
                if rm_halted || advanced == CHECKPOINT_LOOKAHEAD {
                    return Ok(witness(
                        format!("machine never reaches checkpoint state {q}"),
                        system_step,
                        rm_steps,
                        &cfg,
                        &rm_cfg,
                    ));
                }
                match rm_step(machine, &rm_cfg)? {
                    StepResult::Halted => {
                        if rm_cfg.state == *q {
                            // checkpoint at the final state itself
                            break;
                        }
                        rm_halted = true;
                    }
                    StepResult::Next(n) => {
                        rm_cfg = n;
                        rm_steps += 1;
                        advanced += 1;
                    }
                }
            }
            if cfg.project(&sys.registers) != encoding.register_multiset(&rm_cfg.regs)? {
                return Ok(witness(
                    format!("register contents differ at checkpoint {q}"),
                    system_step,
                    rm_steps,
                    &cfg,
                    &rm_cfg,
                ));
            }
            checkpoints += 1;
        }
    }
    Ok(CosimVerdict::Inconclusive {
        system_steps: max_system_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{m_move, st, u22};
    use crate::multiset::ms;

    #[test]
    fn basic_compilation_of_u22_has_73_rules_of_size_3() {
        let compiled = compile_basic(&u22(), &CompilationOptions::default()).unwrap();
        assert_eq!(compiled.stats(), (73, 3));
        assert!(compiled.system.validate().is_empty());
    }

    #[test]
    fn faithful_halt_adds_the_final_zero_rule() {
        let opts = CompilationOptions {
            faithful_halt: true,
            ..CompilationOptions::default()
        };
        let compiled = compile_basic(&u22(), &opts).unwrap();
        assert_eq!(compiled.stats(), (74, 3));
    }

    #[test]
    fn single_increment_machine_compiles_to_one_rule() {
        let m = RegisterMachine::new(
            1,
            st("q0"),
            st("qf"),
            vec![(
                st("q0"),
                Instruction::Inc {
                    reg: 0,
                    next: st("qf"),
                },
            )],
        );
        let compiled = compile_basic(&m, &CompilationOptions::default()).unwrap();
        assert_eq!(compiled.stats(), (1, 3));
        let rule = &compiled.system.base.rules[0];
        assert_eq!(rule.lhs, ms("q0"));
        assert_eq!(rule.rhs, ms("R0 qf"));
    }

    #[test]
    fn single_decjz_machine_with_faithful_halt_matches_the_five_rule_block() {
        let m = RegisterMachine::new(
            1,
            st("q0"),
            st("qf"),
            vec![(
                st("q0"),
                Instruction::DecJz {
                    reg: 0,
                    success: st("q0"),
                    zero: st("qf"),
                },
            )],
        );
        let opts = CompilationOptions {
            faithful_halt: true,
            ..CompilationOptions::default()
        };
        let compiled = compile_basic(&m, &opts).unwrap();
        assert_eq!(compiled.stats(), (5, 3));
        let labels: Vec<&str> = compiled
            .system
            .base
            .rules
            .iter()
            .map(|r| r.label.as_str())
            .collect();
        assert_eq!(
            labels,
            vec!["q0.enter", "q0.tick", "q0.check", "q0.succ", "q0.zero"]
        );
    }

    #[test]
    fn p1_rewrites_blocks_and_drops_dead_states() {
        let compiled = compile_basic(&u22(), &CompilationOptions::default())
            .unwrap()
            .pass_checker_encoding()
            .unwrap();
        // 12 four-rule blocks + one three-rule block (final zero rule omitted)
        // + 8 live increments; the unreachable increment state is dropped.
        assert_eq!(compiled.stats(), (59, 4));
        let enc = compiled.encoding();
        assert_eq!(enc.map.get(&st("q1")).unwrap(), &ms("C_q1 q1"));
        assert!(!enc.map.contains_key(&st("q29")));
        assert!(enc.inclusion_violations().is_empty());
    }

    #[test]
    fn collapse_pure_renames_merges_chains() {
        let rules = vec![
            RewriteRule::new("a", ms("q1"), ms("q2")).unwrap(),
            RewriteRule::new("b", ms("q2"), ms("q3 R0")).unwrap(),
        ];
        let (collapsed, n) = collapse_pure_renames(rules, &BTreeSet::new());
        assert_eq!(n, 1);
        assert_eq!(collapsed.len(), 1);
        assert_eq!(collapsed[0].lhs, ms("q1"));
        assert_eq!(collapsed[0].rhs, ms("q3 R0"));
    }

    #[test]
    fn fusion_candidates_of_u22() {
        let expected: BTreeSet<StateId> =
            ["q12", "q22", "q3", "q30", "q33", "q6", "q9"]
                .into_iter()
                .map(st)
                .collect();
        assert_eq!(fusion_candidates(&u22(), 5), expected);
        assert!(fusion_candidates(&u22(), 3).is_empty());
    }

    #[test]
    fn p2_with_calibrated_targets_gives_56_rules_of_size_5() {
        let opts = CompilationOptions {
            fusion_targets: Some(["q3", "q6", "q9"].into_iter().map(st).collect()),
            ..CompilationOptions::default()
        };
        let compiled = compile_with_passes(&u22(), &[Pass::P1, Pass::P2], &opts).unwrap();
        assert_eq!(compiled.stats(), (56, 5));
    }

    #[test]
    fn p2_respects_the_size_cap() {
        let opts = CompilationOptions {
            fusion_size_cap: 3,
            ..CompilationOptions::default()
        };
        let fused = compile_with_passes(&u22(), &[Pass::P1, Pass::P2], &opts).unwrap();
        let plain = compile_with_passes(&u22(), &[Pass::P1], &opts).unwrap();
        assert_eq!(fused.stats(), plain.stats());
    }

    #[test]
    fn p3_on_p1_gives_47_rules_of_size_6() {
        let compiled =
            compile_with_passes(&u22(), &[Pass::P1, Pass::P3], &CompilationOptions::default())
                .unwrap();
        assert_eq!(compiled.stats(), (47, 6));
        let enc = compiled.encoding();
        assert_eq!(enc.map.get(&st("q1")).unwrap(), &ms("C_q1 S q1"));
    }

    #[test]
    fn p4_shares_checkers_per_register() {
        let compiled = compile_with_passes(
            &u22(),
            &[Pass::P1, Pass::P3, Pass::P4],
            &CompilationOptions::default(),
        )
        .unwrap();
        let (count, size) = compiled.stats();
        assert!(size <= 6, "size was {size}");
        // u22 tests all eight registers, so 13 per-state checkers become 8.
        let checker_rules = compiled
            .system
            .base
            .rules
            .iter()
            .filter(|r| r.label.starts_with("check."))
            .count();
        assert_eq!(checker_rules, 8);
        assert_eq!(count, 42);
        let enc = compiled.encoding();
        assert_eq!(enc.map.get(&st("q16")).unwrap(), &ms("C5 S q16"));
        assert!(enc.inclusion_violations().is_empty());
    }

    #[test]
    fn pass_order_is_enforced() {
        let compiled = compile_basic(&u22(), &CompilationOptions::default()).unwrap();
        assert!(compiled.pass_fuse_increments().is_err());
        assert!(compiled.pass_shared_checkers().is_err());
    }

    #[test]
    fn m_move_cosimulates_at_every_level() {
        let m = m_move();
        let inputs: Vec<Vec<u64>> = vec![vec![2, 3], vec![0, 0], vec![5, 1]];
        for passes in [
            &[][..],
            &[Pass::P1][..],
            &[Pass::P1, Pass::P2][..],
            &[Pass::P1, Pass::P3][..],
            &[Pass::P1, Pass::P3, Pass::P4][..],
        ] {
            let compiled =
                compile_with_passes(&m, passes, &CompilationOptions::default()).unwrap();
            let report = compiled.cosimulate(&inputs, 10_000).unwrap();
            assert!(
                report.all_equivalent(),
                "passes {passes:?}: {:?}",
                report.first_mismatch()
            );
        }
    }

    #[test]
    fn fault_injection_is_detected() {
        let m = m_move();
        let mut compiled = compile_with_passes(&m, &[Pass::P1], &CompilationOptions::default())
            .unwrap();
        compiled
            .system
            .base
            .rules
            .retain(|r| r.label != "q0.succ");
        let report = compiled.cosimulate(&[vec![1, 2]], 1000).unwrap();
        assert!(!report.all_equivalent());
        assert!(report.first_mismatch().is_some());
    }

    #[test]
    fn branch_lowering_preserves_machine_behavior() {
        let branchy = RegisterMachine::new(
            2,
            st("q0"),
            st("qf"),
            vec![
                (
                    st("q0"),
                    Instruction::Branch {
                        reg: 1,
                        nonzero: st("q1"),
                        zero: st("qf"),
                    },
                ),
                (
                    st("q1"),
                    Instruction::Dec {
                        reg: 1,
                        next: st("q2"),
                    },
                ),
                (
                    st("q2"),
                    Instruction::Inc {
                        reg: 0,
                        next: st("q0"),
                    },
                ),
            ],
        );
        let lowered = lower(&branchy).unwrap();
        for input in [vec![0, 0], vec![0, 3], vec![2, 5]] {
            let a = crate::machine::rm_run(
                &branchy,
                &RmConfiguration::new(st("q0"), input.clone()),
                10_000,
                false,
            )
            .unwrap();
            let b = crate::machine::rm_run(
                &lowered,
                &RmConfiguration::new(st("q0"), input.clone()),
                10_000,
                false,
            )
            .unwrap();
            match (a.0, b.0) {
                (
                    crate::machine::RmOutcome::Halted { config: ca, .. },
                    crate::machine::RmOutcome::Halted { config: cb, .. },
                ) => assert_eq!(ca.regs, cb.regs),
                other => panic!("unexpected outcomes {other:?}"),
            }
        }
    }
}
