//! Deterministic register machines and the built-in 22-instruction strongly
//! universal machine over eight registers.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A state identifier token, e.g. `q1`, `q33`, `qf`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(Arc<str>);

impl StateId {
    pub fn new(name: &str) -> Result<StateId> {
        if name.is_empty() || name.chars().any(|c| c.is_whitespace()) {
            return Err(Error::MalformedMachine(format!("bad state id {name:?}")));
        }
        Ok(StateId(Arc::from(name)))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateId({})", self.0)
    }
}

/// Shorthand constructor; panics on malformed names. For embedded machines
/// and tests.
pub fn st(name: &str) -> StateId {
    StateId::new(name).expect("valid state id")
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Instruction {
    /// Increment the register, go to `next`.
    Inc { reg: usize, next: StateId },
    /// Decrement the register, go to `next`; decrementing zero is an
    /// execution error (lower to `DecJz` first to make it total).
    Dec { reg: usize, next: StateId },
    /// Jump on register content without modifying it.
    Branch {
        reg: usize,
        nonzero: StateId,
        zero: StateId,
    },
    /// Decrement if possible and go to `success`, otherwise go to `zero`.
    DecJz {
        reg: usize,
        success: StateId,
        zero: StateId,
    },
    Stop,
}

impl Instruction {
    pub fn register(&self) -> Option<usize> {
        match self {
            Instruction::Inc { reg, .. }
            | Instruction::Dec { reg, .. }
            | Instruction::Branch { reg, .. }
            | Instruction::DecJz { reg, .. } => Some(*reg),
            Instruction::Stop => None,
        }
    }

    pub fn targets(&self) -> Vec<&StateId> {
        match self {
            Instruction::Inc { next, .. } | Instruction::Dec { next, .. } => vec![next],
            Instruction::Branch { nonzero, zero, .. } => vec![nonzero, zero],
            Instruction::DecJz { success, zero, .. } => vec![success, zero],
            Instruction::Stop => vec![],
        }
    }
}

/// A deterministic register machine: every state carries at most one
/// instruction, and reaching the final state halts the machine.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RegisterMachine {
    pub registers: usize,
    pub start: StateId,
    pub final_state: StateId,
    /// Source-order instruction list; duplicates are diagnosed, the first
    /// entry wins during execution.
    pub entries: Vec<(StateId, Instruction)>,
}

impl RegisterMachine {
    pub fn new(
        registers: usize,
        start: StateId,
        final_state: StateId,
        entries: Vec<(StateId, Instruction)>,
    ) -> RegisterMachine {
        RegisterMachine {
            registers,
            start,
            final_state,
            entries,
        }
    }

    pub fn instruction(&self, state: &StateId) -> Option<&Instruction> {
        self.entries
            .iter()
            .find(|(s, _)| s == state)
            .map(|(_, i)| i)
    }

    /// Number of listed instructions (`Stop` on the final state not counted).
    pub fn instruction_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|(_, i)| !matches!(i, Instruction::Stop))
            .count()
    }

    pub fn states(&self) -> BTreeSet<StateId> {
        let mut out: BTreeSet<StateId> = BTreeSet::new();
        out.insert(self.start.clone());
        out.insert(self.final_state.clone());
        for (s, i) in &self.entries {
            out.insert(s.clone());
            for t in i.targets() {
                out.insert(t.clone());
            }
        }
        out
    }

    /// States reachable from the start state along instruction targets.
    pub fn reachable_states(&self) -> BTreeSet<StateId> {
        let mut seen: BTreeSet<StateId> = BTreeSet::new();
        let mut stack = vec![self.start.clone()];
        while let Some(s) = stack.pop() {
            if !seen.insert(s.clone()) {
                continue;
            }
            if let Some(i) = self.instruction(&s) {
                for t in i.targets() {
                    if !seen.contains(t) {
                        stack.push(t.clone());
                    }
                }
            }
        }
        seen
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RmConfiguration {
    pub state: StateId,
    pub regs: Vec<u64>,
}

impl RmConfiguration {
    pub fn new(state: StateId, regs: Vec<u64>) -> RmConfiguration {
        RmConfiguration { state, regs }
    }
}

impl fmt::Display for RmConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.state)?;
        for r in &self.regs {
            write!(f, ", {r}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StepResult {
    Next(RmConfiguration),
    Halted,
}

/// Executes one instruction. Halts iff the configuration sits at the final
/// state; a non-final state without an instruction is a malformed machine.
pub fn rm_step(m: &RegisterMachine, c: &RmConfiguration) -> Result<StepResult> {
    if c.state == m.final_state {
        return Ok(StepResult::Halted);
    }
    let instr = m.instruction(&c.state).ok_or_else(|| {
        Error::MalformedMachine(format!("state {} has no instruction", c.state))
    })?;
    let check_reg = |reg: usize| -> Result<usize> {
        if reg >= m.registers {
            Err(Error::MalformedMachine(format!(
                "register {reg} out of range (machine has {})",
                m.registers
            )))
        } else {
            Ok(reg)
        }
    };
    let next = match instr {
        Instruction::Stop => return Ok(StepResult::Halted),
        Instruction::Inc { reg, next } => {
            let reg = check_reg(*reg)?;
            let mut regs = c.regs.clone();
            regs[reg] = regs[reg]
                .checked_add(1)
                .ok_or_else(|| Error::Execution(format!("register {reg} overflow")))?;
            RmConfiguration::new(next.clone(), regs)
        }
        Instruction::Dec { reg, next } => {
            let reg = check_reg(*reg)?;
            if c.regs[reg] == 0 {
                return Err(Error::Execution(format!(
                    "decrement of empty register {reg} in state {}",
                    c.state
                )));
            }
            let mut regs = c.regs.clone();
            regs[reg] -= 1;
            RmConfiguration::new(next.clone(), regs)
        }
        Instruction::Branch { reg, nonzero, zero } => {
            let reg = check_reg(*reg)?;
            let target = if c.regs[reg] > 0 { nonzero } else { zero };
            RmConfiguration::new(target.clone(), c.regs.clone())
        }
        Instruction::DecJz { reg, success, zero } => {
            let reg = check_reg(*reg)?;
            if c.regs[reg] > 0 {
                let mut regs = c.regs.clone();
                regs[reg] -= 1;
                RmConfiguration::new(success.clone(), regs)
            } else {
                RmConfiguration::new(zero.clone(), c.regs.clone())
            }
        }
    };
    Ok(StepResult::Next(next))
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RmOutcome {
    Halted { config: RmConfiguration, steps: usize },
    BoundExceeded { config: RmConfiguration },
}

/// Iterates `rm_step` until halting or the step bound. The trace, when
/// recorded, lists the configuration after each executed instruction, so its
/// length equals the step count.
pub fn rm_run(
    m: &RegisterMachine,
    input: &RmConfiguration,
    max_steps: usize,
    record_trace: bool,
) -> Result<(RmOutcome, Option<Vec<RmConfiguration>>)> {
    if input.regs.len() != m.registers {
        return Err(Error::MalformedMachine(format!(
            "input has {} registers, machine has {}",
            input.regs.len(),
            m.registers
        )));
    }
    let mut trace = record_trace.then(Vec::new);
    let mut cfg = input.clone();
    for step in 0..max_steps {
        match rm_step(m, &cfg)? {
            StepResult::Halted => {
                return Ok((
                    RmOutcome::Halted {
                        config: cfg,
                        steps: step,
                    },
                    trace,
                ))
            }
            StepResult::Next(next) => {
                cfg = next;
                if let Some(t) = trace.as_mut() {
                    t.push(cfg.clone());
                }
            }
        }
    }
    if matches!(rm_step(m, &cfg)?, StepResult::Halted) {
        return Ok((
            RmOutcome::Halted {
                config: cfg,
                steps: max_steps,
            },
            trace,
        ));
    }
    Ok((RmOutcome::BoundExceeded { config: cfg }, trace))
}

/// A diagnostic produced by [`validate_machine`]; warnings, not errors.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum MachineDiagnostic {
    DeterminismViolation { state: StateId },
    RegisterOutOfRange { state: StateId, reg: usize },
    UnreachableState { state: StateId },
    MissingInstruction { state: StateId },
    FinalStateHasInstruction { state: StateId },
    StopOutsideFinal { state: StateId },
}

impl fmt::Display for MachineDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MachineDiagnostic::DeterminismViolation { state } => {
                write!(f, "state {state} carries more than one instruction")
            }
            MachineDiagnostic::RegisterOutOfRange { state, reg } => {
                write!(f, "state {state} uses register {reg} out of range")
            }
            MachineDiagnostic::UnreachableState { state } => {
                write!(f, "state {state} is unreachable from the start state")
            }
            MachineDiagnostic::MissingInstruction { state } => {
                write!(f, "non-final state {state} has no instruction")
            }
            MachineDiagnostic::FinalStateHasInstruction { state } => {
                write!(f, "final state {state} carries a non-stop instruction")
            }
            MachineDiagnostic::StopOutsideFinal { state } => {
                write!(f, "stop instruction outside the final state {state}")
            }
        }
    }
}

/// Checks determinism, register bounds, reachability from the start state,
/// and final-state conventions.
pub fn validate_machine(m: &RegisterMachine) -> Vec<MachineDiagnostic> {
    let mut out = Vec::new();
    let mut seen: BTreeSet<&StateId> = BTreeSet::new();
    for (s, i) in &m.entries {
        if !seen.insert(s) {
            out.push(MachineDiagnostic::DeterminismViolation { state: s.clone() });
        }
        if let Some(reg) = i.register() {
            if reg >= m.registers {
                out.push(MachineDiagnostic::RegisterOutOfRange {
                    state: s.clone(),
                    reg,
                });
            }
        }
        match i {
            Instruction::Stop if *s != m.final_state => {
                out.push(MachineDiagnostic::StopOutsideFinal { state: s.clone() })
            }
            _ if *s == m.final_state && !matches!(i, Instruction::Stop) => {
                out.push(MachineDiagnostic::FinalStateHasInstruction { state: s.clone() })
            }
            _ => {}
        }
    }
    let reachable = m.reachable_states();
    for s in m.states() {
        if !reachable.contains(&s) {
            out.push(MachineDiagnostic::UnreachableState { state: s });
        }
    }
    for s in &reachable {
        if *s != m.final_state && m.instruction(s).is_none() {
            out.push(MachineDiagnostic::MissingInstruction { state: s.clone() });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Built-in machines
// ---------------------------------------------------------------------------

fn u22_entries() -> Vec<(StateId, Instruction)> {
    let inc = |s: &str, reg: usize, next: &str| {
        (
            st(s),
            Instruction::Inc {
                reg,
                next: st(next),
            },
        )
    };
    let decjz = |s: &str, reg: usize, success: &str, zero: &str| {
        (
            st(s),
            Instruction::DecJz {
                reg,
                success: st(success),
                zero: st(zero),
            },
        )
    };
    vec![
        decjz("q1", 1, "q3", "q6"),
        inc("q3", 7, "q1"),
        decjz("q4", 5, "q6", "q7"),
        inc("q6", 6, "q4"),
        decjz("q7", 6, "q9", "q4"),
        inc("q9", 5, "q10"),
        decjz("q10", 7, "q12", "q13"),
        inc("q12", 1, "q7"),
        decjz("q13", 6, "q33", "q1"),
        inc("q33", 6, "q14"),
        decjz("q14", 4, "q1", "q16"),
        decjz("q16", 5, "q18", "q23"),
        decjz("q18", 5, "q20", "q27"),
        decjz("q20", 5, "q22", "q30"),
        inc("q22", 4, "q16"),
        decjz("q23", 2, "q32", "q25"),
        decjz("q25", 0, "q1", "q32"),
        decjz("q27", 3, "q32", "q1"),
        inc("q29", 0, "q1"),
        inc("q30", 2, "q31"),
        inc("q31", 3, "q32"),
        decjz("q32", 4, "q1", "qf"),
    ]
}

/// The strongly universal 22-instruction register machine over registers
/// R0–R7 (9 increments, 13 test-decrements), transcribed exactly as listed,
/// including the q25 instruction and the increment at q29 that no listed
/// instruction targets. `validate_machine` flags q29 as unreachable.
pub fn u22() -> RegisterMachine {
    RegisterMachine::new(8, st("q1"), st("qf"), u22_entries())
}

/// Non-canonical variant for experiments: the q25 success target is changed
/// to q29 so that the decrement of R0 is immediately undone, turning q25
/// into a pure zero test and making q29 reachable. This encodes a conjecture
/// about the intent of the listed program, not the listed program itself.
pub fn u22_patched() -> RegisterMachine {
    let mut entries = u22_entries();
    for (s, i) in entries.iter_mut() {
        if s.name() == "q25" {
            *i = Instruction::DecJz {
                reg: 0,
                success: st("q29"),
                zero: st("q32"),
            };
        }
    }
    RegisterMachine::new(8, st("q1"), st("qf"), entries)
}

/// Two-instruction mover: drains R1 into R0, then halts.
pub fn m_move() -> RegisterMachine {
    RegisterMachine::new(
        2,
        st("q0"),
        st("qf"),
        vec![
            (
                st("q0"),
                Instruction::DecJz {
                    reg: 1,
                    success: st("q1"),
                    zero: st("qf"),
                },
            ),
            (
                st("q1"),
                Instruction::Inc {
                    reg: 0,
                    next: st("q0"),
                },
            ),
        ],
    )
}

/// Parses a file of whitespace-separated register vectors, one per line;
/// `#`-lines are comments. Used for the shipped input sample sets.
pub fn parse_input_vectors(text: &str) -> Result<Vec<Vec<u64>>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let regs: std::result::Result<Vec<u64>, _> =
            line.split_whitespace().map(|t| t.parse()).collect();
        out.push(regs.map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("bad register vector {line:?}"),
        })?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------
//
//   @start q1
//   @final qf
//   @registers 8
//   q1 DECJZ 1 q3 q6
//   q3 INC 7 q1
//   qf STOP

pub fn parse_machine_str(text: &str) -> Result<RegisterMachine> {
    let mut start: Option<StateId> = None;
    let mut final_state: Option<StateId> = None;
    let mut registers: Option<usize> = None;
    let mut entries: Vec<(StateId, Instruction)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "@start" if toks.len() == 2 => start = Some(StateId::new(toks[1])?),
            "@final" if toks.len() == 2 => final_state = Some(StateId::new(toks[1])?),
            "@registers" if toks.len() == 2 => {
                registers = Some(
                    toks[1]
                        .parse()
                        .map_err(|_| err(format!("bad register count {:?}", toks[1])))?,
                )
            }
            t if t.starts_with('@') => return Err(err(format!("unknown directive {line:?}"))),
            _ => {
                let state = StateId::new(toks[0])?;
                let reg = |i: usize| -> Result<usize> {
                    toks.get(i)
                        .ok_or_else(|| err("missing register".to_string()))?
                        .parse()
                        .map_err(|_| err(format!("bad register {:?}", toks[i])))
                };
                let target = |i: usize| -> Result<StateId> {
                    StateId::new(
                        toks.get(i)
                            .ok_or_else(|| err("missing target state".to_string()))?,
                    )
                };
                let instr = match (toks.get(1).copied(), toks.len()) {
                    (Some("INC"), 4) => Instruction::Inc {
                        reg: reg(2)?,
                        next: target(3)?,
                    },
                    (Some("DEC"), 4) => Instruction::Dec {
                        reg: reg(2)?,
                        next: target(3)?,
                    },
                    (Some("BRANCH"), 5) => Instruction::Branch {
                        reg: reg(2)?,
                        nonzero: target(3)?,
                        zero: target(4)?,
                    },
                    (Some("DECJZ"), 5) => Instruction::DecJz {
                        reg: reg(2)?,
                        success: target(3)?,
                        zero: target(4)?,
                    },
                    (Some("STOP"), 2) => Instruction::Stop,
                    _ => return Err(err(format!("cannot parse instruction {line:?}"))),
                };
                if entries.iter().any(|(s, _)| *s == state) {
                    return Err(err(format!("duplicate instruction for state {state}")));
                }
                entries.push((state, instr));
            }
        }
    }

    let start = start.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "missing @start".to_string(),
    })?;
    let final_state = final_state.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "missing @final".to_string(),
    })?;
    let registers = registers.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "missing @registers".to_string(),
    })?;
    // a trailing `qf STOP` line is the explicit form of the implicit halt
    entries.retain(|(s, i)| !(matches!(i, Instruction::Stop) && *s == final_state));
    Ok(RegisterMachine::new(registers, start, final_state, entries))
}

/// Canonical writer: header, instructions sorted by state id (numeric-aware),
/// and an explicit stop line for the final state.
pub fn write_machine(m: &RegisterMachine) -> String {
    let mut out = String::new();
    out.push_str(&format!("@start {}\n", m.start));
    out.push_str(&format!("@final {}\n", m.final_state));
    out.push_str(&format!("@registers {}\n", m.registers));
    let key = |s: &StateId| -> (String, u64) {
        let name = s.name();
        let split = name.find(|c: char| c.is_ascii_digit()).unwrap_or(name.len());
        let (prefix, digits) = name.split_at(split);
        (prefix.to_string(), digits.parse().unwrap_or(u64::MAX))
    };
    let mut entries: Vec<&(StateId, Instruction)> = m.entries.iter().collect();
    entries.sort_by_key(|(s, _)| key(s));
    for (s, i) in entries {
        let line = match i {
            Instruction::Inc { reg, next } => format!("{s} INC {reg} {next}"),
            Instruction::Dec { reg, next } => format!("{s} DEC {reg} {next}"),
            Instruction::Branch { reg, nonzero, zero } => {
                format!("{s} BRANCH {reg} {nonzero} {zero}")
            }
            Instruction::DecJz { reg, success, zero } => {
                format!("{s} DECJZ {reg} {success} {zero}")
            }
            Instruction::Stop => format!("{s} STOP"),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(&format!("{} STOP\n", m.final_state));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn u22_input(vals: &[(usize, u64)]) -> RmConfiguration {
        let mut regs = vec![0u64; 8];
        for &(i, v) in vals {
            regs[i] = v;
        }
        RmConfiguration::new(st("q1"), regs)
    }

    #[test]
    fn u22_shape() {
        let m = u22();
        assert_eq!(m.instruction_count(), 22);
        let incs = m
            .entries
            .iter()
            .filter(|(_, i)| matches!(i, Instruction::Inc { .. }))
            .count();
        let decs = m
            .entries
            .iter()
            .filter(|(_, i)| matches!(i, Instruction::DecJz { .. }))
            .count();
        assert_eq!((incs, decs), (9, 13));
        assert_eq!(m.registers, 8);
        assert_eq!(
            m.instruction(&st("q16")),
            Some(&Instruction::DecJz {
                reg: 5,
                success: st("q18"),
                zero: st("q23"),
            })
        );
    }

    #[test]
    fn u22_steps_match_listed_instructions() {
        let m = u22();
        // success branch of q1 decrements R1 and moves to q3
        let c = u22_input(&[(1, 5)]);
        match rm_step(&m, &c).unwrap() {
            StepResult::Next(n) => {
                assert_eq!(n.state, st("q3"));
                assert_eq!(n.regs[1], 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        // zero branch of q1 keeps registers and moves to q6
        let c = u22_input(&[]);
        match rm_step(&m, &c).unwrap() {
            StepResult::Next(n) => {
                assert_eq!(n.state, st("q6"));
                assert_eq!(n.regs[1], 0);
            }
            other => panic!("unexpected {other:?}"),
        }
        // q3 increments R7 and returns to q1
        let c = RmConfiguration::new(st("q3"), vec![0; 8]);
        match rm_step(&m, &c).unwrap() {
            StepResult::Next(n) => {
                assert_eq!(n.state, st("q1"));
                assert_eq!(n.regs[7], 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn u22_flags_q29_unreachable() {
        let diags = validate_machine(&u22());
        assert_eq!(
            diags,
            vec![MachineDiagnostic::UnreachableState { state: st("q29") }]
        );
        // the patched variant makes q29 reachable
        assert!(validate_machine(&u22_patched()).is_empty());
    }

    #[test]
    fn m_move_runs_in_seven_steps() {
        let m = m_move();
        let input = RmConfiguration::new(st("q0"), vec![2, 3]);
        let (outcome, trace) = rm_run(&m, &input, 100, true).unwrap();
        match outcome {
            RmOutcome::Halted { config, steps } => {
                assert_eq!(config.state, st("qf"));
                assert_eq!(config.regs, vec![5, 0]);
                assert_eq!(steps, 7);
                assert_eq!(trace.unwrap().len(), 7);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(validate_machine(&m).is_empty());
    }

    #[test]
    fn zero_bound_reports_bound_exceeded() {
        let m = m_move();
        let input = RmConfiguration::new(st("q0"), vec![0, 1]);
        let (outcome, _) = rm_run(&m, &input, 0, false).unwrap();
        assert!(matches!(outcome, RmOutcome::BoundExceeded { .. }));
    }

    #[test]
    fn plain_dec_on_zero_is_an_error() {
        let m = RegisterMachine::new(
            1,
            st("q0"),
            st("qf"),
            vec![(
                st("q0"),
                Instruction::Dec {
                    reg: 0,
                    next: st("qf"),
                },
            )],
        );
        let c = RmConfiguration::new(st("q0"), vec![0]);
        assert!(matches!(rm_step(&m, &c), Err(Error::Execution(_))));
    }

    #[test]
    fn missing_instruction_is_malformed() {
        let m = RegisterMachine::new(1, st("q0"), st("qf"), vec![]);
        let c = RmConfiguration::new(st("q0"), vec![0]);
        assert!(matches!(rm_step(&m, &c), Err(Error::MalformedMachine(_))));
    }

    #[test]
    fn duplicate_instruction_diagnosed() {
        let m = RegisterMachine::new(
            1,
            st("q0"),
            st("qf"),
            vec![
                (
                    st("q0"),
                    Instruction::Inc {
                        reg: 0,
                        next: st("qf"),
                    },
                ),
                (
                    st("q0"),
                    Instruction::Inc {
                        reg: 0,
                        next: st("q0"),
                    },
                ),
            ],
        );
        assert!(validate_machine(&m)
            .iter()
            .any(|d| matches!(d, MachineDiagnostic::DeterminismViolation { .. })));
    }

    #[test]
    fn machine_text_round_trips() {
        for m in [u22(), u22_patched(), m_move()] {
            let text = write_machine(&m);
            let back = parse_machine_str(&text).unwrap();
            assert_eq!(back.registers, m.registers);
            assert_eq!(back.start, m.start);
            assert_eq!(back.final_state, m.final_state);
            // entry order is canonicalized by the writer, compare as sets
            let a: BTreeMap<_, _> = m.entries.iter().cloned().collect();
            let b: BTreeMap<_, _> = back.entries.iter().cloned().collect();
            assert_eq!(a, b);
            assert_eq!(write_machine(&back), text);
        }
    }

    #[test]
    fn determinism_of_runs() {
        let m = u22();
        let input = u22_input(&[(1, 2), (5, 3)]);
        let a = rm_run(&m, &input, 500, true).unwrap();
        let b = rm_run(&m, &input, 500, true).unwrap();
        assert_eq!(a, b);
    }
}
