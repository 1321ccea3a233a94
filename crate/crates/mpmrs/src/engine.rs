//! Execution semantics: maximally parallel transitions, seeded and
//! exhaustive runs, stability, and the state-configuration analysis.
//!
//! A maximally parallel step applies a multiset of rules whose left sides
//! jointly fit the configuration such that no further rule fits the
//! remainder. `maximal_steps` enumerates every such rule bag together with
//! its successor by canonical backtracking: rule multiplicities are chosen
//! in non-decreasing rule-list order, which enumerates each bag exactly once
//! without generating permutations. Products of the current step are staged
//! separately and merged afterwards, so they are never consumed within the
//! same step.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::multiset::Multiset;
use crate::system::{FsMpmrsSystem, MpmrsSystem, RuleClass};

/// Caller-overridable default step bound.
pub const DEFAULT_MAX_STEPS: usize = 10_000;
/// Caller-overridable default configuration bound for exhaustive runs.
pub const DEFAULT_MAX_CONFIGS: usize = 100_000;

/// A multiset of rule labels: one maximally parallel batch.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct RuleBag {
    counts: BTreeMap<String, u64>,
}

impl RuleBag {
    pub fn add(&mut self, label: &str, n: u64) {
        if n > 0 {
            *self.counts.entry(label.to_string()).or_insert(0) += n;
        }
    }

    pub fn count(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(l, &n)| (l.as_str(), n))
    }

    /// Total number of rule applications in the batch.
    pub fn size(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn from_labels<'a, I: IntoIterator<Item = &'a str>>(labels: I) -> RuleBag {
        let mut bag = RuleBag::default();
        for l in labels {
            bag.add(l, 1);
        }
        bag
    }
}

impl fmt::Display for RuleBag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut first = true;
        for (label, n) in self.iter() {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            if n == 1 {
                write!(f, "{label}")?;
            } else {
                write!(f, "{label}^{n}")?;
            }
        }
        f.write_str("}")
    }
}

/// Outcome of a run.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RunKind {
    /// The run reached a configuration with no applicable rule.
    Stable(Multiset),
    /// The step bound was hit first.
    BoundExceeded(Multiset),
    /// All stable configurations reached by exhaustive exploration;
    /// `complete` is false iff a bound truncated the search.
    ResultSet {
        stable: BTreeSet<Multiset>,
        complete: bool,
    },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RunOutcome {
    pub kind: RunKind,
    pub steps_taken: usize,
    pub trace: Option<Vec<(RuleBag, Multiset)>>,
}

impl RunOutcome {
    pub fn is_stable(&self) -> bool {
        matches!(self.kind, RunKind::Stable(_))
    }
}

/// True iff no rule of the system applies to `cfg`.
pub fn is_stable(sys: &MpmrsSystem, cfg: &Multiset) -> bool {
    !sys.rules.iter().any(|r| r.applicable_to(cfg))
}

/// Enumerates every maximally parallel step from `cfg`: each entry is a
/// maximal rule bag with its successor configuration. The list is
/// deduplicated by (bag, successor) and sorted canonically; it is empty iff
/// `cfg` is stable. The successor set is `NEXT(cfg)`.
pub fn maximal_steps(sys: &MpmrsSystem, cfg: &Multiset) -> Vec<(RuleBag, Multiset)> {
    let mut out: BTreeSet<(RuleBag, Multiset)> = BTreeSet::new();
    let mut bag: Vec<u64> = vec![0; sys.rules.len()];
    recurse(sys, 0, cfg.clone(), Multiset::empty(), &mut bag, &mut out);
    return out.into_iter().collect();

    // One recursion level per rule; the multiplicity of the current rule is
    // swept in a loop, so the stack depth is bounded by the rule count.
    fn recurse(
        sys: &MpmrsSystem,
        idx: usize,
        remaining: Multiset,
        produced: Multiset,
        bag: &mut Vec<u64>,
        out: &mut BTreeSet<(RuleBag, Multiset)>,
    ) {
        if idx == sys.rules.len() {
            // Emit when the chosen batch is non-empty and maximal: no rule
            // of the system fits what is left unconsumed.
            if bag.iter().any(|&n| n > 0)
                && !sys.rules.iter().any(|r| r.applicable_to(&remaining))
            {
                let mut rb = RuleBag::default();
                for (i, &n) in bag.iter().enumerate() {
                    rb.add(&sys.rules[i].label, n);
                }
                let successor = remaining
                    .sum(&produced)
                    .expect("configuration counts stay within u64");
                out.insert((rb, successor));
            }
            return;
        }
        let rule = &sys.rules[idx];
        let mut remaining = remaining;
        let mut produced = produced;
        loop {
            recurse(sys, idx + 1, remaining.clone(), produced.clone(), bag, out);
            if !rule.applicable_to(&remaining) {
                break;
            }
            remaining = remaining
                .difference(&rule.lhs)
                .expect("applicability was checked");
            produced = produced
                .sum(&rule.rhs)
                .expect("configuration counts stay within u64");
            bag[idx] += 1;
        }
        bag[idx] = 0;
    }
}

/// Runs maximally parallel transitions, choosing uniformly by seed among the
/// entries of `maximal_steps`, until stable or `max_steps` transitions have
/// been performed. The same seed gives a bit-identical outcome.
pub fn run_seeded(
    sys: &MpmrsSystem,
    start: &Multiset,
    seed: u64,
    max_steps: usize,
    record_trace: bool,
) -> RunOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = start.clone();
    let mut trace = record_trace.then(Vec::new);
    for step in 0..max_steps {
        let steps = maximal_steps(sys, &cfg);
        if steps.is_empty() {
            return RunOutcome {
                kind: RunKind::Stable(cfg),
                steps_taken: step,
                trace,
            };
        }
        let (bag, succ) = &steps[rng.gen_range(0..steps.len())];
        cfg = succ.clone();
        if let Some(t) = trace.as_mut() {
            t.push((bag.clone(), cfg.clone()));
        }
    }
    if is_stable(sys, &cfg) {
        return RunOutcome {
            kind: RunKind::Stable(cfg),
            steps_taken: max_steps,
            trace,
        };
    }
    RunOutcome {
        kind: RunKind::BoundExceeded(cfg),
        steps_taken: max_steps,
        trace,
    }
}

/// Breadth-first exploration of the transition relation from the system's
/// initial multiset, deduplicating configurations. Returns all stable
/// configurations reached within the bounds; `complete` is true iff the
/// frontier emptied before either bound was hit. Cycles end exploration
/// without contributing results.
pub fn run_exhaustive(sys: &MpmrsSystem, max_steps: usize, max_configs: usize) -> RunOutcome {
    let mut visited: BTreeSet<Multiset> = BTreeSet::new();
    let mut stable: BTreeSet<Multiset> = BTreeSet::new();
    let mut frontier: Vec<Multiset> = Vec::new();
    let mut complete = true;

    visited.insert(sys.initial.clone());
    if is_stable(sys, &sys.initial) {
        stable.insert(sys.initial.clone());
    } else {
        frontier.push(sys.initial.clone());
    }

    let mut depth = 0;
    'outer: while !frontier.is_empty() {
        if depth == max_steps {
            complete = false;
            break;
        }
        let mut next = Vec::new();
        for cfg in &frontier {
            for (_, succ) in maximal_steps(sys, cfg) {
                if visited.contains(&succ) {
                    continue;
                }
                if visited.len() >= max_configs {
                    complete = false;
                    break 'outer;
                }
                visited.insert(succ.clone());
                if is_stable(sys, &succ) {
                    stable.insert(succ);
                } else {
                    next.push(succ);
                }
            }
        }
        frontier = next;
        depth += 1;
    }

    RunOutcome {
        kind: RunKind::ResultSet { stable, complete },
        steps_taken: depth,
        trace: None,
    }
}

/// Terminal-register projections of the stable configurations reachable from
/// the initial multiset: the computed result set of the system.
pub fn results(
    fsys: &FsMpmrsSystem,
    max_steps: usize,
    max_configs: usize,
) -> Result<BTreeSet<Multiset>> {
    let outcome = run_exhaustive(&fsys.base, max_steps, max_configs);
    match outcome.kind {
        RunKind::ResultSet { stable, .. } => Ok(stable
            .iter()
            .map(|cfg| fsys.terminal_projection(cfg))
            .collect()),
        _ => unreachable!("run_exhaustive always returns a result set"),
    }
}

// ---------------------------------------------------------------------------
// State-configuration analysis
// ---------------------------------------------------------------------------

/// One edge of the within-step exploration used by the state-configuration
/// analysis and by the flow-graph builder.
pub(crate) struct StepEdge<'a> {
    /// Unconsumed part before the application (registers padded).
    pub before_remaining: &'a Multiset,
    /// Staged products before the application.
    pub before_produced: &'a Multiset,
    /// The application starts the step (nothing applied yet).
    pub from_start: bool,
    pub rule_index: usize,
    pub after_remaining: &'a Multiset,
    pub after_produced: &'a Multiset,
    /// No pure-state rule applies to what is left after the application.
    pub after_rests: bool,
}

/// Walks all within-step runs from `seed + padded registers`, visiting every
/// application edge. Runs are canonicalized two ways: products are staged
/// (never consumed in the same step), and a register-dependent rule is only
/// taken when no pure-state rule applies to the unconsumed part, matching
/// the convention that pure state rules precede register-dependent ones.
/// Register padding realizes unbounded register content: `bound` copies of
/// every register symbol, where `bound` is the largest total register
/// demand of any left side times the seed size.
pub(crate) fn walk_state_runs<F: FnMut(StepEdge<'_>)>(
    fsys: &FsMpmrsSystem,
    seed: &Multiset,
    mut visit: F,
) -> Result<()> {
    let rules = &fsys.base.rules;
    let pure: Vec<bool> = rules
        .iter()
        .map(|r| fsys.classify_rule(r) == RuleClass::PureState)
        .collect();
    let max_reg_lhs: u64 = rules
        .iter()
        .map(|r| r.lhs.project(&fsys.registers).size())
        .max()
        .unwrap_or(0);
    let bound = max_reg_lhs.saturating_mul(seed.size());
    let mut padded = seed.clone();
    for r in &fsys.registers {
        padded.add(r.clone(), bound)?;
    }

    let start = (padded, Multiset::empty());
    let mut visited: BTreeSet<(Multiset, Multiset)> = BTreeSet::new();
    let mut stack: Vec<(Multiset, Multiset)> = vec![start.clone()];
    while let Some((remaining, produced)) = stack.pop() {
        if !visited.insert((remaining.clone(), produced.clone())) {
            continue;
        }
        let from_start = (remaining.clone(), produced.clone()) == start;
        let applicable: Vec<usize> = (0..rules.len())
            .filter(|&i| rules[i].applicable_to(&remaining))
            .collect();
        let any_pure = applicable.iter().any(|&i| pure[i]);
        for &i in &applicable {
            if any_pure && !pure[i] {
                continue;
            }
            let after_remaining = remaining.difference(&rules[i].lhs)?;
            let after_produced = produced.sum(&rules[i].rhs)?;
            let after_rests = !rules
                .iter()
                .enumerate()
                .any(|(j, r)| pure[j] && r.applicable_to(&after_remaining));
            visit(StepEdge {
                before_remaining: &remaining,
                before_produced: &produced,
                from_start,
                rule_index: i,
                after_remaining: &after_remaining,
                after_produced: &after_produced,
                after_rests,
            });
            stack.push((after_remaining, after_produced));
        }
    }
    Ok(())
}

/// Iteratively computes the set of state configurations of an FsMPMRS: the
/// least fixed point of exploring every known state configuration with
/// padded registers and collecting the non-register projections at every
/// point where the step can come to rest (no pure-state rule applies to the
/// unconsumed part). Errors if no fixed point is reached within `max_iters`
/// rounds — the system may not be finite-state.
pub fn state_configurations(
    fsys: &FsMpmrsSystem,
    max_iters: usize,
) -> Result<BTreeSet<Multiset>> {
    const HARD_CONFIG_CAP: usize = 200_000;

    let seed0 = fsys.state_projection(&fsys.base.initial);
    let mut known: BTreeSet<Multiset> = BTreeSet::new();
    known.insert(seed0.clone());
    let mut frontier: Vec<Multiset> = vec![seed0];

    for _ in 0..max_iters {
        if frontier.is_empty() {
            return Ok(known);
        }
        let mut discovered: BTreeSet<Multiset> = BTreeSet::new();
        for seed in &frontier {
            walk_state_runs(fsys, seed, |edge| {
                if edge.after_rests {
                    let merged = edge
                        .after_remaining
                        .sum(edge.after_produced)
                        .expect("projection sums stay within u64");
                    discovered.insert(fsys.state_projection(&merged));
                }
            })?;
        }
        frontier = discovered
            .into_iter()
            .filter(|cfg| known.insert(cfg.clone()))
            .collect();
        if known.len() > HARD_CONFIG_CAP {
            return Err(Error::StateSpaceNotClosed {
                iters: max_iters,
                known: known.len(),
            });
        }
    }
    if frontier.is_empty() {
        Ok(known)
    } else {
        Err(Error::StateSpaceNotClosed {
            iters: max_iters,
            known: known.len(),
        })
    }
}

/// Breadth-first reachable-configuration set (bounded), used by property
/// checks that scan every reachable configuration.
pub fn reachable_configs(
    sys: &MpmrsSystem,
    start: &Multiset,
    max_steps: usize,
    max_configs: usize,
) -> (BTreeSet<Multiset>, bool) {
    let mut visited: BTreeSet<Multiset> = BTreeSet::new();
    let mut frontier: VecDeque<Multiset> = VecDeque::new();
    let mut complete = true;
    visited.insert(start.clone());
    frontier.push_back(start.clone());
    let mut depth = 0;
    'outer: while !frontier.is_empty() && depth < max_steps {
        for _ in 0..frontier.len() {
            let cfg = frontier.pop_front().expect("frontier is non-empty");
            for (_, succ) in maximal_steps(sys, &cfg) {
                if visited.contains(&succ) {
                    continue;
                }
                if visited.len() >= max_configs {
                    complete = false;
                    break 'outer;
                }
                visited.insert(succ.clone());
                frontier.push_back(succ);
            }
        }
        depth += 1;
    }
    if !frontier.is_empty() {
        complete = false;
    }
    (visited, complete)
}

/// Register padding bound used by the analysis, exposed for diagnostics.
pub fn padding_bound(fsys: &FsMpmrsSystem, seed: &Multiset) -> u64 {
    let max_reg_lhs: u64 = fsys
        .base
        .rules
        .iter()
        .map(|r| r.lhs.project(&fsys.registers).size())
        .max()
        .unwrap_or(0);
    max_reg_lhs.saturating_mul(seed.size())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiset::ms;
    use crate::system::{example1, parse_system_str};

    fn bag(labels: &[&str]) -> RuleBag {
        RuleBag::from_labels(labels.iter().copied())
    }

    #[test]
    fn applicability_examples() {
        let sys = example1();
        let r1 = sys.base.rule("r1").unwrap();
        let r2 = sys.base.rule("r2").unwrap();
        let r3 = sys.base.rule("r3").unwrap();
        assert!(r1.applicable_to(&ms("A^2 B E^2")));
        assert!(!r3.applicable_to(&ms("A^2 B E^2")));
        assert!(r2.applicable_to(&ms("A E")));
    }

    #[test]
    fn apply_once_examples() {
        let sys = example1();
        let r1 = sys.base.rule("r1").unwrap();
        assert_eq!(r1.apply_to(&ms("A^2 B E^2")).unwrap(), ms("A C E^2"));
        let err = sys.base.rule("r3").unwrap().apply_to(&ms("A B")).unwrap_err();
        assert!(matches!(err, Error::NotApplicable { .. }));
        // identity rule a -> a leaves the configuration unchanged
        let idem = crate::system::RewriteRule::new("r", ms("a"), ms("a")).unwrap();
        assert_eq!(idem.apply_to(&ms("a^5")).unwrap(), ms("a^5"));
    }

    #[test]
    fn maximal_steps_on_example1_initial() {
        let sys = example1();
        let steps = maximal_steps(&sys.base, &ms("A^2 B E^2"));
        assert_eq!(
            steps,
            vec![
                (bag(&["r1", "r2"]), ms("C D E")),
                (bag(&["r2", "r2"]), ms("B D^2")),
            ]
        );
    }

    #[test]
    fn maximal_steps_on_dce() {
        let sys = example1();
        let steps = maximal_steps(&sys.base, &ms("C D E"));
        assert_eq!(steps, vec![(bag(&["r3"]), ms("A^2 B E F"))]);
    }

    #[test]
    fn stability_examples() {
        let sys = example1();
        assert!(is_stable(&sys.base, &ms("A C F^2")));
        assert!(!is_stable(&sys.base, &ms("A^2 B E^2")));
        assert!(is_stable(&sys.base, &Multiset::empty()));
        assert!(maximal_steps(&sys.base, &ms("A C F^2")).is_empty());
    }

    #[test]
    fn seeded_runs_cover_both_branches_deterministically() {
        let sys = example1();
        let mut seen_long = false;
        let mut seen_short = false;
        for seed in 0..64 {
            let out = run_seeded(&sys.base, &sys.base.initial, seed, 100, true);
            let again = run_seeded(&sys.base, &sys.base.initial, seed, 100, true);
            assert_eq!(out, again, "same seed must reproduce the run");
            match &out.kind {
                RunKind::Stable(cfg) if *cfg == ms("A C F^2") => {
                    assert_eq!(out.steps_taken, 5);
                    let trace: Vec<Multiset> = out
                        .trace
                        .as_ref()
                        .unwrap()
                        .iter()
                        .map(|(_, c)| c.clone())
                        .collect();
                    assert_eq!(
                        trace,
                        vec![
                            ms("C D E"),
                            ms("A^2 B E F"),
                            ms("C D F"),
                            ms("A^2 B F^2"),
                            ms("A C F^2"),
                        ]
                    );
                    seen_long = true;
                }
                RunKind::Stable(cfg) if *cfg == ms("B D^2") => {
                    assert_eq!(out.steps_taken, 1);
                    seen_short = true;
                }
                other => panic!("unexpected outcome {other:?}"),
            }
        }
        assert!(seen_long && seen_short, "both branches should be observed");
    }

    #[test]
    fn zero_step_bound_reports_bound_exceeded() {
        let sys = example1();
        let out = run_seeded(&sys.base, &sys.base.initial, 0, 0, false);
        assert_eq!(out.kind, RunKind::BoundExceeded(ms("A^2 B E^2")));
    }

    #[test]
    fn exhaustive_finds_both_stable_configurations() {
        let sys = example1();
        let out = run_exhaustive(&sys.base, 100, 1000);
        match out.kind {
            RunKind::ResultSet { stable, complete } => {
                assert!(complete);
                let expected: BTreeSet<Multiset> =
                    [ms("A C F^2"), ms("B D^2")].into_iter().collect();
                assert_eq!(stable, expected);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exhaustive_with_stable_initial() {
        let sys = parse_system_str("@alphabet a b\n@init a\nr: b -> a\n").unwrap();
        let out = run_exhaustive(&sys.base, 0, 0);
        match out.kind {
            RunKind::ResultSet { stable, complete } => {
                assert!(complete);
                assert_eq!(stable, [ms("a")].into_iter().collect());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exhaustive_detects_livelock_as_empty_complete_set() {
        let sys = parse_system_str("@alphabet a\n@init a\nr: a -> a\n").unwrap();
        let out = run_exhaustive(&sys.base, 100, 100);
        match out.kind {
            RunKind::ResultSet { stable, complete } => {
                assert!(complete);
                assert!(stable.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn results_projects_over_terminal_registers() {
        let sys = example1();
        let got = results(&sys, 100, 1000).unwrap();
        let expected: BTreeSet<Multiset> = [ms("F^2"), Multiset::empty()].into_iter().collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn results_on_trivial_systems() {
        let sys = parse_system_str("@alphabet A F\n@registers F\n@terminal F\n@init A\n").unwrap();
        assert_eq!(
            results(&sys, 10, 10).unwrap(),
            [Multiset::empty()].into_iter().collect()
        );
        let sys =
            parse_system_str("@alphabet A F\n@registers F\n@terminal F\n@init A F^3\n").unwrap();
        assert_eq!(results(&sys, 10, 10).unwrap(), [ms("F^3")].into_iter().collect());
    }

    #[test]
    fn state_configurations_of_example1() {
        let sys = example1();
        let got = state_configurations(&sys, 50).unwrap();
        let expected: BTreeSet<Multiset> =
            [ms("A^2 B"), ms("A C"), ms("C D")].into_iter().collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn state_configurations_without_rules() {
        let sys = parse_system_str("@alphabet A E\n@registers E\n@init A E^4\n").unwrap();
        let got = state_configurations(&sys, 5).unwrap();
        assert_eq!(got, [ms("A")].into_iter().collect());
    }

    #[test]
    fn state_configurations_reports_non_closure() {
        // Each step grows the state configuration, so no fixed point exists.
        let sys = parse_system_str("@alphabet a e\n@registers e\n@init a\nr: a -> a^2\n").unwrap();
        let err = state_configurations(&sys, 10).unwrap_err();
        assert!(matches!(err, Error::StateSpaceNotClosed { .. }));
    }

    #[test]
    fn padding_bound_matches_seed_size() {
        let sys = example1();
        // max register demand of any lhs is 1 (r2 consumes one E)
        assert_eq!(padding_bound(&sys, &ms("A^2 B")), 3);
    }
}
