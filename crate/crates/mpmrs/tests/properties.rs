//! Property suites: multiset algebra laws, engine invariants, and format
//! round trips, with the brute-force enumerator as the independent oracle.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{brute_force_maximal_steps, random_system, rng};
use mpmrs::engine::{is_stable, maximal_steps, run_seeded, RunKind};
use mpmrs::multiset::{Multiset, Symbol};

fn arb_multiset() -> impl Strategy<Value = Multiset> {
    proptest::collection::btree_map(0u8..6, 0u64..9, 0..6).prop_map(|m| {
        Multiset::from_pairs(m.into_iter().map(|(i, n)| {
            (
                Symbol::new(&format!("{}", (b'a' + i) as char)).expect("valid"),
                n,
            )
        }))
        .expect("small counts")
    })
}

proptest! {
    #[test]
    fn sum_then_difference_is_identity(x in arb_multiset(), y in arb_multiset()) {
        let sum = x.sum(&y).unwrap();
        prop_assert_eq!(sum.difference(&y).unwrap(), x);
    }

    #[test]
    fn inclusion_is_a_partial_order(x in arb_multiset(), y in arb_multiset(), z in arb_multiset()) {
        prop_assert!(x.is_submultiset(&x));
        if x.is_submultiset(&y) && y.is_submultiset(&x) {
            prop_assert_eq!(&x, &y);
        }
        if x.is_submultiset(&y) && y.is_submultiset(&z) {
            prop_assert!(x.is_submultiset(&z));
        }
        prop_assert!(x.is_submultiset(&x.sum(&y).unwrap()));
    }

    #[test]
    fn projection_distributes_over_sum(x in arb_multiset(), y in arb_multiset()) {
        let keep: BTreeSet<Symbol> =
            [Symbol::new("a").unwrap(), Symbol::new("c").unwrap()].into_iter().collect();
        let lhs = x.sum(&y).unwrap().project(&keep);
        let rhs = x.project(&keep).sum(&y.project(&keep)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn rendering_round_trips(x in arb_multiset()) {
        let text = x.to_string();
        let back: Multiset = text.parse().unwrap();
        prop_assert_eq!(back, x);
    }
}

#[test]
fn maximal_steps_agrees_with_brute_force_oracle() {
    let mut rng = rng(0x4d50_4d52);
    for case in 0..120 {
        let (sys, cfg) = random_system(&mut rng);
        let fast = maximal_steps(&sys, &cfg);
        let slow = brute_force_maximal_steps(&sys, &cfg);
        assert_eq!(fast, slow, "case {case}: system {:?} cfg {cfg}", sys.rules);
    }
}

#[test]
fn maximality_conditions_hold_on_every_step() {
    let mut rng = rng(0xbead);
    for _ in 0..120 {
        let (sys, cfg) = random_system(&mut rng);
        for (bag, succ) in maximal_steps(&sys, &cfg) {
            let mut demand = Multiset::empty();
            let mut produce = Multiset::empty();
            for (label, n) in bag.iter() {
                let rule = sys.rule(label).unwrap();
                demand = demand.sum(&rule.lhs.scaled(n).unwrap()).unwrap();
                produce = produce.sum(&rule.rhs.scaled(n).unwrap()).unwrap();
            }
            assert!(demand.is_submultiset(&cfg));
            let remainder = cfg.difference(&demand).unwrap();
            assert!(!sys.rules.iter().any(|r| r.applicable_to(&remainder)));
            assert_eq!(remainder.sum(&produce).unwrap(), succ);
        }
    }
}

#[test]
fn successor_set_is_invariant_under_rule_permutation() {
    let mut rng = rng(0x5eed);
    for _ in 0..80 {
        let (sys, cfg) = random_system(&mut rng);
        let baseline: BTreeSet<Multiset> = maximal_steps(&sys, &cfg)
            .into_iter()
            .map(|(_, s)| s)
            .collect();
        let mut permuted = sys.clone();
        permuted.rules.reverse();
        let reversed: BTreeSet<Multiset> = maximal_steps(&permuted, &cfg)
            .into_iter()
            .map(|(_, s)| s)
            .collect();
        assert_eq!(baseline, reversed);
        if permuted.rules.len() > 2 {
            permuted.rules.rotate_left(1);
            let rotated: BTreeSet<Multiset> = maximal_steps(&permuted, &cfg)
                .into_iter()
                .map(|(_, s)| s)
                .collect();
            assert_eq!(baseline, rotated);
        }
    }
}

#[test]
fn stability_iff_no_maximal_step() {
    let mut rng = rng(0x57ab);
    for _ in 0..120 {
        let (sys, cfg) = random_system(&mut rng);
        assert_eq!(is_stable(&sys, &cfg), maximal_steps(&sys, &cfg).is_empty());
    }
}

#[test]
fn seeded_runs_are_reproducible_and_end_consistently() {
    // Short bound: random rules may grow configurations geometrically.
    let mut rng = rng(0x0e11);
    for seed in 0..40 {
        let (sys, _) = random_system(&mut rng);
        let a = run_seeded(&sys, &sys.initial, seed, 8, true);
        let b = run_seeded(&sys, &sys.initial, seed, 8, true);
        assert_eq!(a, b);
        if let RunKind::Stable(cfg) = &a.kind {
            assert!(is_stable(&sys, cfg));
        }
    }
}
