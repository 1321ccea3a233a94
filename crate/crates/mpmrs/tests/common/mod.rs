//! Shared test support: an independent brute-force enumerator for maximal
//! rule bags, and a seeded generator of random small systems.
//!
//! The oracle deliberately avoids the engine's canonical backtracking: it
//! enumerates every multiplicity vector up to the saturation bound and
//! filters by the two maximality conditions directly.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mpmrs::engine::RuleBag;
use mpmrs::multiset::{Multiset, Symbol};
use mpmrs::system::{MpmrsSystem, RewriteRule};

/// All maximal rule bags applicable to `cfg`, with successors, by exhaustive
/// enumeration of multiplicity vectors bounded by the configuration size.
pub fn brute_force_maximal_steps(
    sys: &MpmrsSystem,
    cfg: &Multiset,
) -> Vec<(RuleBag, Multiset)> {
    let bound = cfg.size();
    let mut out: BTreeSet<(RuleBag, Multiset)> = BTreeSet::new();
    let mut counts = vec![0u64; sys.rules.len()];
    enumerate(sys, cfg, 0, bound, &mut counts, &mut out);
    return out.into_iter().collect();

    fn enumerate(
        sys: &MpmrsSystem,
        cfg: &Multiset,
        idx: usize,
        bound: u64,
        counts: &mut Vec<u64>,
        out: &mut BTreeSet<(RuleBag, Multiset)>,
    ) {
        if idx == sys.rules.len() {
            check(sys, cfg, counts, out);
            return;
        }
        for n in 0..=bound {
            counts[idx] = n;
            // feasibility: the partial demand must still fit
            let mut demand = Multiset::empty();
            let mut feasible = true;
            for (i, &c) in counts.iter().enumerate().take(idx + 1) {
                match sys.rules[i].lhs.scaled(c).and_then(|m| demand.sum(&m)) {
                    Ok(d) => demand = d,
                    Err(_) => {
                        feasible = false;
                        break;
                    }
                }
            }
            if !feasible || !demand.is_submultiset(cfg) {
                break;
            }
            enumerate(sys, cfg, idx + 1, bound, counts, out);
        }
        counts[idx] = 0;
    }

    fn check(
        sys: &MpmrsSystem,
        cfg: &Multiset,
        counts: &[u64],
        out: &mut BTreeSet<(RuleBag, Multiset)>,
    ) {
        if counts.iter().all(|&n| n == 0) {
            return;
        }
        let mut demand = Multiset::empty();
        let mut produce = Multiset::empty();
        for (i, &n) in counts.iter().enumerate() {
            demand = demand
                .sum(&sys.rules[i].lhs.scaled(n).expect("bounded counts"))
                .expect("bounded counts");
            produce = produce
                .sum(&sys.rules[i].rhs.scaled(n).expect("bounded counts"))
                .expect("bounded counts");
        }
        // applicable in parallel
        if !demand.is_submultiset(cfg) {
            return;
        }
        // maximal: no rule fits the remainder
        let remainder = cfg.difference(&demand).expect("demand fits");
        if sys.rules.iter().any(|r| r.applicable_to(&remainder)) {
            return;
        }
        let mut bag = RuleBag::default();
        for (i, &n) in counts.iter().enumerate() {
            bag.add(&sys.rules[i].label, n);
        }
        let successor = remainder.sum(&produce).expect("bounded counts");
        out.insert((bag, successor));
    }
}

/// A random small system and configuration: alphabet of up to six symbols,
/// up to six rules, configurations of up to twelve occurrences.
pub fn random_system(rng: &mut ChaCha8Rng) -> (MpmrsSystem, Multiset) {
    let alphabet_size = rng.gen_range(2..=6);
    let symbols: Vec<Symbol> = (0..alphabet_size)
        .map(|i| Symbol::new(&format!("{}", (b'a' + i as u8) as char)).expect("valid"))
        .collect();
    let random_multiset = |rng: &mut ChaCha8Rng, min: u64, max: u64| -> Multiset {
        let size = rng.gen_range(min..=max);
        let mut m = Multiset::empty();
        for _ in 0..size {
            let s = symbols[rng.gen_range(0..symbols.len())].clone();
            m.add(s, 1).expect("small counts");
        }
        m
    };
    let rule_count = rng.gen_range(1..=6);
    let rules: Vec<RewriteRule> = (0..rule_count)
        .map(|i| {
            RewriteRule::new(
                &format!("r{i}"),
                random_multiset(rng, 1, 3),
                random_multiset(rng, 0, 3),
            )
            .expect("non-empty lhs by construction")
        })
        .collect();
    let cfg = random_multiset(rng, 0, 12);
    let alphabet: BTreeSet<Symbol> = symbols.into_iter().collect();
    let sys = MpmrsSystem::new(alphabet, cfg.clone(), rules).expect("well-formed");
    (sys, cfg)
}

/// Deterministic rng for test reproducibility.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
