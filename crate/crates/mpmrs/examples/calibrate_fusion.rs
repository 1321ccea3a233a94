//! Brute-force search over increment-fusion subsets for the built-in
//! universal machine: enumerates every admissible subset of the fusion
//! candidates and reports those whose compiled system lands exactly on
//! 56 rules of maximal size 5. The canonical (first) hit is frozen in
//! `data/p2_calibration.txt` and used as the default for the table
//! reproduction.

use std::collections::BTreeSet;

use mpmrs::compiler::{compile_with_passes, fusion_candidates, CompilationOptions, Pass};
use mpmrs::machine::{u22, StateId};

fn main() {
    let machine = u22();
    let candidates: Vec<StateId> = fusion_candidates(&machine, 5).into_iter().collect();
    println!("fusion candidates: {candidates:?}");

    let mut hits: Vec<BTreeSet<StateId>> = Vec::new();
    for mask in 0u32..(1 << candidates.len()) {
        let subset: BTreeSet<StateId> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, s)| s.clone())
            .collect();
        let opts = CompilationOptions {
            fusion_targets: Some(subset.clone()),
            ..CompilationOptions::default()
        };
        match compile_with_passes(&machine, &[Pass::P1, Pass::P2], &opts) {
            Ok(compiled) if compiled.stats() == (56, 5) => hits.push(subset),
            _ => {}
        }
    }

    // canonical order: ascending numeric state id
    let numeric = |s: &StateId| -> u64 {
        s.name()
            .trim_start_matches(|c: char| !c.is_ascii_digit())
            .parse()
            .unwrap_or(u64::MAX)
    };
    let key = |set: &BTreeSet<StateId>| -> Vec<u64> {
        let mut v: Vec<u64> = set.iter().map(numeric).collect();
        v.sort();
        v
    };
    hits.sort_by_key(|h| key(h));
    println!("subsets reproducing (56, 5): {}", hits.len());
    for h in hits.iter().take(10) {
        let names: Vec<&str> = h.iter().map(|s| s.name()).collect();
        println!("  {names:?}");
    }
    if let Some(first) = hits.first() {
        let names: Vec<&str> = first.iter().map(|s| s.name()).collect();
        println!("canonical calibration (ascending state id): {names:?}");
    }
}
