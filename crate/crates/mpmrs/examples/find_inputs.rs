//! Scans small register vectors for inputs on which the built-in universal
//! machine halts, and for inputs that keep it running long enough to make
//! lockstep comparison meaningful. The frozen sample sets shipped under
//! `data/` were produced by this scan.

use mpmrs::machine::{rm_run, st, u22, RmConfiguration, RmOutcome};

fn main() {
    let m = u22();
    let mut halting: Vec<(Vec<u64>, usize, Vec<u64>)> = Vec::new();
    let mut long: Vec<(Vec<u64>, usize)> = Vec::new();

    // A small grid over the registers the machine actually consults early:
    // R1 (tested first), R2/R3 (instruction dispatch), R4/R5 (decoder),
    // plus a few nonzero values elsewhere.
    let grid: Vec<Vec<u64>> = {
        let mut g = Vec::new();
        for r1 in 0..4u64 {
            for r2 in 0..3u64 {
                for r3 in 0..3u64 {
                    for r4 in 0..4u64 {
                        for r5 in 0..6u64 {
                            g.push(vec![0, r1, r2, r3, r4, r5, 0, 0]);
                            g.push(vec![1, r1, r2, r3, r4, r5, 1, 0]);
                            g.push(vec![0, r1, r2, r3, r4, r5, 0, 2]);
                        }
                    }
                }
            }
        }
        g
    };

    for regs in grid {
        let input = RmConfiguration::new(st("q1"), regs.clone());
        let (outcome, _) = rm_run(&m, &input, 100_000, false).expect("u22 executes");
        match outcome {
            RmOutcome::Halted { config, steps } => halting.push((regs, steps, config.regs)),
            RmOutcome::BoundExceeded { .. } => long.push((regs, 100_000)),
        }
    }

    halting.sort_by_key(|(_, steps, _)| *steps);
    halting.dedup_by_key(|(_, steps, _)| *steps);

    println!("# halting inputs (register vector -> steps, final registers)");
    for (regs, steps, finals) in halting.iter().take(24) {
        println!("{regs:?} -> {steps} steps, final {finals:?}");
    }
    println!("\n# inputs still running at 100000 steps: {}", long.len());
    for (regs, _) in long.iter().take(12) {
        println!("{regs:?}");
    }
}
