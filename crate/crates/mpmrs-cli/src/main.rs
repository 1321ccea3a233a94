//! Command-line front end: run register machines and rewriting systems,
//! compile machines with selectable passes, verify compiled systems by
//! co-simulation, exercise the embedded universal system, emit diagrams,
//! and reproduce the size/count table.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mpmrs::compiler::{
    compile_with_passes, parse_calibration, stats, u22_table_options, CompilationOptions,
    CosimVerdict, Pass,
};
use mpmrs::engine::{
    results, run_exhaustive, run_seeded, state_configurations, RunKind, DEFAULT_MAX_CONFIGS,
    DEFAULT_MAX_STEPS,
};
use mpmrs::machine::{
    parse_input_vectors, parse_machine_str, rm_run, u22, validate_machine, RegisterMachine,
    RmConfiguration, RmOutcome,
};
use mpmrs::notation::{build_flow_graph, emit_graph_text, simplify};
use mpmrs::system::{parse_system_str, write_system, FsMpmrsSystem};
use mpmrs::universal::{
    derive_dictionary, initial_config, lockstep_into, run_universal, u23_system, U23Dictionary,
    UniversalOutcome,
};

#[derive(Parser)]
#[command(
    name = "mpmrs",
    version,
    about = "Maximally parallel multiset rewriting: engine, compiler, universal system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PassArg {
    P1,
    P2,
    P3,
    P4,
}

impl From<PassArg> for Pass {
    fn from(p: PassArg) -> Pass {
        match p {
            PassArg::P1 => Pass::P1,
            PassArg::P2 => Pass::P2,
            PassArg::P3 => Pass::P3,
            PassArg::P4 => Pass::P4,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Run a register machine on an input vector.
    RunRm {
        machine: PathBuf,
        /// Comma-separated register values, e.g. 0,3,1
        #[arg(long, value_delimiter = ',')]
        input: Vec<u64>,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: usize,
        /// Print the configuration after every instruction.
        #[arg(long)]
        trace: bool,
        /// Print validation diagnostics before running.
        #[arg(long)]
        validate: bool,
    },
    /// Compile a register machine into a rewriting system.
    Compile {
        machine: PathBuf,
        /// Passes to apply in order, e.g. --passes p1,p2
        #[arg(long, value_delimiter = ',')]
        passes: Vec<PassArg>,
        #[arg(long, default_value_t = 5)]
        fusion_cap: u64,
        /// Fusion calibration file (state ids); defaults to fusing
        /// everything eligible.
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        faithful_halt: bool,
        /// Terminal registers, e.g. --terminal 0
        #[arg(long, value_delimiter = ',', default_value = "0")]
        terminal: Vec<usize>,
        /// Write the system here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Print the per-stage report table.
        #[arg(long)]
        report: bool,
    },
    /// Run a rewriting system: seeded single run or exhaustive exploration.
    RunMpmrs {
        system: PathBuf,
        /// Extra register content, by canonical register order.
        #[arg(long, value_delimiter = ',')]
        input: Vec<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Explore all runs breadth-first and report stable configurations.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_CONFIGS)]
        max_configs: usize,
        #[arg(long)]
        trace: bool,
    },
    /// Compile a machine and verify it by co-simulation on input vectors.
    Verify {
        machine: PathBuf,
        #[arg(long, value_delimiter = ',')]
        passes: Vec<PassArg>,
        /// Inline inputs: semicolon-separated vectors, e.g. "0,3;1,1"
        #[arg(long)]
        inputs: Option<String>,
        /// File of register vectors, one per line.
        #[arg(long)]
        inputs_file: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        fusion_cap: u64,
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        faithful_halt: bool,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        terminal: Vec<usize>,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: usize,
    },
    /// Run the embedded 23-rule universal system.
    Universal {
        /// Registers R0..R7, e.g. --input 0,0,0,1,0,1,0,0
        #[arg(long, value_delimiter = ',')]
        input: Vec<u64>,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        /// Co-run against the built-in machine and report checkpoints.
        #[arg(long)]
        lockstep: bool,
        /// Derive the state dictionary over a file of input vectors.
        #[arg(long)]
        derive_dictionary: Option<PathBuf>,
    },
    /// Emit the flow diagram of a system.
    Diagram {
        system: PathBuf,
        #[arg(long)]
        simplify: bool,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
    },
    /// Rule count and maximal rule size of a system.
    Stats { system: PathBuf },
    /// Reproduce the size/count table for the built-in universal machine.
    Table,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::from(1)
        }
    }
}

fn read(path: &PathBuf) -> mpmrs::Result<String> {
    fs::read_to_string(path)
        .map_err(|e| mpmrs::Error::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn load_machine(path: &PathBuf) -> mpmrs::Result<RegisterMachine> {
    parse_machine_str(&read(path)?)
}

fn load_system(path: &PathBuf) -> mpmrs::Result<FsMpmrsSystem> {
    parse_system_str(&read(path)?)
}

fn options(
    fusion_cap: u64,
    calibration: &Option<PathBuf>,
    faithful_halt: bool,
    terminal: &[usize],
) -> mpmrs::Result<CompilationOptions> {
    let fusion_targets = match calibration {
        Some(path) => Some(parse_calibration(&read(path)?)?),
        None => None,
    };
    Ok(CompilationOptions {
        faithful_halt,
        fusion_size_cap: fusion_cap,
        fusion_targets,
        terminal_registers: terminal.to_vec(),
    })
}

fn collect_inputs(
    inline: &Option<String>,
    file: &Option<PathBuf>,
) -> mpmrs::Result<Vec<Vec<u64>>> {
    let mut out = Vec::new();
    if let Some(s) = inline {
        for part in s.split(';') {
            let vec: Result<Vec<u64>, _> = part
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse())
                .collect();
            out.push(vec.map_err(|_| {
                mpmrs::Error::Invalid(format!("bad input vector {part:?}"))
            })?);
        }
    }
    if let Some(path) = file {
        out.extend(parse_input_vectors(&read(path)?)?);
    }
    if out.is_empty() {
        return Err(mpmrs::Error::Invalid(
            "no inputs given; use --inputs or --inputs-file".to_string(),
        ));
    }
    Ok(out)
}

fn eight(input: &[u64]) -> mpmrs::Result<[u64; 8]> {
    if input.len() > 8 {
        return Err(mpmrs::Error::Invalid(
            "the universal system has eight registers".to_string(),
        ));
    }
    let mut regs = [0u64; 8];
    regs[..input.len()].copy_from_slice(input);
    Ok(regs)
}

fn run(command: Command) -> mpmrs::Result<ExitCode> {
    match command {
        Command::RunRm {
            machine,
            input,
            max_steps,
            trace,
            validate,
        } => {
            let m = load_machine(&machine)?;
            if validate {
                for d in validate_machine(&m) {
                    println!("diagnostic: {d}");
                }
            }
            let mut regs = input;
            regs.resize(m.registers, 0);
            let start = RmConfiguration::new(m.start.clone(), regs);
            let (outcome, steps) = rm_run(&m, &start, max_steps, trace)?;
            if let Some(steps) = steps {
                for c in steps {
                    println!("{c}");
                }
            }
            match outcome {
                RmOutcome::Halted { config, steps } => {
                    println!("halted after {steps} instructions: {config}");
                    Ok(ExitCode::SUCCESS)
                }
                RmOutcome::BoundExceeded { config } => {
                    println!("still running after {max_steps} instructions: {config}");
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        Command::Compile {
            machine,
            passes,
            fusion_cap,
            calibration,
            faithful_halt,
            terminal,
            output,
            report,
        } => {
            let m = load_machine(&machine)?;
            let opts = options(fusion_cap, &calibration, faithful_halt, &terminal)?;
            let passes: Vec<Pass> = passes.into_iter().map(Pass::from).collect();
            let compiled = compile_with_passes(&m, &passes, &opts)?;
            let text = write_system(&compiled.system);
            match output {
                Some(path) => fs::write(&path, &text).map_err(|e| {
                    mpmrs::Error::Invalid(format!("cannot write {}: {e}", path.display()))
                })?,
                None => print!("{text}"),
            }
            if report {
                print!("{}", compiled.report.to_table());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::RunMpmrs {
            system,
            input,
            seed,
            exhaustive,
            max_steps,
            max_configs,
            trace,
        } => {
            let sys = load_system(&system)?;
            let extra = sys.register_input(&input)?;
            let start = sys.initial_with(&extra)?;
            let mut base = sys.base.clone();
            base.initial = start.clone();
            if exhaustive {
                let outcome = run_exhaustive(&base, max_steps, max_configs);
                if let RunKind::ResultSet { stable, complete } = &outcome.kind {
                    println!(
                        "stable configurations ({}, {}):",
                        stable.len(),
                        if *complete { "complete" } else { "truncated" }
                    );
                    for cfg in stable {
                        println!("  {cfg}  | terminal {}", sys.terminal_projection(cfg));
                    }
                }
                let res = {
                    let mut fsys = sys.clone();
                    fsys.base = base;
                    results(&fsys, max_steps, max_configs)?
                };
                println!("result set:");
                for r in &res {
                    println!("  {r}");
                }
                Ok(ExitCode::SUCCESS)
            } else {
                let outcome = run_seeded(&base, &start, seed.unwrap_or(0), max_steps, trace);
                if let Some(t) = &outcome.trace {
                    for (bag, cfg) in t {
                        println!("{bag} => {cfg}");
                    }
                }
                match outcome.kind {
                    RunKind::Stable(cfg) => {
                        println!(
                            "stable after {} steps: {cfg}  | terminal {}",
                            outcome.steps_taken,
                            sys.terminal_projection(&cfg)
                        );
                    }
                    RunKind::BoundExceeded(cfg) => {
                        println!("bound exceeded after {} steps: {cfg}", outcome.steps_taken);
                    }
                    RunKind::ResultSet { .. } => unreachable!("seeded runs never return sets"),
                }
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Verify {
            machine,
            passes,
            inputs,
            inputs_file,
            fusion_cap,
            calibration,
            faithful_halt,
            terminal,
            max_steps,
        } => {
            let m = load_machine(&machine)?;
            let opts = options(fusion_cap, &calibration, faithful_halt, &terminal)?;
            let passes: Vec<Pass> = passes.into_iter().map(Pass::from).collect();
            let compiled = compile_with_passes(&m, &passes, &opts)?;
            let inputs = collect_inputs(&inputs, &inputs_file)?;
            let report = compiled.cosimulate(&inputs, max_steps)?;
            let mut mismatch = false;
            for (input, verdict) in &report.verdicts {
                match verdict {
                    CosimVerdict::Equivalent {
                        checkpoints,
                        machine_steps,
                        system_steps,
                    } => println!(
                        "{input:?}: equivalent ({checkpoints} checkpoints, {machine_steps} instructions, {system_steps} system steps)"
                    ),
                    CosimVerdict::Mismatch(w) => {
                        mismatch = true;
                        println!("{input:?}: MISMATCH");
                        println!("  witness: {w}");
                    }
                    CosimVerdict::Inconclusive { system_steps } => {
                        println!("{input:?}: inconclusive after {system_steps} system steps")
                    }
                }
            }
            if mismatch {
                Ok(ExitCode::from(3))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Universal {
            input,
            max_steps,
            lockstep,
            derive_dictionary: dict_file,
        } => {
            if let Some(path) = dict_file {
                let vectors = parse_input_vectors(&read(&path)?)?;
                let mut samples = Vec::new();
                for v in &vectors {
                    samples.push(eight(v)?);
                }
                let (dict, reports) = derive_dictionary(max_steps, &samples)?;
                print_dictionary(&dict);
                for r in &reports {
                    println!(
                        "input {:?}: {} checkpoints over {} instructions ({} system steps)",
                        r.input, r.checkpoints, r.machine_instructions, r.system_steps
                    );
                }
                return Ok(ExitCode::SUCCESS);
            }
            let regs = eight(&input)?;
            if lockstep {
                let mut dict = U23Dictionary::default();
                let report = lockstep_into(&mut dict, &regs, max_steps)?;
                println!(
                    "checkpoints agreed: {} (machine instructions {}, system steps {})",
                    report.checkpoints, report.machine_instructions, report.system_steps
                );
                if let Some((terminal, ok)) = &report.stable_result {
                    println!(
                        "stable; terminal projection {terminal} {}",
                        if *ok { "matches the machine" } else { "DIFFERS" }
                    );
                }
                print_dictionary(&dict);
                if report.agreed() {
                    Ok(ExitCode::SUCCESS)
                } else {
                    Ok(ExitCode::from(3))
                }
            } else {
                match run_universal(&regs, max_steps) {
                    UniversalOutcome::Stable {
                        config,
                        terminal,
                        steps,
                    } => {
                        println!("stable after {steps} steps: {config}");
                        println!("result (terminal projection): {terminal}");
                        Ok(ExitCode::SUCCESS)
                    }
                    UniversalOutcome::Inconclusive { config, steps } => {
                        println!("inconclusive after {steps} steps: {config}");
                        Ok(ExitCode::SUCCESS)
                    }
                    UniversalOutcome::Branching {
                        config,
                        successors,
                        steps,
                    } => {
                        println!(
                            "finding: state-level branching at step {steps}: {successors} distinct successors from {config}"
                        );
                        Ok(ExitCode::from(3))
                    }
                }
            }
        }
        Command::Diagram {
            system,
            simplify: do_simplify,
            max_iters,
            format,
        } => {
            let sys = load_system(&system)?;
            let mut graph = build_flow_graph(&sys, max_iters)?;
            if do_simplify {
                graph = simplify(&graph);
            }
            match format {
                Format::Dot => print!("{}", emit_graph_text(&graph)),
                Format::Text => {
                    println!(
                        "{} squares ({} filled), {} circles, {} arrows",
                        graph.square_count(),
                        graph.filled.len(),
                        graph.circle_count(),
                        graph.arrow_count()
                    );
                    for s in &graph.squares {
                        println!("square {s}");
                    }
                    for a in &graph.arrows {
                        println!("arrow {}", a.label());
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { system } => {
            let sys = load_system(&system)?;
            let (rules, size) = stats(&sys);
            println!("rules: {rules}");
            println!("max rule size: {size}");
            match state_configurations(&sys, 100) {
                Ok(states) => println!("state configurations: {}", states.len()),
                Err(e) => println!("state configurations: {e}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Table => {
            print_table()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_dictionary(dict: &U23Dictionary) {
    println!("dictionary ({} entries):", dict.map.len());
    for (state, enc) in &dict.map {
        println!("  {state} -> {enc}");
    }
    for note in dict.log.iter().filter(|l| l.starts_with("note")) {
        println!("  {note}");
    }
    if !dict.findings.is_empty() {
        println!("findings ({}):", dict.findings.len());
        for f in &dict.findings {
            println!("  {f}");
        }
    }
}

fn print_table() -> mpmrs::Result<()> {
    let machine = u22();
    let opts = u22_table_options();
    let rows: Vec<(&str, &[Pass])> = vec![
        ("basic", &[]),
        ("p1+p2", &[Pass::P1, Pass::P2]),
        ("p1+p3", &[Pass::P1, Pass::P3]),
        ("p1+p3+p4", &[Pass::P1, Pass::P3, Pass::P4]),
    ];
    // published rows: (max size, rule count, computed-by-this-toolkit?)
    let published: Vec<(u64, usize, Option<&[Pass]>)> = vec![
        (3, 73, Some(&[])),
        (5, 56, Some(&[Pass::P1, Pass::P2])),
        (6, 47, Some(&[Pass::P1, Pass::P3])),
        (7, 43, None),
        (11, 30, None),
    ];
    println!("size/count table for the built-in universal machine");
    println!("  max-size  rules  source                     status");
    for (size, count, passes) in &published {
        match passes {
            Some(passes) => {
                let compiled = compile_with_passes(&machine, passes, &opts)?;
                let (got_count, got_size) = compiled.stats();
                let status = if got_count == *count && got_size == *size {
                    "match".to_string()
                } else {
                    format!("deviation: computed ({got_size}, {got_count})")
                };
                let label = rows
                    .iter()
                    .find(|(_, p)| p == passes)
                    .map(|(l, _)| *l)
                    .unwrap_or("?");
                println!(
                    "  {:<9} {:<6} computed: {:<16} {status}",
                    got_size, got_count, label
                );
            }
            None => println!(
                "  {:<9} {:<6} external reference         not computed here",
                size, count
            ),
        }
    }
    let u23 = u23_system();
    let (count, size) = stats(&u23);
    let status = if count == 23 && size <= 20 {
        format!("match (computed max {size} <= 20)")
    } else {
        format!("deviation: computed ({size}, {count})")
    };
    println!("  {:<9} {:<6} embedded 23-rule system    {status}", 20, count);
    println!("additional computed rows:");
    let compiled = compile_with_passes(&machine, &[Pass::P1, Pass::P3, Pass::P4], &opts)?;
    let (c, s) = compiled.stats();
    println!("  {:<9} {:<6} computed: p1+p3+p4", s, c);
    let all = compile_with_passes(&machine, &[Pass::P1, Pass::P2, Pass::P3, Pass::P4], &opts)?;
    let (c, s) = all.stats();
    println!("  {:<9} {:<6} computed: p1+p2+p3+p4", s, c);
    println!(
        "options: faithful-halt=false, fusion-cap=5, calibration {:?}",
        mpmrs::compiler::U22_FUSION_CALIBRATION
    );
    Ok(())
}
