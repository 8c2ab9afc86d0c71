//! `ctlmr` — build partitioned state spaces, check CTL formulas over them,
//! cross-validate against the sequential oracle, and run scaling benchmarks.
//!
//! Exit codes: 0 the formula holds in every initial state (or the command
//! succeeded), 1 it does not hold (or validation found problems), 2 errors,
//! 3 oracle disagreement.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use ctlmr::ctl::{normalize, parse, Formula};
use ctlmr::fixpoint::{CheckReport, EvalOptions, Evaluator};
use ctlmr::kripke::{KripkeStore, StateId};
use ctlmr::oracle::{oracle_check, random_formula, random_kripke, DenseKripke, MAX_ORACLE_STATES};
use ctlmr::statespace::{build, parse_net, BuildOptions, PetriNet};
use ctlmr::{models, Error};

const EXIT_HOLDS: u8 = 0;
const EXIT_FAILS: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ctlmr",
    about = "Explicit-state CTL model checking over hash-partitioned state spaces",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the reachability graph of a Petri net as a partitioned store.
    Build(BuildArgs),
    /// Evaluate a CTL formula over a store.
    Check(CheckArgs),
    /// Run a check once per worker count and report times and speedups.
    Bench(BenchArgs),
    /// Check the integrity of a store directory.
    Validate(ValidateArgs),
    /// Generate a reproducible random corpus and compare both evaluation
    /// paths on it.
    Demo(DemoArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Net description file, or a bundled net such as `shared_memory(3)`,
    /// `mutex(4)`, `load_balancer(3,2)`, `self_loop`, `chain`, `handoff`.
    net: String,
    /// Output directory for partition files and manifest.
    out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    partitions: usize,
    /// Abort once more than this many states were discovered.
    #[arg(long)]
    bound: Option<usize>,
    /// Fail instead of absorbing deadlock states into an error state.
    #[arg(long)]
    fail_on_deadlock: bool,
    /// Also write the (possibly generated) net description here.
    #[arg(long)]
    emit_net: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    store_dir: PathBuf,
    /// CTL formula, e.g. `E[true U m(Queue) >= 1]`.
    formula: String,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Frontier optimization for EU iterations.
    #[arg(long, default_value_t = true, action = ArgAction::Set,
          num_args = 0..=1, default_missing_value = "true")]
    optimized_eu: bool,
    /// Recheck the result with the sequential oracle (small stores only).
    #[arg(long)]
    oracle_verify: bool,
    #[arg(long, value_parser = ["csv", "json"], default_value = "csv")]
    format: String,
    /// Write the detailed JSON report here as well.
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    store_dir: PathBuf,
    formula: String,
    /// Comma-separated worker counts; must contain 1 (the speedup baseline).
    #[arg(long, default_value = "1,2,4")]
    workers: String,
    #[arg(long, default_value_t = true, action = ArgAction::Set,
          num_args = 0..=1, default_missing_value = "true")]
    optimized_eu: bool,
    #[arg(long, value_parser = ["csv", "json"], default_value = "csv")]
    format: String,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    store_dir: PathBuf,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of (structure, formula) pairs.
    #[arg(long, default_value_t = 25)]
    count: u64,
    #[arg(long, default_value_t = 60)]
    max_states: usize,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 2)]
    partitions: usize,
    #[arg(long, default_value_t = true, action = ArgAction::Set,
          num_args = 0..=1, default_missing_value = "true")]
    optimized_eu: bool,
}

#[derive(Serialize)]
struct CheckEnvelope<'a> {
    property: &'a str,
    verdict_holds_in_initial: bool,
    oracle_verified: Option<bool>,
    report: &'a CheckReport,
}

#[derive(Serialize)]
struct BenchRecord {
    property: String,
    cardinality: u64,
    workers: usize,
    time_seconds: f64,
    cheat: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Check(args) => cmd_check(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Demo(args) => cmd_demo(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn load_net(spec: &str) -> Result<PetriNet, Error> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Integrity(format!("{}: {e}", path.display())))?;
        return parse_net(&text);
    }
    match models::resolve(spec) {
        Some(net) => net,
        None => Err(Error::Contract(format!(
            "`{spec}` is neither a file nor a bundled net (bundled: {})",
            models::BUNDLED.join(", ")
        ))),
    }
}

fn cmd_build(args: BuildArgs) -> Result<u8, Error> {
    let net = load_net(&args.net)?;
    if let Some(path) = &args.emit_net {
        std::fs::write(path, net.to_text())
            .map_err(|e| Error::Integrity(format!("{}: {e}", path.display())))?;
    }
    let opts = BuildOptions {
        num_partitions: args.partitions,
        bound: args.bound,
        fail_on_deadlock: args.fail_on_deadlock,
    };
    let (store, stats) = build(&net, &args.out_dir, &opts)?;
    println!(
        "built {} states, {} edges into {} partition file(s) at {}",
        stats.states,
        stats.edges,
        store.num_partitions(),
        args.out_dir.display()
    );
    if let Some(error_id) = stats.error_state {
        println!(
            "absorbed {} deadlock state(s) into error state {error_id}",
            stats.deadlocks.len()
        );
    }
    Ok(EXIT_HOLDS)
}

fn open_validated(dir: &Path) -> Result<KripkeStore, Error> {
    let store = KripkeStore::open(dir)?;
    let findings = store.validate();
    if !findings.is_empty() {
        let mut msg = format!("store {} failed validation:", dir.display());
        for finding in findings.iter().take(10) {
            let _ = write!(msg, "\n  {finding}");
        }
        if findings.len() > 10 {
            let _ = write!(msg, "\n  ... {} finding(s) total", findings.len());
        }
        return Err(Error::Integrity(msg));
    }
    Ok(store)
}

fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn run_check(
    store: &KripkeStore,
    formula: &Formula,
    workers: usize,
    optimized_eu: bool,
) -> Result<(BTreeSet<StateId>, CheckReport), Error> {
    let mut evaluator = Evaluator::with_temp_dir(
        store,
        EvalOptions {
            workers,
            optimized_eu,
        },
    )?;
    let normalized = normalize(formula);
    let (result, report) = evaluator.check(&normalized)?;
    let ids = result.id_set()?;
    Ok((ids, report))
}

fn cmd_check(args: CheckArgs) -> Result<u8, Error> {
    let store = open_validated(&args.store_dir)?;
    let formula = parse(&args.formula)?;
    let (ids, report) = run_check(&store, &formula, args.workers, args.optimized_eu)?;

    let mut oracle_verified = None;
    if args.oracle_verify {
        if store.state_count() > MAX_ORACLE_STATES {
            return Err(Error::Contract(format!(
                "--oracle-verify needs a store with at most {MAX_ORACLE_STATES} states, found {}",
                store.state_count()
            )));
        }
        let dense = DenseKripke::from_store(&store)?;
        let expected = oracle_check(&dense, &formula)?;
        if expected != ids {
            eprintln!(
                "oracle mismatch on `{}`: distributed {} state(s), oracle {}",
                args.formula,
                ids.len(),
                expected.len()
            );
            return Ok(EXIT_MISMATCH);
        }
        oracle_verified = Some(true);
    }

    let envelope = CheckEnvelope {
        property: &args.formula,
        verdict_holds_in_initial: report.holds_in_initial,
        oracle_verified,
        report: &report,
    };
    if let Some(path) = &args.json_out {
        std::fs::write(path, serde_json::to_string_pretty(&envelope).unwrap())
            .map_err(|e| Error::Integrity(format!("{}: {e}", path.display())))?;
    }
    match args.format.as_str() {
        "json" => println!("{}", serde_json::to_string_pretty(&envelope).unwrap()),
        _ => {
            println!("property,cardinality,workers,time_seconds");
            println!(
                "{},{},{},{:.6}",
                csv_field(&args.formula),
                report.cardinality,
                report.workers,
                report.wall_seconds
            );
        }
    }
    Ok(if report.holds_in_initial {
        EXIT_HOLDS
    } else {
        EXIT_FAILS
    })
}

fn cmd_bench(args: BenchArgs) -> Result<u8, Error> {
    let worker_list: Vec<usize> = args
        .workers
        .split(',')
        .map(|w| {
            w.trim()
                .parse::<usize>()
                .map_err(|e| Error::Contract(format!("bad worker count `{w}`: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if worker_list.is_empty() || !worker_list.contains(&1) {
        return Err(Error::Contract(
            "the worker list must contain 1; it is the speedup baseline".into(),
        ));
    }

    let store = open_validated(&args.store_dir)?;
    let formula = parse(&args.formula)?;

    let mut runs: Vec<(usize, u64, bool, f64)> = Vec::new();
    for &workers in &worker_list {
        let (ids, report) = run_check(&store, &formula, workers, args.optimized_eu)?;
        runs.push((
            workers,
            ids.len() as u64,
            report.holds_in_initial,
            report.wall_seconds,
        ));
    }

    let cardinality = runs[0].1;
    if runs.iter().any(|&(_, c, _, _)| c != cardinality) {
        return Err(Error::Internal(format!(
            "cardinality diverges across worker counts: {:?}",
            runs.iter().map(|&(w, c, _, _)| (w, c)).collect::<Vec<_>>()
        )));
    }

    let baseline = runs
        .iter()
        .find(|&&(w, _, _, _)| w == 1)
        .map(|&(_, _, _, t)| t)
        .expect("worker list contains 1");
    let records: Vec<BenchRecord> = runs
        .iter()
        .map(|&(workers, cardinality, _, time_seconds)| BenchRecord {
            property: args.formula.clone(),
            cardinality,
            workers,
            time_seconds,
            cheat: if workers == 1 {
                1.0
            } else {
                baseline / time_seconds
            },
        })
        .collect();

    if let Some(path) = &args.json_out {
        std::fs::write(path, serde_json::to_string_pretty(&records).unwrap())
            .map_err(|e| Error::Integrity(format!("{}: {e}", path.display())))?;
    }
    match args.format.as_str() {
        "json" => println!("{}", serde_json::to_string_pretty(&records).unwrap()),
        _ => {
            println!("property,cardinality,workers,time_seconds,cheat");
            for r in &records {
                println!(
                    "{},{},{},{:.6},{:.3}",
                    csv_field(&r.property),
                    r.cardinality,
                    r.workers,
                    r.time_seconds,
                    r.cheat
                );
            }
        }
    }
    Ok(EXIT_HOLDS)
}

fn cmd_validate(args: ValidateArgs) -> Result<u8, Error> {
    let store = KripkeStore::open(&args.store_dir)?;
    let findings = store.validate();
    if findings.is_empty() {
        println!(
            "ok: {} state(s) in {} partition(s), relation total",
            store.state_count(),
            store.num_partitions()
        );
        Ok(EXIT_HOLDS)
    } else {
        for finding in &findings {
            println!("{finding}");
        }
        println!("{} finding(s)", findings.len());
        Ok(EXIT_FAILS)
    }
}

fn cmd_demo(args: DemoArgs) -> Result<u8, Error> {
    let mut mismatches = 0u64;
    for i in 0..args.count {
        let pair_seed = args.seed.wrapping_mul(1_000_003).wrapping_add(i);
        let states =
            1 + (pair_seed.wrapping_mul(2_654_435_761) % args.max_states.max(1) as u64) as usize;
        let dense = random_kripke(states, 2.5, pair_seed);
        let formula = random_formula(args.depth, 5, pair_seed.wrapping_add(1));

        let dir = tempfile::Builder::new().prefix("ctlmr-demo-").tempdir()?;
        let store = dense.write_store(&dir.path().join("store"), args.partitions)?;
        let (ids, _) = run_check(&store, &formula, args.workers, args.optimized_eu)?;
        let expected = oracle_check(&dense, &formula)?;
        let agree = ids == expected;
        if !agree {
            mismatches += 1;
        }
        println!(
            "pair {i:03} seed={pair_seed} states={states:3} |sat|={:4} oracle={:4} agree={agree} {formula}",
            ids.len(),
            expected.len(),
        );
    }
    if mismatches == 0 {
        println!("all {} pairs agree", args.count);
        Ok(EXIT_HOLDS)
    } else {
        println!("{mismatches} of {} pairs disagree", args.count);
        Ok(EXIT_MISMATCH)
    }
}
