//! `mitsim`: run scenarios, sweep recovery strategies, size fallback pools.
//!
//! Exit codes: 0 success, 1 usage/input/I-O error, 2 scenario fault,
//! 3 mitigation escalation.

mod fleet;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mitsim_core::metrics::write_exports;
use mitsim_core::mitigation::RecoveryStrategy;
use mitsim_core::{parse_scenario, ScenarioSpec};

#[derive(Parser)]
#[command(name = "mitsim", version, about = "Failure detection and recovery simulator for containerized robot workloads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.tsv, cpu.csv, cpu_summary.csv and reports.csv.
    Run(RunArgs),
    /// Run a scenario under several strategies and seeds and tabulate the recovery times.
    Sweep(sweep::SweepArgs),
    /// Fallback pool sizing for a robot fleet.
    Fleet(fleet::FleetArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file.
    scenario: PathBuf,
    /// Seed of the run's random generator.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Recover navigation and manipulation workloads with this strategy
    /// (restart_scratch, fallback_pod_started, fallback_initialized,
    /// fallback_shadow_execution) instead of the declared ones.
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<RecoveryStrategy>,
}

pub(crate) fn parse_strategy(s: &str) -> Result<RecoveryStrategy, String> {
    RecoveryStrategy::from_keyword(s).ok_or_else(|| {
        let known: Vec<&str> = RecoveryStrategy::ALL.iter().map(|s| s.keyword()).collect();
        format!("unknown strategy '{s}' (expected one of {})", known.join(", "))
    })
}

/// Failure of a subcommand, reported on stderr.
pub(crate) struct Failed(pub u8, pub String);

pub(crate) fn input_error(msg: impl Into<String>) -> Failed {
    Failed(1, msg.into())
}

pub(crate) fn load(path: &Path) -> Result<ScenarioSpec, Failed> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(|d| format!("{}:{d}", path.display())).collect();
        input_error(lines.join("\n"))
    })
}

fn cmd_run(a: &RunArgs) -> Result<u8, Failed> {
    let mut spec = load(&a.scenario)?;
    if let Some(s) = a.strategy {
        spec = spec.with_strategy(s).map_err(input_error)?;
    }
    let out = mitsim_core::run(&spec, a.seed);
    write_exports(&a.out, &out.metrics, &out.trace).map_err(|e| input_error(format!("{}: {e}", a.out.display())))?;
    for f in &out.faults {
        eprintln!("scenario fault: {f}");
    }
    for e in &out.escalations {
        eprintln!("escalation: {e}");
    }
    if out.flagged {
        eprintln!("warning: a failure hit a workload during its mitigation");
    }
    println!("{}: {} recovery report(s) written to {}", out.metrics.run_id, out.metrics.reports.len(), a.out.display());
    Ok(out.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => sweep::cmd_sweep(a),
        Command::Fleet(a) => fleet::cmd_fleet(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(Failed(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
