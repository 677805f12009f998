use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use mitsim_core::metrics::{cpu_summary_csv, format_tenths, reports_csv, Mcpu};
use mitsim_core::mitigation::{RecoveryReport, RecoveryStrategy};
use mitsim_core::workload::WorkloadKind;
use mitsim_core::{run, RunOutcome};
use num_rational::Ratio;
use rayon::prelude::*;

use crate::{input_error, load, parse_strategy, Failed};

#[derive(Args)]
pub struct SweepArgs {
    /// Scenario file.
    scenario: PathBuf,
    /// Comma-separated strategies, or `all`.
    #[arg(long, default_value = "all")]
    strategies: String,
    /// Seeds as `a-b`, a comma-separated list, or a single seed.
    #[arg(long, default_value = "1-10")]
    seeds: String,
    /// Output directory for sweep.csv, sweep_range.csv, reports.csv and cpu_summary.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

pub(crate) fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("invalid seed list '{s}'");
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once('-') {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn parse_strategies(s: &str) -> Result<Vec<RecoveryStrategy>, String> {
    if s == "all" {
        return Ok(RecoveryStrategy::ALL.to_vec());
    }
    let mut out: Vec<RecoveryStrategy> = s.split(',').map(|p| parse_strategy(p.trim())).collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// Column values of one table row: the four components, the total, σ(CPU).
type Row = [Option<Mcpu>; 6];

fn components(r: &RecoveryReport) -> [u64; 5] {
    [r.t_detection, r.t_cluster, r.t_startup, r.t_reinit, r.t_recovery].map(|m| m.as_u64())
}

fn summarize(runs: &[RunOutcome]) -> (Row, Row, Row) {
    let reports: Vec<[u64; 5]> = runs.iter().flat_map(|o| o.metrics.reports.iter().map(components)).collect();
    let cpu: Vec<Mcpu> = runs.iter().map(|o| o.metrics.total_cpu()).collect();
    let (mut mean, mut min, mut max): (Row, Row, Row) = Default::default();
    for c in 0..5 {
        let col: Vec<u64> = reports.iter().map(|r| r[c]).collect();
        if !col.is_empty() {
            mean[c] = Some(Ratio::new(col.iter().sum(), col.len() as u64));
            min[c] = col.iter().min().map(|v| Ratio::from_integer(*v));
            max[c] = col.iter().max().map(|v| Ratio::from_integer(*v));
        }
    }
    if !cpu.is_empty() {
        mean[5] = Some(cpu.iter().fold(Ratio::from_integer(0), |a, b| a + b) / Ratio::from_integer(cpu.len() as u64));
        min[5] = cpu.iter().min().copied();
        max[5] = cpu.iter().max().copied();
    }
    (mean, min, max)
}

fn cells(row: &Row) -> String {
    row.iter().map(|v| v.map(format_tenths).unwrap_or_default()).collect::<Vec<_>>().join(",")
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<u8, Failed> {
    let spec = load(&a.scenario)?;
    let seeds = parse_seeds(&a.seeds).map_err(input_error)?;
    let mut strategies = Vec::new();
    for s in parse_strategies(&a.strategies).map_err(input_error)? {
        match spec.with_strategy(s) {
            Ok(v) => strategies.push((s, v)),
            Err(e) => eprintln!("warning: skipping {s}: {e}"),
        }
    }
    if strategies.is_empty() {
        return Err(input_error("no applicable strategy"));
    }
    if !spec.workloads.iter().any(|w| w.kind != WorkloadKind::Service) {
        eprintln!("warning: scenario has no navigation or manipulation workload; strategies have no effect");
    }
    let jobs: Vec<(usize, u64)> = (0..strategies.len()).flat_map(|i| seeds.iter().map(move |s| (i, *s))).collect();
    let outcomes: Vec<RunOutcome> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let (strategy, spec) = &strategies[i];
            let mut o = run(spec, seed);
            o.metrics.run_id = format!("{}-{strategy}-seed{seed}", spec.name);
            o
        })
        .collect();
    let mut by_strategy: BTreeMap<RecoveryStrategy, Vec<RunOutcome>> = BTreeMap::new();
    for ((i, _), o) in jobs.iter().zip(outcomes) {
        by_strategy.entry(strategies[*i].0).or_default().push(o);
    }

    let header = "strategy,t_detection,t_cluster,t_startup,t_reinit,t_recovery,sigma_cpu\n";
    let mut table = String::from(header);
    let mut range = String::from("strategy,stat,t_detection,t_cluster,t_startup,t_reinit,t_recovery,sigma_cpu\n");
    let mut reports = String::new();
    let mut cpu = String::new();
    let mut code = 0u8;
    for (s, runs) in &by_strategy {
        let (mean, min, max) = summarize(runs);
        let _ = writeln!(table, "{s},{}", cells(&mean));
        let _ = writeln!(range, "{s},min,{}", cells(&min));
        let _ = writeln!(range, "{s},max,{}", cells(&max));
        for o in runs {
            let r = reports_csv(&o.metrics).map_err(|e| input_error(e.to_string()))?;
            let c = cpu_summary_csv(&o.metrics);
            // keep a single header line
            let skip = |t: &str, first: bool| if first { t.to_string() } else { t.lines().skip(1).map(|l| format!("{l}\n")).collect() };
            reports.push_str(&skip(&r, reports.is_empty()));
            cpu.push_str(&skip(&c, cpu.is_empty()));
            for f in &o.faults {
                eprintln!("{}: scenario fault: {f}", o.metrics.run_id);
            }
            code = code.max(o.exit_code() as u8);
        }
    }
    let write = |name: &str, text: &str| {
        std::fs::write(a.out.join(name), text).map_err(|e| input_error(format!("{}: {e}", a.out.join(name).display())))
    };
    std::fs::create_dir_all(&a.out).map_err(|e| input_error(format!("{}: {e}", a.out.display())))?;
    write("sweep.csv", &table)?;
    write("sweep_range.csv", &range)?;
    write("reports.csv", &reports)?;
    write("cpu_summary.csv", &cpu)?;
    print!("{table}");
    Ok(code)
}
