use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::{Mcpu, MetricsBundle};
use crate::kernel::EventTrace;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("report for {workload} at {t_detected} ms: components sum to {sum} ms but recovery took {total} ms")]
    ComponentSum { workload: String, t_detected: u64, sum: u64, total: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Formats an exact value with one decimal, rounding half to even.
pub fn format_tenths(v: Mcpu) -> String {
    let (n, d) = (v.numer() * 10, *v.denom());
    let (mut q, rem) = (n / d, n % d);
    if 2 * rem > d || (2 * rem == d && q % 2 == 1) {
        q += 1;
    }
    format!("{}.{}", q / 10, q % 10)
}

pub fn cpu_csv(b: &MetricsBundle) -> String {
    let mut s = String::from("run_id,t_ms,container,cpu_mcpu\n");
    for c in &b.cpu {
        let _ = writeln!(s, "{},{},{},{}", b.run_id, c.t, c.container, c.usage);
    }
    s
}

/// Per-container means and the cluster total.
pub fn cpu_summary_csv(b: &MetricsBundle) -> String {
    let mut s = String::from("run_id,scope,container,samples,mean_mcpu\n");
    let series = b.series();
    for (c, mean) in b.container_means() {
        let _ = writeln!(s, "{},container,{},{},{}", b.run_id, c, series[c.as_str()].len(), format_tenths(mean));
    }
    let _ = writeln!(s, "{},cluster,,{},{}", b.run_id, b.cpu.len(), format_tenths(b.total_cpu()));
    s
}

/// One row per recovery. Fails if any report's components do not add up.
pub fn reports_csv(b: &MetricsBundle) -> Result<String, ExportError> {
    let mut s = String::from(
        "run_id,workload,failure_class,strategy,t_failure,t_detected,t_detection,t_cluster,t_startup,t_reinit,t_recovery,steps\n",
    );
    for r in &b.reports {
        if !r.satisfies_sum() {
            return Err(ExportError::ComponentSum {
                workload: r.failure.workload.clone(),
                t_detected: r.failure.t_detected.as_u64(),
                sum: r.component_sum().as_u64(),
                total: r.t_recovery.as_u64(),
            });
        }
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            b.run_id,
            r.failure.workload,
            r.failure.class,
            r.strategy,
            r.failure.t_failure_actual,
            r.failure.t_detected,
            r.t_detection,
            r.t_cluster,
            r.t_startup,
            r.t_reinit,
            r.t_recovery,
            r.steps.join(";")
        );
    }
    Ok(s)
}

/// Writes `trace.tsv`, `cpu.csv`, `cpu_summary.csv` and `reports.csv` into `dir`.
pub fn write_exports(dir: &Path, b: &MetricsBundle, trace: &EventTrace) -> Result<(), ExportError> {
    let reports = reports_csv(b)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("trace.tsv"), trace.to_tsv())?;
    std::fs::write(dir.join("cpu.csv"), cpu_csv(b))?;
    std::fs::write(dir.join("cpu_summary.csv"), cpu_summary_csv(b))?;
    std::fs::write(dir.join("reports.csv"), reports)?;
    Ok(())
}
