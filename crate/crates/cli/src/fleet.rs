use std::fmt::Write as _;

use clap::Args;
use mitsim_core::fleet::{
    expected_failures, overflow_probability_analytic, overflow_probability_mc, overhead_percent, placement_count,
    shadow_per_robot_overhead, WindowModel,
};

use crate::{input_error, Failed};

/// Overflow probability quoted for the 1000-robot worked example.
const REFERENCE_OVERFLOW: f64 = 0.012;

#[derive(Args)]
pub struct FleetArgs {
    /// Fleet size N.
    #[arg(long, default_value_t = 1000)]
    robots: u64,
    /// Failures per hour per robot.
    #[arg(long, default_value_t = 1.0)]
    rate_per_hour: f64,
    /// Length of the interval of interest, seconds.
    #[arg(long, default_value_t = 30.0)]
    interval_s: f64,
    /// Downtime window, seconds.
    #[arg(long, default_value_t = 6.0)]
    window_s: f64,
    /// Fallback instances in the shared pool.
    #[arg(long, default_value_t = 4)]
    fallbacks: u64,
    /// Failures X in the interval; defaults to the expected count rounded to nearest.
    #[arg(long)]
    failures: Option<u64>,
    /// Monte Carlo trials (at least 10000).
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CPU of one main instance, milliCPU.
    #[arg(long, default_value_t = 1000.0)]
    main_mcpu: f64,
    /// CPU of one uninitialized fallback instance, milliCPU.
    #[arg(long, default_value_t = 600.0)]
    fallback_mcpu: f64,
}

pub fn report(a: &FleetArgs) -> Result<String, Failed> {
    if a.robots == 0 || a.interval_s <= 0.0 || a.rate_per_hour < 0.0 || a.main_mcpu <= 0.0 || a.fallback_mcpu < 0.0 {
        return Err(input_error("robots, interval and main CPU must be positive; rate and fallback CPU non-negative"));
    }
    if !(0.0..=a.interval_s).contains(&a.window_s) {
        return Err(input_error("--window-s must lie within [0, --interval-s]"));
    }
    if a.trials < 10_000 {
        return Err(input_error("--trials must be at least 10000"));
    }
    let expected = expected_failures(a.robots, a.rate_per_hour, a.interval_s);
    let (x, x_note) = match a.failures {
        Some(x) => (x, "given"),
        None => (expected.round() as u64, "expected, rounded to nearest"),
    };
    let placements = placement_count(a.robots, x).to_string();
    let analytic = overflow_probability_analytic(x, a.fallbacks, a.window_s, a.interval_s);
    let scan = overflow_probability_mc(x, a.fallbacks, a.window_s, a.interval_s, a.trials, a.seed, WindowModel::Scan);
    let fixed = overflow_probability_mc(x, a.fallbacks, a.window_s, a.interval_s, a.trials, a.seed, WindowModel::Fixed);
    let pct = |p: f64| format!("{:.2}%", 100.0 * p);
    let mut s = String::new();
    let _ = writeln!(s, "robots: {}", a.robots);
    let _ = writeln!(s, "rate_per_hour: {}", a.rate_per_hour);
    let _ = writeln!(s, "interval_s: {}", a.interval_s);
    let _ = writeln!(s, "window_s: {}", a.window_s);
    let _ = writeln!(s, "fallbacks: {}", a.fallbacks);
    let _ = writeln!(s, "expected_failures: {expected:.3}");
    let _ = writeln!(s, "failures_x: {x} ({x_note})");
    let _ = writeln!(s, "placement_count: {placements}");
    let _ = writeln!(s, "placement_count_digits: {}", placements.len());
    let _ = writeln!(s, "overflow_fixed_window_analytic: {analytic:.7} ({})", pct(analytic));
    let _ = writeln!(
        s,
        "overflow_fixed_window_mc: {:.6} ± {:.6} ({} trials, seed {})",
        fixed.estimate, fixed.stderr, fixed.trials, a.seed
    );
    let _ = writeln!(
        s,
        "overflow_scan_window_mc: {:.6} ± {:.6} ({} trials, seed {})",
        scan.estimate, scan.stderr, scan.trials, a.seed
    );
    let _ = writeln!(s, "overflow_reference: {REFERENCE_OVERFLOW} ({}; published figure for the 1000-robot example)", pct(REFERENCE_OVERFLOW));
    let _ = writeln!(
        s,
        "overhead_fallbacks_pct: {:.2} (at {} mCPU each)",
        overhead_percent(a.robots, a.main_mcpu, a.fallbacks, a.fallback_mcpu),
        a.fallback_mcpu
    );
    let _ = writeln!(
        s,
        "overhead_fallbacks_full_cost_pct: {:.2} (at {} mCPU each)",
        overhead_percent(a.robots, a.main_mcpu, a.fallbacks, a.main_mcpu),
        a.main_mcpu
    );
    let _ = writeln!(s, "overhead_shadow_per_robot_pct: {:.0}", shadow_per_robot_overhead(a.robots, a.main_mcpu));
    Ok(s)
}

pub fn cmd_fleet(a: &FleetArgs) -> Result<u8, Failed> {
    print!("{}", report(a)?);
    Ok(0)
}
