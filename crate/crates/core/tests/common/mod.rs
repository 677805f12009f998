#![allow(dead_code)]

pub mod bt_oracle;

use std::fs;
use std::path::PathBuf;

use mitsim_core::mitigation::{RecoveryReport, RecoveryStrategy};
use mitsim_core::{parse_scenario, run, RunOutcome, ScenarioSpec};

pub const NAV_STRATEGIES: [RecoveryStrategy; 4] = [
    RecoveryStrategy::RestartScratch,
    RecoveryStrategy::FallbackPodStarted,
    RecoveryStrategy::FallbackInitialized,
    RecoveryStrategy::FallbackShadowExecution,
];

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.scenario"))
}

pub fn scenario(name: &str) -> ScenarioSpec {
    let text = fs::read_to_string(scenario_path(name)).unwrap();
    parse_scenario(&text).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

/// Corpus scenarios that inject at least one failure.
pub const FAILURE_SCENARIOS: [&str; 8] = [
    "nav_scratch",
    "nav_pod_started",
    "nav_initialized",
    "nav_shadow",
    "nav_remap",
    "nav_dependency",
    "manip_scratch",
    "manip_shadow",
];

/// All runs of `base` under each applicable strategy, seeds 1..=seeds.
pub fn sweep(base: &str, seeds: u64) -> Vec<(RecoveryStrategy, u64, RunOutcome)> {
    let spec = scenario(base);
    let mut out = Vec::new();
    for s in NAV_STRATEGIES {
        let Ok(v) = spec.with_strategy(s) else { continue };
        for seed in 1..=seeds {
            out.push((s, seed, run(&v, seed)));
        }
    }
    out
}

pub fn reports_of(runs: &[(RecoveryStrategy, u64, RunOutcome)], s: RecoveryStrategy) -> Vec<&RecoveryReport> {
    runs.iter().filter(|r| r.0 == s).flat_map(|r| r.2.metrics.reports.iter()).collect()
}

pub fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    assert!(!v.is_empty());
    v.iter().sum::<f64>() / v.len() as f64
}
