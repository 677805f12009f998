//! One PASS/FAIL line per acceptance criterion. Exits non-zero on any FAIL.

mod common;

use std::collections::BTreeMap;
use std::fs;

use common::{mean, reports_of, scenario, sweep, FAILURE_SCENARIOS, NAV_STRATEGIES};
use mitsim_core::fleet::{expected_failures, overflow_probability_analytic, placement_count, shadow_per_robot_overhead};
use mitsim_core::metrics::{write_exports, Mcpu};
use mitsim_core::mitigation::RecoveryStrategy;
use mitsim_core::monitoring::FailureClass;
use mitsim_core::{run, RunOutcome};
use num_bigint::BigUint;

// Tolerances.
const DETECTION_WINDOW_MS: (u64, u64) = (500, 600);
const SUPERVISION_BOUND_MS: u64 = 1200;
const FALLBACK_RATIO_TOL: f64 = 0.01;
const MONITOR_SPREAD_TOL: f64 = 0.05;
const EXPECTED_FAILURES_TOL: f64 = 0.001;
const ANALYTIC_TOL: f64 = 1e-6;
const REFERENCE_OVERFLOW_PCT: f64 = 1.2;
const REFERENCE_CLUSTER_RATIO: f64 = 32.0;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Result<String, String> + 'a>);
type Sweep = Vec<(RecoveryStrategy, u64, RunOutcome)>;

fn f(m: Mcpu) -> f64 {
    *m.numer() as f64 / *m.denom() as f64
}

fn mean_recovery(runs: &Sweep, s: RecoveryStrategy) -> f64 {
    mean(reports_of(runs, s).iter().map(|r| r.t_recovery.0 as f64))
}

fn check(ok: bool, msg: String) -> Result<String, String> {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c1_sum(nav: &Sweep) -> Result<String, String> {
    let reports: Vec<_> = nav.iter().flat_map(|r| r.2.metrics.reports.iter()).collect();
    let bad = reports.iter().filter(|r| !r.satisfies_sum()).count();
    check(reports.len() == 40 && bad == 0, format!("{} reports, {bad} violate t_recovery = sum of components", reports.len()))
}

fn c2_ordering(nav: &Sweep) -> Result<String, String> {
    let means: Vec<f64> = NAV_STRATEGIES.iter().map(|s| mean_recovery(nav, *s)).collect();
    let decreasing = means.windows(2).all(|w| w[0] > w[1]);
    let shadow_zero = reports_of(nav, RecoveryStrategy::FallbackShadowExecution).iter().all(|r| r.t_startup.0 == 0);
    check(decreasing && shadow_zero, format!("mean t_recovery {means:?} ms; shadow t_startup = 0: {shadow_zero}"))
}

fn c3_cluster(nav: &Sweep) -> Result<String, String> {
    let jitter_off = scenario("nav_scratch").cluster.jitter == 0.0;
    let mut ok = jitter_off;
    for (s, _, o) in nav {
        let want = if *s == RecoveryStrategy::RestartScratch { 2900 } else { 100 };
        ok &= o.metrics.reports.iter().all(|r| r.t_cluster.0 == want);
    }
    check(ok, format!("t_cluster 2900 / 100 ms, ratio 29 (reference mean ratio {REFERENCE_CLUSTER_RATIO})"))
}

fn c4_detection() -> Result<String, String> {
    let mut seen = Vec::new();
    for name in FAILURE_SCENARIOS {
        let spec = scenario(name);
        for seed in 1..=50 {
            let out = run(&spec, seed);
            seen.extend(out.failures.iter().filter(|e| e.class == FailureClass::TopicSilence).map(|e| e.t_detection().0));
        }
    }
    let (lo, hi) = (seen.iter().min().copied().unwrap_or(0), seen.iter().max().copied().unwrap_or(0));
    let ok = !seen.is_empty() && lo >= DETECTION_WINDOW_MS.0 && hi <= DETECTION_WINDOW_MS.1;
    check(ok, format!("{} topic-silence detections over seeds 1-50, t_detection in [{lo}, {hi}] ms", seen.len()))
}

fn c5_cpu(nav: &Sweep) -> Result<String, String> {
    let totals: BTreeMap<RecoveryStrategy, f64> = NAV_STRATEGIES
        .iter()
        .map(|s| (*s, mean(nav.iter().filter(|r| r.0 == *s).map(|r| f(r.2.metrics.total_cpu())))))
        .collect();
    let scratch_min = totals.iter().all(|(s, v)| *s == RecoveryStrategy::RestartScratch || *v > totals[&RecoveryStrategy::RestartScratch]);
    let container = |s: RecoveryStrategy, c: &str| {
        mean(nav.iter().filter(|r| r.0 == s).map(|r| f(r.2.metrics.container_mean(c).expect(c))))
    };
    let pod_ratio = container(RecoveryStrategy::FallbackPodStarted, "nav-fallback") / container(RecoveryStrategy::FallbackPodStarted, "nav");
    let shadow_ratio =
        container(RecoveryStrategy::FallbackShadowExecution, "nav-fallback") / container(RecoveryStrategy::FallbackShadowExecution, "nav");
    let sup: Vec<f64> = NAV_STRATEGIES.iter().map(|s| container(*s, "supervisor")).collect();
    let (smin, smax) = sup.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
    let spread = (smax - smin) / smin;
    let ok = scratch_min
        && (pod_ratio - 0.6).abs() <= 0.6 * FALLBACK_RATIO_TOL
        && (shadow_ratio - 1.0).abs() <= FALLBACK_RATIO_TOL
        && spread < MONITOR_SPREAD_TOL;
    check(
        ok,
        format!(
            "sigma_cpu {:?}; uninitialized/main {pod_ratio:.4}; shadow/main {shadow_ratio:.4}; monitor spread {:.2}%",
            totals.values().collect::<Vec<_>>(),
            100.0 * spread
        ),
    )
}

fn c6_supervision() -> Result<String, String> {
    let remap = scenario("nav_remap");
    let mut worst = 0;
    let mut missed = 0;
    for seed in 1..=50 {
        let out = run(&remap, seed);
        match out.failures.iter().find(|e| e.class == FailureClass::BehaviorDiscrepancy && !e.spurious) {
            Some(e) => worst = worst.max(e.t_detection().0),
            None => missed += 1,
        }
    }
    let healthy = scenario("nav_healthy");
    let false_pos: usize = (1..=50).map(|s| run(&healthy, s).failures.len()).sum();
    check(
        missed == 0 && worst <= SUPERVISION_BOUND_MS && false_pos == 0,
        format!("remap detected on {}/50 seeds, worst {worst} ms; {false_pos} detections on the healthy run", 50 - missed),
    )
}

fn c7_continuity() -> Result<String, String> {
    let mut problems = Vec::new();
    let mut handovers = 0;
    for name in FAILURE_SCENARIOS {
        let spec = scenario(name);
        for seed in 1..=5 {
            let out = run(&spec, seed);
            let t_fail = out.trace.of_kind("inject").next().map(|e| e.t).unwrap();
            let mut last: BTreeMap<&str, i64> = BTreeMap::new();
            let mut reached_before: BTreeMap<&str, i64> = BTreeMap::new();
            for e in out.trace.of_kind("goal_reached") {
                let (task, idx) = (e.get("task").unwrap(), e.get("index").unwrap().parse::<i64>().unwrap());
                if idx <= *last.get(task).unwrap_or(&-1) {
                    problems.push(format!("{name}/{seed}: goal {idx} of {task} revisited"));
                }
                last.insert(task, idx);
                if e.t <= t_fail {
                    reached_before.insert(task, idx);
                }
            }
            for h in out.trace.of_kind("handover").filter(|h| h.get("workload") != Some("loc")) {
                handovers += 1;
                let task = h.get("task").unwrap();
                let goal: i64 = h.get("goal_index").unwrap().parse().unwrap();
                let next = reached_before.get(task).map_or(0, |i| i + 1);
                if goal != next {
                    problems.push(format!("{name}/{seed}: resumed {task} at goal {goal}, next unreached was {next}"));
                }
            }
            if out.tasks.iter().any(|t| t.status.to_string() != "done") {
                problems.push(format!("{name}/{seed}: task not done"));
            }
        }
    }
    check(
        problems.is_empty() && handovers >= FAILURE_SCENARIOS.len() * 5,
        if problems.is_empty() { format!("{handovers} handovers resume at the checkpointed goal; all tasks done") } else { problems.join("; ") },
    )
}

fn c8_manipulation() -> Result<String, String> {
    let manip = sweep("manip_scratch", 10);
    let mut strategies: Vec<_> = manip.iter().map(|r| r.0).collect();
    strategies.dedup();
    let want = [RecoveryStrategy::RestartScratch, RecoveryStrategy::FallbackPodStarted, RecoveryStrategy::FallbackShadowExecution];
    let means: Vec<f64> = strategies.iter().map(|s| mean_recovery(&manip, *s)).collect();
    let ordered = means.windows(2).all(|w| w[0] > w[1]);
    let shadow_zero = reports_of(&manip, RecoveryStrategy::FallbackShadowExecution).iter().all(|r| r.t_startup.0 == 0);
    check(
        strategies == want && ordered && shadow_zero,
        format!("strategies {:?}, mean t_recovery {means:?} ms", strategies.iter().map(|s| s.keyword()).collect::<Vec<_>>()),
    )
}

fn c9_fleet() -> Result<String, String> {
    let e: f64 = expected_failures(1000, 1.0, 30.0);
    let brute = |n: u64, x: u64| -> u64 {
        // count vectors of length n summing to x
        fn go(n: u64, x: u64) -> u64 {
            if n == 1 { 1 } else { (0..=x).map(|k| go(n - 1, x - k)).sum() }
        }
        go(n, x)
    };
    let placements_ok = (1..=6).all(|n| (0..=4).all(|x| placement_count(n, x) == BigUint::from(brute(n, x))));
    let p: f64 = overflow_probability_analytic(8, 4, 6.0, 30.0);
    let shadow: f64 = shadow_per_robot_overhead(1000, 1000.0);
    check(
        (e - 8.333).abs() <= EXPECTED_FAILURES_TOL && placements_ok && (p - 0.010406).abs() <= ANALYTIC_TOL && shadow == 100.0,
        format!(
            "E[X] = {e:.4}; placements match enumeration: {placements_ok}; P(overflow) = {p:.7} ({:.2}% vs reference {REFERENCE_OVERFLOW_PCT}%); shadow overhead {shadow}%",
            100.0 * p
        ),
    )
}

fn export_bytes(out: &RunOutcome) -> BTreeMap<String, Vec<u8>> {
    let dir = tempfile::tempdir().unwrap();
    write_exports(dir.path(), &out.metrics, &out.trace).unwrap();
    let mut files = BTreeMap::new();
    for e in fs::read_dir(dir.path()).unwrap() {
        let p = e.unwrap().path();
        files.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
    }
    files
}

fn c10_determinism(nav: &Sweep) -> Result<String, String> {
    let mut compared = 0;
    let mut differ = Vec::new();
    for name in FAILURE_SCENARIOS.iter().chain(["nav_healthy"].iter()) {
        let spec = scenario(name);
        let (a, b) = (export_bytes(&run(&spec, 3)), export_bytes(&run(&spec, 3)));
        compared += 1;
        if a != b {
            differ.push(name.to_string());
        }
    }
    for (s, seed, o) in nav.iter().filter(|r| r.1 <= 3) {
        let again = run(&scenario("nav_scratch").with_strategy(*s).unwrap(), *seed);
        compared += 1;
        if export_bytes(o) != export_bytes(&again) {
            differ.push(format!("nav_scratch/{s}/{seed}"));
        }
    }
    check(differ.is_empty() && compared > 0, format!("{compared} export sets compared byte for byte; differing: {differ:?}"))
}

fn c11_bt() -> Result<String, String> {
    let (trees, cases) = common::bt_oracle::exhaustive_check(3, 3);
    check(true, format!("{trees} trees, {cases} leaf assignments agree with the recursive evaluator"))
}

fn main() {
    let nav = sweep("nav_scratch", 10);
    let criteria: Vec<Criterion> = vec![
        ("recovery time sum", Box::new(|| c1_sum(&nav))),
        ("strategy ordering", Box::new(|| c2_ordering(&nav))),
        ("cluster latency constants", Box::new(|| c3_cluster(&nav))),
        ("detection bound", Box::new(c4_detection)),
        ("cpu ratios", Box::new(|| c5_cpu(&nav))),
        ("external supervision", Box::new(c6_supervision)),
        ("state continuity", Box::new(c7_continuity)),
        ("manipulation subset", Box::new(c8_manipulation)),
        ("fleet math", Box::new(c9_fleet)),
        ("determinism", Box::new(|| c10_determinism(&nav))),
        ("behavior tree oracle", Box::new(c11_bt)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        // a panicking check counts as FAIL
        let res = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match res {
            Ok(d) => println!("PASS {:>2} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
