mod common;

use std::fs;

use mitsim_core::metrics::{cpu_summary_csv, reports_csv};
use mitsim_core::monitoring::FailureClass;
use mitsim_core::{parse_scenario, run, ScenarioSpec};

/// `nav_scratch` with an extra mitigation tree inserted before its injections.
fn scratch_with_tree(tree: &str) -> ScenarioSpec {
    let text = fs::read_to_string(common::scenario_path("nav_scratch")).unwrap();
    let text = text.replace("injections:", &format!("{tree}\ninjections:"));
    parse_scenario(&text).unwrap_or_else(|d| panic!("{d:?}"))
}

#[test]
fn scratch_steps_run_in_tree_order() {
    let out = run(&common::scenario("nav_scratch"), 1);
    let starts: Vec<&str> = out
        .trace
        .of_kind("mitigation_step")
        .filter(|e| e.get("phase") == Some("start"))
        .map(|e| e.get("action").unwrap())
        .collect();
    assert_eq!(starts, ["restart_scratch", "start_app", "initialize", "handover", "promote"]);
    let r = &out.metrics.reports[0];
    assert_eq!(r.steps, starts);
}

#[test]
fn dependency_is_recovered_before_the_workload() {
    let out = run(&common::scenario("nav_dependency"), 1);
    let r = &out.metrics.reports[0];
    let own: Vec<&str> = r.steps.iter().filter(|s| !s.starts_with("loc/")).map(String::as_str).collect();
    assert_eq!(own, ["recover_dependency(loc)", "restart_scratch", "start_app", "initialize", "handover", "promote"]);
    let last_dep = r.steps.iter().rposition(|s| s.starts_with("loc/")).unwrap();
    assert_eq!(r.steps[last_dep], "loc/promote");
    assert_eq!(r.steps[last_dep + 1], "restart_scratch");
    let dep_done = out.trace.first("dependency_recovery", &[("phase", "success")]).unwrap().t;
    let redeploy = out
        .trace
        .first("mitigation_step", &[("action", "restart_scratch"), ("workload", "nav"), ("phase", "start")])
        .unwrap()
        .t;
    assert!(dep_done <= redeploy);
    assert_eq!(out.exit_code(), 0);
}

#[test]
fn promoting_an_active_instance_warns_and_succeeds() {
    let spec = scratch_with_tree(
        "mitigation topic_silence nav:
  sequence twice:
    action a: restart_scratch
    action b: start_app
    action c: initialize
    action d: handover
    action e: promote
    action f: promote
",
    );
    let out = run(&spec, 1);
    assert!(out.trace.first("warning", &[("what", "promote_active")]).is_some());
    assert_eq!(out.exit_code(), 0);
    assert_eq!(out.metrics.reports.len(), 1);
}

#[test]
fn missing_standby_escalates() {
    let spec = scratch_with_tree(
        "mitigation topic_silence nav:
  sequence no_standby:
    action a: connect_fallback
    action b: promote
",
    );
    let out = run(&spec, 1);
    assert!(out.trace.first("mitigation_fault", &[]).is_some());
    assert_eq!(out.escalations.len(), 1);
    assert_eq!(out.exit_code(), 3);
    assert!(out.metrics.reports.is_empty());
}

#[test]
fn remap_is_a_behavior_discrepancy() {
    let out = run(&common::scenario("nav_remap"), 4);
    assert_eq!(out.failures.len(), 1);
    assert_eq!(out.failures[0].class, FailureClass::BehaviorDiscrepancy);
    assert!(!out.failures[0].spurious);
}

#[test]
fn exported_reports_satisfy_the_sum_and_cpu_rows_add_up() {
    for name in common::FAILURE_SCENARIOS {
        let out = run(&common::scenario(name), 2);
        let csv = reports_csv(&out.metrics).unwrap();
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let col = |n: &str| header.iter().position(|h| *h == n).unwrap();
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            let v = |n: &str| f[col(n)].parse::<u64>().unwrap();
            assert_eq!(v("t_detection") + v("t_cluster") + v("t_startup") + v("t_reinit"), v("t_recovery"), "{name}");
            assert_eq!(v("t_detected") - v("t_failure"), v("t_detection"));
        }
        let means = out.metrics.container_means();
        let total: f64 = means.values().map(|m| *m.numer() as f64 / *m.denom() as f64).sum();
        let summary = cpu_summary_csv(&out.metrics);
        let cluster_row = summary.lines().find(|l| l.contains(",cluster,")).unwrap();
        let shown: f64 = cluster_row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((shown - total).abs() <= 0.05, "{name}: {shown} vs {total}");
    }
}
