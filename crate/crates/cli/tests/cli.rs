use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mitsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mitsim")).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.scenario"))
        .to_string_lossy()
        .into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn run_writes_exports_and_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = mitsim(&["run", &scenario("nav_shadow"), "--seed", "4", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let files = read_dir(a.path());
    let names: Vec<&str> = files.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(names, ["cpu.csv", "cpu_summary.csv", "reports.csv", "trace.tsv"]);
    assert_eq!(files, read_dir(b.path()));
    let reports = String::from_utf8(files[2].1.clone()).unwrap();
    assert!(reports.lines().nth(1).unwrap().starts_with("nav_shadow-seed4,nav,topic_silence,fallback_shadow_execution,"));
}

#[test]
fn strategy_override_changes_the_recovery() {
    let d = tempfile::tempdir().unwrap();
    let o = mitsim(&["run", &scenario("nav_scratch"), "--strategy", "fallback_initialized", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let reports = fs::read_to_string(d.path().join("reports.csv")).unwrap();
    assert!(reports.contains(",fallback_initialized,"));
    let o = mitsim(&["run", &scenario("manip_scratch"), "--strategy", "fallback_initialized", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn sweep_tables_and_reproducibility() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = mitsim(&["sweep", &scenario("nav_scratch"), "--seeds", "1-3", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(read_dir(a.path()), read_dir(b.path()));
    let table = fs::read_to_string(a.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "strategy,t_detection,t_cluster,t_startup,t_reinit,t_recovery,sigma_cpu");
    assert_eq!(rows[1], "restart_scratch,500.0,2900.0,2000.0,1500.0,6900.0,1200.0");
    assert_eq!(rows.len(), 5);
    let reports = fs::read_to_string(a.path().join("reports.csv")).unwrap();
    assert_eq!(reports.lines().count(), 1 + 4 * 3);
    assert_eq!(reports.lines().filter(|l| l.starts_with("run_id")).count(), 1);
}

#[test]
fn sweep_skips_inapplicable_strategies() {
    let d = tempfile::tempdir().unwrap();
    let o = mitsim(&["sweep", &scenario("manip_scratch"), "--seeds", "1", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipping fallback_initialized"));
    let table = fs::read_to_string(d.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn input_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.scenario");
    fs::write(&bad, "version: 1\nscenario: x\nduration: 1s\nbogus\n").unwrap();
    let o = mitsim(&["run", bad.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.scenario:4:1"));
    assert_eq!(code(&mitsim(&["run", "/nonexistent.scenario"])), 1);
    assert_eq!(code(&mitsim(&["sweep", &scenario("nav_scratch"), "--seeds", "9-1"])), 1);
    assert_eq!(code(&mitsim(&["fleet", "--trials", "10"])), 1);
    assert_eq!(code(&mitsim(&["frobnicate"])), 1);
    assert_eq!(code(&mitsim(&["--help"])), 0);
}

#[test]
fn scenario_fault_and_escalation_codes() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let dep = fs::read_to_string(scenario("nav_dependency")).unwrap();
    let cyclic = dep.replace(
        "injections:",
        "mitigation topic_silence loc:\n  sequence recover_loc:\n    action back: recover_dependency(nav)\n\ninjections:",
    );
    let p = d.path().join("cyclic.scenario");
    fs::write(&p, cyclic).unwrap();
    assert_eq!(code(&mitsim(&["run", p.to_str().unwrap(), "--out", out])), 2);

    let scratch = fs::read_to_string(scenario("nav_scratch")).unwrap();
    let stuck = scratch.replace(
        "injections:",
        "mitigation topic_silence nav:\n  sequence no_standby:\n    action a: connect_fallback\n\ninjections:",
    );
    let p = d.path().join("stuck.scenario");
    fs::write(&p, stuck).unwrap();
    assert_eq!(code(&mitsim(&["run", p.to_str().unwrap(), "--out", out])), 3);
}

#[test]
fn fleet_report() {
    let o = mitsim(&["fleet", "--trials", "20000"]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8(o.stdout).unwrap();
    for line in [
        "expected_failures: 8.333",
        "failures_x: 8 (expected, rounded to nearest)",
        "placement_count: 25504066636461931375",
        "overflow_fixed_window_analytic: 0.0104064 (1.04%)",
        "overhead_fallbacks_pct: 0.24",
        "overhead_shadow_per_robot_pct: 100",
    ] {
        assert!(s.lines().any(|l| l.starts_with(line)), "missing '{line}' in\n{s}");
    }
    assert!(s.contains("overflow_reference: 0.012"));
}

#[test]
fn fleet_is_deterministic_per_seed() {
    let args = ["fleet", "--trials", "100000", "--seed", "7"];
    let (a, b) = (mitsim(&args), mitsim(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let other = mitsim(&["fleet", "--trials", "100000", "--seed", "8"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn scratch_run_reports_one_recovery() {
    let d = tempfile::tempdir().unwrap();
    let o = mitsim(&["run", &scenario("nav_scratch"), "--seed", "1", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let reports = fs::read_to_string(d.path().join("reports.csv")).unwrap();
    assert_eq!(reports.lines().count(), 2);
    assert!(reports.lines().nth(1).unwrap().contains(",500,2900,2000,1500,6900,"));
}
