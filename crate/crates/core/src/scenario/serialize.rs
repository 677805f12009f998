use std::fmt::Write;

use super::{InjectionKind, ScenarioSpec, TaskGoals};
use crate::bt::{BtNode, NodeKind};
use crate::time::Millis;

/// Writes `spec` in canonical form. Every field is written explicitly, so
/// the output does not depend on parser defaults; an empty injection list
/// and a missing monitor tree are omitted.
pub fn serialize_scenario(spec: &ScenarioSpec) -> String {
    let mut o = String::new();
    let w = &mut o;
    line(w, 0, "version", "1");
    line(w, 0, "scenario", &spec.name);
    line(w, 0, "duration", &dur(spec.duration));

    let c = &spec.cluster;
    block(w, 0, "cluster");
    line(w, 2, "pod_restart_latency", &dur(c.pod_restart_latency));
    line(w, 2, "policy_patch_latency", &dur(c.policy_patch_latency));
    line(w, 2, "cpu_sample_period", &dur(c.cpu_sample_period));
    line(w, 2, "jitter", &c.jitter.to_string());

    let s = &spec.supervisor;
    block(w, 0, "supervisor");
    line(w, 2, "tick_period", &dur(s.tick_period));
    line(w, 2, "checkpoint_period", &dur(s.checkpoint_period));
    line(w, 2, "cpu", &s.cpu.to_string());

    for wl in &spec.workloads {
        block(w, 0, &format!("workload {}", wl.name));
        line(w, 2, "kind", wl.kind.keyword());
        line(w, 2, "startup_time", &dur(wl.startup_time));
        line(w, 2, "init_time", &dur(wl.init_time));
        line(w, 2, "state_init_time", &dur(wl.state_init_time));
        for t in &wl.topics {
            line(w, 2, &format!("topic {}", t.id), &format!("{} {}", t.role.keyword(), t.rate_hz));
        }
        block(w, 2, "cpu");
        line(w, 4, "pod_started", &wl.cpu.pod_started.to_string());
        line(w, 4, "app_initialized", &wl.cpu.app_initialized.to_string());
        line(w, 4, "shadow_execution", &wl.cpu.shadow_execution.to_string());
        line(w, 4, "active", &wl.cpu.active.to_string());
        if !wl.depends_on.is_empty() {
            line(w, 2, "depends_on", &wl.depends_on.join(", "));
        }
        line(w, 2, "strategy", wl.strategy.keyword());
        if let Some(g) = &wl.fallback_group {
            line(w, 2, "fallback_group", g);
        }
        line(w, 2, "auto_restart", &wl.auto_restart.to_string());
        line(w, 2, "max_speed", &wl.max_speed.to_string());
        line(w, 2, "max_turn_rate", &wl.max_turn_rate.to_string());
        line(w, 2, "max_joint_speed", &wl.max_joint_speed.to_string());
    }

    for t in &spec.tasks {
        block(w, 0, &format!("task {}", t.id));
        line(w, 2, "workload", &t.workload);
        match &t.goals {
            TaskGoals::Navigate(g) => {
                let v: Vec<String> = g.iter().map(|(x, y)| format!("({x}, {y})")).collect();
                line(w, 2, "navigate", &v.join(" "));
            }
            TaskGoals::MoveArm(g) => {
                let v: Vec<String> = g
                    .iter()
                    .map(|q| format!("[{}]", q.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
                    .collect();
                line(w, 2, "move_arm", &v.join(" "));
            }
        }
    }

    for m in &spec.frequency_monitors {
        block(w, 0, &format!("frequency_monitor {}", m.id));
        line(w, 2, "topic", &m.topic);
        line(w, 2, "min_rate", &m.min_rate.to_string());
        line(w, 2, "window", &dur(m.window));
    }
    for m in &spec.supervision_monitors {
        block(w, 0, &format!("supervision_monitor {}", m.id));
        line(w, 2, "commanded_topic", &m.commanded_topic);
        line(w, 2, "observed_pose_topic", &m.observed_pose_topic);
        line(w, 2, "speed_tolerance", &m.speed_tolerance.to_string());
        line(w, 2, "sustain", &dur(m.sustain));
        line(w, 2, "sensor_noise_sigma", &m.sensor_noise_sigma.to_string());
        line(w, 2, "sensor_rate", &m.sensor_rate.to_string());
    }

    if let Some(root) = &spec.monitors {
        block(w, 0, "monitors");
        node(w, 2, root);
    }
    for m in &spec.mitigation {
        match &m.workload {
            Some(wl) => block(w, 0, &format!("mitigation {} {}", m.class, wl)),
            None => block(w, 0, &format!("mitigation {}", m.class)),
        }
        node(w, 2, &m.tree);
    }

    if !spec.injections.is_empty() {
        block(w, 0, "injections");
        for i in &spec.injections {
            let what = match &i.kind {
                InjectionKind::DeletePod(t) => format!("delete_pod({t})"),
                InjectionKind::SilentRemap(t) => format!("silent_remap({t})"),
            };
            line(w, 2, &format!("at {}", dur(i.at)), &what);
        }
    }
    o
}

fn dur(d: Millis) -> String {
    if d.0 != 0 && d.0.is_multiple_of(1000) {
        format!("{}s", d.0 / 1000)
    } else {
        format!("{}ms", d.0)
    }
}

fn line(w: &mut String, indent: usize, key: &str, value: &str) {
    let _ = writeln!(w, "{:indent$}{key}: {value}", "");
}

fn block(w: &mut String, indent: usize, key: &str) {
    let _ = writeln!(w, "{:indent$}{key}:", "");
}

fn node(w: &mut String, indent: usize, n: &BtNode) {
    let head = format!("{} {}", n.kind.keyword(), n.name);
    match &n.kind {
        NodeKind::Condition { predicate: call } | NodeKind::Action { action: call } => {
            line(w, indent, &head, call);
            return;
        }
        _ => block(w, indent, &head),
    }
    match &n.kind {
        NodeKind::Parallel { success_threshold } => line(w, indent + 2, "threshold", &success_threshold.to_string()),
        NodeKind::Retry { max_attempts } => line(w, indent + 2, "max_attempts", &max_attempts.to_string()),
        NodeKind::Timeout { budget } => line(w, indent + 2, "budget", &dur(*budget)),
        _ => {}
    }
    for c in &n.children {
        node(w, indent + 2, c);
    }
}
