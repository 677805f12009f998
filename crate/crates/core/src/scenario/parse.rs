use std::collections::{BTreeMap, HashMap, HashSet};

use super::lex::{lex, Stmt, Word};
use super::{
    ClusterParams, Diagnostic, FailureInjection, InjectionKind, MitigationTree, ScenarioSpec, SupervisorParams,
    TaskGoals, TaskSpec,
};
use crate::bt::{validate, BtNode, NodeKind, ValidationErrorKind};
use crate::mitigation::RecoveryStrategy;
use crate::monitoring::{FailureClass, FrequencyMonitorSpec, SupervisionSpec};
use crate::time::Millis;
use crate::workload::{CpuProfile, TopicRole, TopicSpec, WorkloadKind, WorkloadProfile};

/// Condition functions whose argument is resolved at load time.
pub(crate) const PREDICATES: [(&str, RefKind); 3] = [
    ("monitor", RefKind::Monitor),
    ("task_requested", RefKind::Workload),
    ("workload_active", RefKind::Workload),
];

/// Mitigation steps. All act on the workload under mitigation except
/// `recover_dependency`, which names the dependency.
pub(crate) const ACTIONS: [(&str, Option<RefKind>); 7] = [
    ("restart_scratch", None),
    ("connect_fallback", None),
    ("start_app", None),
    ("initialize", None),
    ("handover", None),
    ("promote", None),
    ("recover_dependency", Some(RefKind::Workload)),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum RefKind {
    Workload,
    Topic,
    Monitor,
}

impl RefKind {
    fn noun(self) -> &'static str {
        match self {
            RefKind::Workload => "workload",
            RefKind::Topic => "topic",
            RefKind::Monitor => "monitor",
        }
    }
}

struct Ref {
    kind: RefKind,
    name: String,
    line: usize,
    col: usize,
}

/// Parses and validates a scenario document. Either every check passes or
/// all diagnostics are returned, sorted by position.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, Vec<Diagnostic>> {
    let mut p = Parser::default();
    let stmts = lex(text, &mut p.diags);
    let spec = p.document(&stmts);
    p.resolve(&spec);
    if p.diags.is_empty() {
        Ok(spec)
    } else {
        let mut d = p.diags;
        d.sort_by_key(|d| (d.line, d.column));
        d.dedup();
        Err(d)
    }
}

#[derive(Default)]
struct Parser {
    diags: Vec<Diagnostic>,
    refs: Vec<Ref>,
    workload_pos: HashMap<String, (usize, usize)>,
    topic_pos: HashMap<String, (usize, usize)>,
    monitor_pos: HashMap<String, (usize, usize)>,
    /// Extra checks that need the whole document: (line, col, check).
    deferred: Vec<Deferred>,
}

enum Deferred {
    WindowCoversPeriod { monitor: usize, line: usize, col: usize },
    TaskMatchesWorkload { task: usize, line: usize, col: usize },
    SupervisionRoles { monitor: usize, line: usize, col: usize },
}

pub(crate) fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '.')
}

impl Parser {
    fn err(&mut self, line: usize, col: usize, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(line, col, msg));
    }

    fn document(&mut self, stmts: &[Stmt]) -> ScenarioSpec {
        let mut spec = ScenarioSpec {
            name: String::new(),
            duration: Millis::ZERO,
            cluster: ClusterParams::default(),
            supervisor: SupervisorParams::default(),
            workloads: Vec::new(),
            tasks: Vec::new(),
            frequency_monitors: Vec::new(),
            supervision_monitors: Vec::new(),
            monitors: None,
            mitigation: Vec::new(),
            injections: Vec::new(),
        };
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut version = false;
        let mut task_pos: HashSet<String> = HashSet::new();
        let mut mitigation_keys: HashSet<(FailureClass, Option<String>)> = HashSet::new();
        let mut duration_stmt = None;
        let mut injection_stmts = Vec::new();

        for s in stmts {
            let kw = s.keyword().to_string();
            let singleton = matches!(
                kw.as_str(),
                "version" | "scenario" | "duration" | "cluster" | "supervisor" | "monitors" | "injections"
            );
            if singleton {
                if s.head.len() != 1 {
                    self.err(s.line, s.head[1].col, format!("`{kw}` takes no name"));
                    continue;
                }
                if let Some(prev) = seen.insert(kw.clone(), s.line) {
                    self.err(s.line, s.col(), format!("`{kw}` already given on line {prev}"));
                    continue;
                }
            }
            match kw.as_str() {
                "version" => {
                    version = true;
                    if let Some(v) = self.value(s) {
                        if v.text != "1" {
                            self.err(s.line, v.col, format!("unsupported version `{}` (expected 1)", v.text));
                        }
                    }
                }
                "scenario" => {
                    if let Some(v) = self.ident_value(s) {
                        spec.name = v;
                    }
                }
                "duration" => {
                    if let Some(d) = self.duration_value(s) {
                        spec.duration = d;
                        duration_stmt = Some(s);
                        if d == Millis::ZERO {
                            self.err(s.line, s.value.as_ref().unwrap().col, "duration must be > 0");
                        }
                    }
                }
                "cluster" => self.cluster(s, &mut spec.cluster),
                "supervisor" => self.supervisor(s, &mut spec.supervisor),
                "workload" => {
                    if let Some(name) = self.block_name(s) {
                        if let Some(&(l, _)) = self.workload_pos.get(&name) {
                            self.err(s.line, s.head[1].col, format!("duplicate workload `{name}` (first on line {l})"));
                        } else {
                            self.workload_pos.insert(name.clone(), (s.line, s.head[1].col));
                        }
                        let w = self.workload(s, name);
                        spec.workloads.push(w);
                    }
                }
                "task" => {
                    if let Some(id) = self.block_name(s) {
                        if !task_pos.insert(id.clone()) {
                            self.err(s.line, s.head[1].col, format!("duplicate task `{id}`"));
                        }
                        if let Some(t) = self.task(s, id) {
                            self.deferred.push(Deferred::TaskMatchesWorkload {
                                task: spec.tasks.len(),
                                line: s.line,
                                col: s.col(),
                            });
                            spec.tasks.push(t);
                        }
                    }
                }
                "frequency_monitor" => {
                    if let Some(id) = self.block_name(s) {
                        self.monitor_id(s, &id);
                        if let Some(m) = self.frequency_monitor(s, id) {
                            self.deferred.push(Deferred::WindowCoversPeriod {
                                monitor: spec.frequency_monitors.len(),
                                line: s.line,
                                col: s.col(),
                            });
                            spec.frequency_monitors.push(m);
                        }
                    }
                }
                "supervision_monitor" => {
                    if let Some(id) = self.block_name(s) {
                        self.monitor_id(s, &id);
                        if let Some(m) = self.supervision_monitor(s, id) {
                            self.deferred.push(Deferred::SupervisionRoles {
                                monitor: spec.supervision_monitors.len(),
                                line: s.line,
                                col: s.col(),
                            });
                            spec.supervision_monitors.push(m);
                        }
                    }
                }
                "monitors" => spec.monitors = self.single_tree(s),
                "mitigation" => {
                    if let Some(m) = self.mitigation(s) {
                        if !mitigation_keys.insert((m.class, m.workload.clone())) {
                            self.err(s.line, s.col(), "duplicate mitigation tree for this failure class and workload");
                        }
                        spec.mitigation.push(m);
                    }
                }
                "injections" => {
                    self.no_value(s);
                    for c in &s.children {
                        if let Some(inj) = self.injection(c) {
                            injection_stmts.push(c);
                            spec.injections.push(inj);
                        }
                    }
                }
                _ => self.err(s.line, s.col(), format!("unknown key `{kw}`")),
            }
        }
        let (end_line, _) = stmts.last().map(|s| (s.line, 0)).unwrap_or((1, 0));
        if !version {
            self.err(1, 1, "missing `version: 1`");
        }
        if spec.name.is_empty() && !seen.contains_key("scenario") {
            self.err(1, 1, "missing `scenario: <name>`");
        }
        if duration_stmt.is_none() && !seen.contains_key("duration") {
            self.err(1, 1, "missing `duration`");
        }
        if spec.workloads.is_empty() {
            self.err(end_line, 1, "at least one workload is required");
        }
        if spec.duration > Millis::ZERO {
            for (inj, s) in spec.injections.iter().zip(&injection_stmts) {
                if inj.at >= spec.duration {
                    self.err(s.line, s.head[1].col, format!("injection at {} ms is not before the end ({} ms)", inj.at, spec.duration));
                }
            }
        }
        spec
    }

    // ---- value helpers

    fn value<'a>(&mut self, s: &'a Stmt) -> Option<&'a Word> {
        if !s.children.is_empty() {
            // reported by the lexer when a value is present; here it is a block
            self.err(s.line, s.col(), format!("`{}` expects a value, not a block", s.keyword()));
            return None;
        }
        match &s.value {
            Some(v) => Some(v),
            None => {
                self.diags.push(s.value_diag(format!("`{}` requires a value", s.keyword())));
                None
            }
        }
    }

    fn no_value(&mut self, s: &Stmt) {
        if let Some(v) = &s.value {
            self.err(s.line, v.col, format!("`{}` opens a block and takes no value", s.keyword()));
        }
    }

    fn single_key(&mut self, s: &Stmt) -> bool {
        if s.head.len() != 1 {
            self.err(s.line, s.head[1].col, format!("unexpected `{}`", s.head[1].text));
            return false;
        }
        true
    }

    fn ident_value(&mut self, s: &Stmt) -> Option<String> {
        let v = self.value(s)?;
        self.ident(&v.text, s.line, v.col)
    }

    fn ident(&mut self, text: &str, line: usize, col: usize) -> Option<String> {
        if is_ident(text) {
            Some(text.to_string())
        } else {
            self.err(line, col, format!("invalid identifier `{text}`"));
            None
        }
    }

    fn duration_value(&mut self, s: &Stmt) -> Option<Millis> {
        let v = self.value(s)?;
        self.duration(&v.text, s.line, v.col)
    }

    fn duration(&mut self, text: &str, line: usize, col: usize) -> Option<Millis> {
        let parsed = if let Some(n) = text.strip_suffix("ms") {
            digits(n)
        } else if let Some(n) = text.strip_suffix('s') {
            digits(n).and_then(|v| v.checked_mul(1000))
        } else {
            None
        };
        if parsed.is_none() {
            self.err(line, col, format!("invalid duration `{text}` (expected an integer with unit `ms` or `s`)"));
        }
        parsed.map(Millis)
    }

    fn positive_duration(&mut self, s: &Stmt) -> Option<Millis> {
        let d = self.duration_value(s)?;
        if d == Millis::ZERO {
            self.diags.push(s.value_diag(format!("`{}` must be > 0", s.keyword())));
            return None;
        }
        Some(d)
    }

    fn float(&mut self, text: &str, line: usize, col: usize) -> Option<f64> {
        match text.parse::<f64>() {
            Ok(x) if x.is_finite() && text.chars().all(|c| c.is_ascii_digit() || "+-.eE".contains(c)) => Some(x),
            _ => {
                self.err(line, col, format!("invalid number `{text}`"));
                None
            }
        }
    }

    fn float_value(&mut self, s: &Stmt) -> Option<f64> {
        let v = self.value(s)?;
        self.float(&v.text, s.line, v.col)
    }

    fn positive_float(&mut self, s: &Stmt) -> Option<f64> {
        let x = self.float_value(s)?;
        if x <= 0.0 {
            self.diags.push(s.value_diag(format!("`{}` must be > 0", s.keyword())));
            return None;
        }
        Some(x)
    }

    fn uint_value(&mut self, s: &Stmt) -> Option<u64> {
        let v = self.value(s)?;
        let n = digits(&v.text);
        if n.is_none() {
            self.err(s.line, v.col, format!("invalid integer `{}`", v.text));
        }
        n
    }

    fn cpu_value(&mut self, s: &Stmt) -> Option<u32> {
        let n = self.uint_value(s)?;
        match u32::try_from(n) {
            Ok(n) => Some(n),
            Err(_) => {
                self.diags.push(s.value_diag("milliCPU value out of range"));
                None
            }
        }
    }

    fn bool_value(&mut self, s: &Stmt) -> Option<bool> {
        let v = self.value(s)?;
        match v.text.as_str() {
            "true" => Some(true),
            "false" => Some(false),
            other => {
                self.err(s.line, v.col, format!("expected `true` or `false`, found `{other}`"));
                None
            }
        }
    }

    fn block_name(&mut self, s: &Stmt) -> Option<String> {
        if s.head.len() != 2 {
            let col = s.head.get(2).map(|w| w.col).unwrap_or(s.colon_col);
            self.err(s.line, col, format!("expected `{} <name>:`", s.keyword()));
            return None;
        }
        self.no_value(s);
        self.ident(&s.head[1].text, s.line, s.head[1].col)
    }

    fn reference(&mut self, kind: RefKind, name: &str, line: usize, col: usize) {
        self.refs.push(Ref { kind, name: name.to_string(), line, col });
    }

    fn monitor_id(&mut self, s: &Stmt, id: &str) {
        if let Some(&(l, _)) = self.monitor_pos.get(id) {
            self.err(s.line, s.head[1].col, format!("duplicate monitor `{id}` (first on line {l})"));
        } else {
            self.monitor_pos.insert(id.to_string(), (s.line, s.head[1].col));
        }
    }

    // ---- blocks

    fn cluster(&mut self, s: &Stmt, c: &mut ClusterParams) {
        self.no_value(s);
        let mut seen = HashSet::new();
        for k in &s.children {
            if !self.single_key(k) || !self.once(&mut seen, k) {
                continue;
            }
            match k.keyword() {
                "pod_restart_latency" => set(&mut c.pod_restart_latency, self.positive_duration(k)),
                "policy_patch_latency" => set(&mut c.policy_patch_latency, self.positive_duration(k)),
                "cpu_sample_period" => set(&mut c.cpu_sample_period, self.positive_duration(k)),
                "jitter" => {
                    if let Some(j) = self.float_value(k) {
                        if (0.0..1.0).contains(&j) {
                            c.jitter = j;
                        } else {
                            self.diags.push(k.value_diag("`jitter` must be in [0, 1)"));
                        }
                    }
                }
                other => self.err(k.line, k.col(), format!("unknown key `{other}` in cluster")),
            }
        }
    }

    fn supervisor(&mut self, s: &Stmt, p: &mut SupervisorParams) {
        self.no_value(s);
        let mut seen = HashSet::new();
        for k in &s.children {
            if !self.single_key(k) || !self.once(&mut seen, k) {
                continue;
            }
            match k.keyword() {
                "tick_period" => set(&mut p.tick_period, self.positive_duration(k)),
                "checkpoint_period" => set(&mut p.checkpoint_period, self.positive_duration(k)),
                "cpu" => set(&mut p.cpu, self.cpu_value(k)),
                other => self.err(k.line, k.col(), format!("unknown key `{other}` in supervisor")),
            }
        }
    }

    fn once(&mut self, seen: &mut HashSet<String>, k: &Stmt) -> bool {
        if !seen.insert(k.keyword().to_string()) {
            self.err(k.line, k.col(), format!("`{}` given twice", k.keyword()));
            return false;
        }
        true
    }

    fn workload(&mut self, s: &Stmt, name: String) -> WorkloadProfile {
        // kind first: it selects the defaults
        let mut kind = None;
        for k in s.children.iter().filter(|k| k.keyword() == "kind" && k.head.len() == 1) {
            if let Some(v) = self.value(k) {
                kind = WorkloadKind::from_keyword(&v.text);
                if kind.is_none() {
                    self.err(k.line, v.col, format!("unknown workload kind `{}`", v.text));
                }
            }
        }
        if !s.children.iter().any(|k| k.keyword() == "kind") {
            self.err(s.line, s.col(), format!("workload `{name}` requires `kind`"));
        }
        let mut w = WorkloadProfile::new(name.clone(), kind.unwrap_or(WorkloadKind::Service));
        let mut seen = HashSet::new();
        let mut strategy_pos = None;
        let mut group_pos = None;
        for k in &s.children {
            if k.keyword() == "topic" {
                if k.head.len() != 2 {
                    self.err(k.line, k.col(), "expected `topic <id>: <role> <rate>`");
                    continue;
                }
                let Some(id) = self.ident(&k.head[1].text, k.line, k.head[1].col) else { continue };
                if let Some(&(l, _)) = self.topic_pos.get(&id) {
                    self.err(k.line, k.head[1].col, format!("duplicate topic `{id}` (first on line {l})"));
                } else {
                    self.topic_pos.insert(id.clone(), (k.line, k.head[1].col));
                }
                let Some(v) = self.value(k) else { continue };
                let parts: Vec<&str> = v.text.split_whitespace().collect();
                if parts.len() != 2 {
                    self.err(k.line, v.col, "expected `<role> <rate>`");
                    continue;
                }
                let role = TopicRole::from_keyword(parts[0]);
                if role.is_none() {
                    self.err(k.line, v.col, format!("unknown topic role `{}`", parts[0]));
                }
                let rate_col = v.col + v.text.find(parts[1]).unwrap_or(0);
                let rate = self.float(parts[1], k.line, rate_col);
                if let Some(r) = rate {
                    if r <= 0.0 {
                        self.err(k.line, rate_col, "topic rate must be > 0");
                        continue;
                    }
                }
                if let (Some(role), Some(rate_hz)) = (role, rate) {
                    w.topics.push(TopicSpec { id, role, rate_hz });
                }
                continue;
            }
            if !self.single_key(k) || !self.once(&mut seen, k) {
                continue;
            }
            match k.keyword() {
                "kind" => {}
                "startup_time" => set(&mut w.startup_time, self.duration_value(k)),
                "init_time" => set(&mut w.init_time, self.duration_value(k)),
                "state_init_time" => set(&mut w.state_init_time, self.duration_value(k)),
                "cpu" => w.cpu = self.cpu_profile(k),
                "depends_on" => {
                    let Some(v) = self.value(k) else { continue };
                    let mut off = 0;
                    for part in v.text.split(',') {
                        let lead = part.len() - part.trim_start().len();
                        let col = v.col + v.text[..off + lead].chars().count();
                        off += part.len() + 1;
                        if let Some(dep) = self.ident(part.trim(), k.line, col) {
                            self.reference(RefKind::Workload, &dep, k.line, col);
                            if dep == name {
                                self.err(k.line, col, format!("workload `{name}` depends on itself"));
                            } else if w.depends_on.contains(&dep) {
                                self.err(k.line, col, format!("dependency `{dep}` listed twice"));
                            } else {
                                w.depends_on.push(dep);
                            }
                        }
                    }
                }
                "strategy" => {
                    let Some(v) = self.value(k) else { continue };
                    match RecoveryStrategy::from_keyword(&v.text) {
                        Some(st) => {
                            w.strategy = st;
                            strategy_pos = Some((k.line, v.col));
                        }
                        None => self.err(k.line, v.col, format!("unknown strategy `{}`", v.text)),
                    }
                }
                "fallback_group" => {
                    if let Some(g) = self.ident_value(k) {
                        w.fallback_group = Some(g);
                        group_pos = Some((k.line, k.col()));
                    }
                }
                "auto_restart" => set(&mut w.auto_restart, self.bool_value(k)),
                "max_speed" => set(&mut w.max_speed, self.positive_float(k)),
                "max_turn_rate" => set(&mut w.max_turn_rate, self.positive_float(k)),
                "max_joint_speed" => set(&mut w.max_joint_speed, self.positive_float(k)),
                other => self.err(k.line, k.col(), format!("unknown key `{other}` in workload")),
            }
        }
        if w.state_init_time > w.init_time {
            self.err(s.line, s.col(), format!("workload `{name}`: state_init_time exceeds init_time"));
        }
        if kind.is_some() && !w.strategy.applicable_to(w.kind) {
            let (l, c) = strategy_pos.unwrap_or((s.line, s.col()));
            self.err(l, c, format!("strategy `{}` is not applicable to {} workloads", w.strategy, w.kind));
        }
        if let Some((l, c)) = group_pos {
            if w.strategy != RecoveryStrategy::FallbackPodStarted {
                self.err(l, c, "`fallback_group` requires strategy `fallback_pod_started`");
            }
        }
        if w.topics.is_empty() {
            self.err(s.line, s.col(), format!("workload `{name}` declares no topics"));
        }
        let need = match w.kind {
            WorkloadKind::Navigation if kind.is_some() => vec![TopicRole::Command, TopicRole::Pose],
            WorkloadKind::Manipulation => vec![TopicRole::JointStates],
            _ => vec![],
        };
        for role in need {
            match w.topics.iter().filter(|t| t.role == role).count() {
                0 if !w.topics.is_empty() => {
                    self.err(s.line, s.col(), format!("{} workload `{name}` needs a `{}` topic", w.kind, role.keyword()))
                }
                n if n > 1 => self.err(s.line, s.col(), format!("workload `{name}` has more than one `{}` topic", role.keyword())),
                _ => {}
            }
        }
        w
    }

    fn cpu_profile(&mut self, s: &Stmt) -> CpuProfile {
        self.no_value(s);
        let mut c = CpuProfile::default();
        let mut seen = HashSet::new();
        for k in &s.children {
            if !self.single_key(k) || !self.once(&mut seen, k) {
                continue;
            }
            match k.keyword() {
                "pod_started" => set(&mut c.pod_started, self.cpu_value(k)),
                "app_initialized" => set(&mut c.app_initialized, self.cpu_value(k)),
                "shadow_execution" => set(&mut c.shadow_execution, self.cpu_value(k)),
                "active" => set(&mut c.active, self.cpu_value(k)),
                other => self.err(k.line, k.col(), format!("unknown key `{other}` in cpu")),
            }
        }
        c
    }

    fn task(&mut self, s: &Stmt, id: String) -> Option<TaskSpec> {
        let mut workload = None;
        let mut goals = None;
        let mut seen = HashSet::new();
        for k in &s.children {
            if !self.single_key(k) || !self.once(&mut seen, k) {
                continue;
            }
            match k.keyword() {
                "workload" => {
                    if let Some(w) = self.ident_value(k) {
                        let col = k.value.as_ref().unwrap().col;
                        self.reference(RefKind::Workload, &w, k.line, col);
                        workload = Some(w);
                    }
                }
                "navigate" | "move_arm" => {
                    if goals.is_some() {
                        self.err(k.line, k.col(), "a task has exactly one goal list");
                        continue;
                    }
                    let Some(v) = self.value(k) else { continue };
                    let (open, close) = if k.keyword() == "navigate" { ('(', ')') } else { ('[', ']') };
                    let Some(groups) = self.groups(&v.text, open, close, k.line, v.col) else { continue };
                    if k.keyword() == "navigate" {
                        let mut pts = Vec::new();
                        for g in groups {
                            if g.len() != 2 {
                                self.err(k.line, v.col, "navigation goals are `(x, y)` pairs");
                                break;
                            }
                            pts.push((g[0], g[1]));
                        }
                        goals = Some(TaskGoals::Navigate(pts));
                    } else {
                        if groups.iter().any(|g| g.len() != groups[0].len() || g.is_empty()) {
                            self.err(k.line, v.col, "arm targets must be non-empty and of equal length");
                        }
                        goals = Some(TaskGoals::MoveArm(groups));
                    }
                }
                other => self.err(k.line, k.col(), format!("unknown key `{other}` in task")),
            }
        }
        if workload.is_none() && !seen.contains("workload") {
            self.err(s.line, s.col(), format!("task `{id}` requires `workload`"));
        }
        if goals.is_none() && !seen.contains("navigate") && !seen.contains("move_arm") {
            self.err(s.line, s.col(), format!("task `{id}` requires `navigate` or `move_arm`"));
        }
        Some(TaskSpec { id, workload: workload?, goals: goals? })
    }

    /// Parses `(a, b) (c, d)` style lists of number groups.
    fn groups(&mut self, text: &str, open: char, close: char, line: usize, col: usize) -> Option<Vec<Vec<f64>>> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        let mut ok = true;
        while i < chars.len() {
            if chars[i].is_whitespace() {
                i += 1;
                continue;
            }
            if chars[i] != open {
                self.err(line, col + i, format!("expected `{open}`"));
                return None;
            }
            let Some(end) = chars[i..].iter().position(|c| *c == close).map(|p| p + i) else {
                self.err(line, col + i, format!("missing `{close}`"));
                return None;
            };
            let mut group = Vec::new();
            let mut start = i + 1;
            for (j, c) in chars.iter().enumerate().take(end + 1).skip(i + 1) {
                if *c == ',' || j == end {
                    let raw: String = chars[start..j].iter().collect();
                    let lead = raw.len() - raw.trim_start().len();
                    match self.float(raw.trim(), line, col + start + lead) {
                        Some(x) => group.push(x),
                        None => ok = false,
                    }
                    start = j + 1;
                }
            }
            out.push(group);
            i = end + 1;
        }
        if out.is_empty() {
            self.err(line, col, "goal list is empty");
            return None;
        }
        ok.then_some(out)
    }

    fn frequency_monitor(&mut self, s: &Stmt, id: String) -> Option<FrequencyMonitorSpec> {
        let mut topic = None;
        let mut m = FrequencyMonitorSpec::new(id.clone(), "", 1.0);
        let mut seen = HashSet::new();
        for k in &s.children {
            if !self.single_key(k) || !self.once(&mut seen, k) {
                continue;
            }
            match k.keyword() {
                "topic" => topic = self.topic_ref(k),
                "min_rate" => set(&mut m.min_rate, self.positive_float(k)),
                "window" => set(&mut m.window, self.positive_duration(k)),
                other => self.err(k.line, k.col(), format!("unknown key `{other}` in frequency_monitor")),
            }
        }
        if !seen.contains("min_rate") {
            self.err(s.line, s.col(), format!("frequency_monitor `{id}` requires `min_rate`"));
        }
        if !seen.contains("topic") {
            self.err(s.line, s.col(), format!("frequency_monitor `{id}` requires `topic`"));
        }
        m.topic = topic?;
        Some(m)
    }

    fn topic_ref(&mut self, k: &Stmt) -> Option<String> {
        let t = self.ident_value(k)?;
        let col = k.value.as_ref().unwrap().col;
        self.reference(RefKind::Topic, &t, k.line, col);
        Some(t)
    }

    fn supervision_monitor(&mut self, s: &Stmt, id: String) -> Option<SupervisionSpec> {
        let mut m = SupervisionSpec::new(id.clone(), "", "");
        let (mut cmd, mut pose) = (None, None);
        let mut seen = HashSet::new();
        for k in &s.children {
            if !self.single_key(k) || !self.once(&mut seen, k) {
                continue;
            }
            match k.keyword() {
                "commanded_topic" => cmd = self.topic_ref(k),
                "observed_pose_topic" => pose = self.topic_ref(k),
                "speed_tolerance" => set(&mut m.speed_tolerance, self.positive_float(k)),
                "sustain" => set(&mut m.sustain, self.positive_duration(k)),
                "sensor_noise_sigma" => {
                    if let Some(x) = self.float_value(k) {
                        if x < 0.0 {
                            self.diags.push(k.value_diag("`sensor_noise_sigma` must be ≥ 0"));
                        } else {
                            m.sensor_noise_sigma = x;
                        }
                    }
                }
                "sensor_rate" => set(&mut m.sensor_rate, self.positive_float(k)),
                other => self.err(k.line, k.col(), format!("unknown key `{other}` in supervision_monitor")),
            }
        }
        for key in ["commanded_topic", "observed_pose_topic"] {
            if !seen.contains(key) {
                self.err(s.line, s.col(), format!("supervision_monitor `{id}` requires `{key}`"));
            }
        }
        m.commanded_topic = cmd?;
        m.observed_pose_topic = pose?;
        Some(m)
    }

    fn mitigation(&mut self, s: &Stmt) -> Option<MitigationTree> {
        if s.head.len() < 2 || s.head.len() > 3 {
            self.err(s.line, s.col(), "expected `mitigation <failure_class> [<workload>]:`");
            return None;
        }
        let class = FailureClass::from_keyword(&s.head[1].text);
        if class.is_none() {
            self.err(s.line, s.head[1].col, format!("unknown failure class `{}`", s.head[1].text));
        }
        let workload = match s.head.get(2) {
            Some(w) => {
                let name = self.ident(&w.text, s.line, w.col)?;
                self.reference(RefKind::Workload, &name, s.line, w.col);
                Some(name)
            }
            None => None,
        };
        let tree = self.single_tree(s)?;
        Some(MitigationTree { class: class?, workload, tree })
    }

    fn injection(&mut self, s: &Stmt) -> Option<FailureInjection> {
        if s.keyword() != "at" || s.head.len() != 2 {
            self.err(s.line, s.col(), "expected `at <time>: delete_pod(<workload>)` or `silent_remap(<topic>)`");
            return None;
        }
        let at = self.duration(&s.head[1].text, s.line, s.head[1].col);
        let v = self.value(s)?;
        let (name, arg, arg_col) = self.call(&v.text, s.line, v.col)?;
        let kind = match (name.as_str(), arg) {
            ("delete_pod", Some(w)) => {
                self.reference(RefKind::Workload, &w, s.line, arg_col);
                InjectionKind::DeletePod(w)
            }
            ("silent_remap", Some(t)) => {
                self.reference(RefKind::Topic, &t, s.line, arg_col);
                InjectionKind::SilentRemap(t)
            }
            ("delete_pod" | "silent_remap", None) => {
                self.err(s.line, v.col, format!("`{name}` requires an argument"));
                return None;
            }
            _ => {
                self.err(s.line, v.col, format!("unknown injection `{name}`"));
                return None;
            }
        };
        Some(FailureInjection { at: at?, kind })
    }

    /// `name` or `name(arg)`.
    fn call(&mut self, text: &str, line: usize, col: usize) -> Option<(String, Option<String>, usize)> {
        let (name, arg, arg_col) = match text.find('(') {
            Some(p) => {
                let Some(inner) = text[p + 1..].strip_suffix(')') else {
                    self.err(line, col + text.chars().count(), "missing `)`");
                    return None;
                };
                let lead = inner.len() - inner.trim_start().len();
                let arg_col = col + text[..p + 1 + lead].chars().count();
                (text[..p].trim_end(), Some(inner.trim()), arg_col)
            }
            None => (text, None, col),
        };
        let name = self.ident(name, line, col)?;
        let arg = match arg {
            Some(a) => Some(self.ident(a, line, arg_col)?),
            None => None,
        };
        Some((name, arg, arg_col))
    }

    // ---- behavior trees

    /// A block holding exactly one node statement.
    fn single_tree(&mut self, s: &Stmt) -> Option<BtNode> {
        self.no_value(s);
        if s.children.len() != 1 {
            self.err(s.line, s.col(), format!("`{}` must contain exactly one root node", s.keyword()));
            return None;
        }
        let mut pos: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        let mut dup_pos = Vec::new();
        let root = self.node(&s.children[0], &mut pos, &mut dup_pos)?;
        let mut ok = true;
        for e in validate(&root) {
            ok = false;
            let (line, col) = match e.kind {
                ValidationErrorKind::DuplicateName => dup_pos.iter().find(|(n, _)| *n == e.node).map(|(_, p)| *p),
                _ => None,
            }
            .or_else(|| pos.get(&e.node).copied())
            .unwrap_or((s.line, s.col()));
            self.err(line, col, e.to_string());
        }
        ok.then_some(root)
    }

    fn node(
        &mut self,
        s: &Stmt,
        pos: &mut BTreeMap<String, (usize, usize)>,
        dup_pos: &mut Vec<(String, (usize, usize))>,
    ) -> Option<BtNode> {
        let kw = s.keyword();
        let known = ["sequence", "fallback", "parallel", "condition", "action", "inverter", "retry", "timeout"];
        if !known.contains(&kw) {
            self.err(s.line, s.col(), format!("unknown node kind `{kw}`"));
            return None;
        }
        if s.head.len() != 2 {
            self.err(s.line, s.col(), format!("expected `{kw} <name>:`"));
            return None;
        }
        let name = self.ident(&s.head[1].text, s.line, s.head[1].col)?;
        let here = (s.line, s.head[1].col);
        if pos.contains_key(&name) {
            dup_pos.push((name.clone(), here));
        } else {
            pos.insert(name.clone(), here);
        }
        if kw == "condition" || kw == "action" {
            let v = self.value(s)?;
            let (func, arg, arg_col) = self.call(&v.text, s.line, v.col)?;
            let canonical = match &arg {
                Some(a) => format!("{func}({a})"),
                None => func.clone(),
            };
            if kw == "condition" {
                if let Some((_, kind)) = PREDICATES.iter().find(|(f, _)| *f == func) {
                    match &arg {
                        Some(a) => self.reference(*kind, a, s.line, arg_col),
                        None => self.err(s.line, v.col, format!("`{func}` requires an argument")),
                    }
                }
                return Some(BtNode::condition(name, canonical));
            }
            if let Some((_, kind)) = ACTIONS.iter().find(|(f, _)| *f == func) {
                match (kind, &arg) {
                    (Some(k), Some(a)) => self.reference(*k, a, s.line, arg_col),
                    (Some(_), None) => self.err(s.line, v.col, format!("`{func}` requires an argument")),
                    (None, Some(_)) => self.err(s.line, arg_col, format!("`{func}` takes no argument")),
                    (None, None) => {}
                }
            }
            return Some(BtNode::action(name, canonical));
        }
        self.no_value(s);
        let mut children = Vec::new();
        let mut threshold = None;
        let mut max_attempts = None;
        let mut budget = None;
        let mut seen = HashSet::new();
        for c in &s.children {
            if c.head.len() == 1 && !known.contains(&c.keyword()) {
                if !self.once(&mut seen, c) {
                    continue;
                }
                match (kw, c.keyword()) {
                    ("parallel", "threshold") => threshold = self.uint_value(c).map(|n| n as usize),
                    ("retry", "max_attempts") => {
                        max_attempts = self.uint_value(c).and_then(|n| u32::try_from(n).ok());
                    }
                    ("timeout", "budget") => budget = self.positive_duration(c),
                    (_, other) => self.err(c.line, c.col(), format!("unknown key `{other}` in {kw}")),
                }
                continue;
            }
            if let Some(n) = self.node(c, pos, dup_pos) {
                children.push(n);
            }
        }
        let kind = match kw {
            "sequence" => NodeKind::Sequence,
            "fallback" => NodeKind::Fallback,
            "inverter" => NodeKind::Inverter,
            "parallel" => NodeKind::Parallel { success_threshold: self.required(s, "threshold", threshold)? },
            "retry" => NodeKind::Retry { max_attempts: self.required(s, "max_attempts", max_attempts)? },
            _ => NodeKind::Timeout { budget: self.required(s, "budget", budget)? },
        };
        Some(BtNode::new(name, kind, children))
    }

    fn required<T>(&mut self, s: &Stmt, key: &str, v: Option<T>) -> Option<T> {
        if v.is_none() && !s.children.iter().any(|c| c.keyword() == key) {
            self.err(s.line, s.col(), format!("`{}` requires `{key}`", s.keyword()));
        }
        v
    }

    // ---- cross references

    fn resolve(&mut self, spec: &ScenarioSpec) {
        let refs = std::mem::take(&mut self.refs);
        for r in &refs {
            let known = match r.kind {
                RefKind::Workload => self.workload_pos.contains_key(&r.name),
                RefKind::Topic => self.topic_pos.contains_key(&r.name),
                RefKind::Monitor => self.monitor_pos.contains_key(&r.name),
            };
            if !known {
                self.err(r.line, r.col, format!("unknown {} `{}`", r.kind.noun(), r.name));
            }
        }
        for d in std::mem::take(&mut self.deferred) {
            match d {
                Deferred::WindowCoversPeriod { monitor, line, col } => {
                    let m = &spec.frequency_monitors[monitor];
                    let topic = spec.workloads.iter().flat_map(|w| &w.topics).find(|t| t.id == m.topic);
                    if let Some(t) = topic {
                        if m.window < t.period() {
                            self.err(line, col, format!("monitor `{}`: window is shorter than one period of `{}`", m.id, t.id));
                        }
                    }
                }
                Deferred::TaskMatchesWorkload { task, line, col } => {
                    let t = &spec.tasks[task];
                    if let Some(w) = spec.workload(&t.workload) {
                        let ok = matches!(
                            (&t.goals, w.kind),
                            (TaskGoals::Navigate(_), WorkloadKind::Navigation) | (TaskGoals::MoveArm(_), WorkloadKind::Manipulation)
                        );
                        if !ok {
                            self.err(line, col, format!("task `{}` does not match {} workload `{}`", t.id, w.kind, w.name));
                        }
                    }
                }
                Deferred::SupervisionRoles { monitor, line, col } => {
                    let m = &spec.supervision_monitors[monitor];
                    let role = |id: &str| spec.workloads.iter().flat_map(|w| &w.topics).find(|t| t.id == id).map(|t| t.role);
                    if role(&m.commanded_topic).is_some_and(|r| r != TopicRole::Command) {
                        self.err(line, col, format!("monitor `{}`: `{}` is not a command topic", m.id, m.commanded_topic));
                    }
                    if role(&m.observed_pose_topic).is_some_and(|r| r != TopicRole::Pose) {
                        self.err(line, col, format!("monitor `{}`: `{}` is not a pose topic", m.id, m.observed_pose_topic));
                    }
                }
            }
        }
        for kind in [WorkloadKind::Navigation, WorkloadKind::Manipulation] {
            let of_kind: Vec<_> = spec.workloads.iter().filter(|w| w.kind == kind).collect();
            if of_kind.len() > 1 {
                let (l, c) = self.workload_pos[&of_kind[1].name];
                self.err(l, c, format!("at most one {kind} workload per scenario"));
            }
        }
        for w in &spec.workloads {
            if let Some(cycle) = dependency_cycle(spec, &w.name) {
                let (l, c) = self.workload_pos[&w.name];
                self.err(l, c, format!("circular dependency: {}", cycle.join(" -> ")));
            }
        }
        let mut groups: BTreeMap<&str, Vec<&WorkloadProfile>> = BTreeMap::new();
        for w in &spec.workloads {
            if let Some(g) = &w.fallback_group {
                groups.entry(g).or_default().push(w);
            }
        }
        for (g, ws) in groups {
            if ws.iter().any(|w| w.kind != ws[0].kind) {
                let (l, c) = self.workload_pos[&ws[1].name];
                self.err(l, c, format!("fallback group `{g}` mixes workload kinds"));
            }
            if let Some(&(l, c)) = self.workload_pos.get(g) {
                self.err(l, c, format!("fallback group `{g}` clashes with a workload name"));
            }
        }
    }
}

/// Returns the cycle through `start`, if any.
fn dependency_cycle(spec: &ScenarioSpec, start: &str) -> Option<Vec<String>> {
    fn dfs(spec: &ScenarioSpec, start: &str, cur: &str, path: &mut Vec<String>, seen: &mut HashSet<String>) -> bool {
        let Some(w) = spec.workload(cur) else { return false };
        for d in &w.depends_on {
            if d == start {
                path.push(d.clone());
                return true;
            }
            if seen.insert(d.clone()) {
                path.push(d.clone());
                if dfs(spec, start, d, path, seen) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    let mut path = vec![start.to_string()];
    dfs(spec, start, start, &mut path, &mut HashSet::new()).then_some(path)
}

fn digits(s: &str) -> Option<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}
