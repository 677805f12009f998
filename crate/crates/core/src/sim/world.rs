use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::steps::Run;
use super::RunOutcome;
use crate::bt::{BehaviorTree, BtNode, Leaves, TickContext, TickError, TickStatus};
use crate::fields;
use crate::kernel::{Cluster, ClusterTimer, EventQueue, EventTrace, PodPhase};
use crate::metrics::{CpuSample, MetricsBundle};
use crate::mitigation::{default_tree, RecoveryReport, RecoveryStrategy};
use crate::monitoring::{
    frequency_condition, supervision_condition, FailureClass, FailureEvent, FrequencyMonitor, SupervisionMonitor,
};
use crate::scenario::{InjectionKind, ScenarioSpec, TaskGoals};
use crate::time::Millis;
use crate::workload::control::{arm_command, nav_command};
use crate::workload::{
    step_plant, Checkpoint, CheckpointStore, LifecycleMode, PlantSnapshot, PlantState, TaskProxy, TopicRole,
    WorkloadKind,
};

/// Network-policy consumer standing for everything on the robot side.
pub const CONSUMER: &str = "robot";
pub const SUPERVISOR_CONTAINER: &str = "supervisor";
const PHYSICS_STEP: Millis = Millis(10);

// Order of events falling on the same millisecond.
const C_CLUSTER: u8 = 0;
const C_PHYSICS: u8 = 1;
const C_PUBLISH: u8 = 2;
const C_SENSOR: u8 = 3;
const C_SUPERVISOR: u8 = 4;
const C_CHECKPOINT: u8 = 5;
const C_INJECT: u8 = 6;
const C_CPU: u8 = 7;
const C_RETICK: u8 = 8;
const C_END: u8 = 9;

#[derive(Clone, Debug)]
pub(super) enum Ev {
    Cluster(ClusterTimer),
    ModeDone { inst: usize, gen: u64, mode: LifecycleMode },
    Physics,
    Publish { inst: usize, topic: usize },
    Sensor { monitor: usize },
    SupervisorTick,
    Checkpoint,
    Inject(usize),
    CpuSample,
    Retick,
    End,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum Role {
    Serving,
    Standby,
    /// Replacement created by a deployment, not yet adopted by a mitigation.
    Spare,
    Retired,
}

#[derive(Clone, Debug)]
pub(super) struct Binding {
    pub task: String,
    pub goal: usize,
}

#[derive(Clone, Debug)]
pub(super) struct Instance {
    pub pod: String,
    pub deployment: String,
    pub workload: String,
    /// CPU accounting name: the workload for the serving instance, the
    /// fallback container for a standby.
    pub container: String,
    pub role: Role,
    pub mode: LifecycleMode,
    /// Bumped on every timed mode change; stale timers carry an older value.
    pub gen: u64,
    pub binding: Option<Binding>,
    pub remapped: BTreeSet<String>,
    pub publishing: bool,
}

#[derive(Clone, Debug, Default)]
pub(super) struct WorkloadRt {
    pub serving: Option<usize>,
    pub spare: Option<usize>,
    pub mitigating: bool,
}

pub(super) struct Mitigation {
    pub failure: FailureEvent,
    pub strategy: RecoveryStrategy,
    pub tree: BehaviorTree,
    pub run: Run,
    /// Tree succeeded; waiting for the first delivered message.
    pub finished: bool,
}

struct Injected {
    t: Millis,
    workload: String,
    attributed: bool,
}

pub(super) struct World {
    pub spec: ScenarioSpec,
    pub rng: ChaCha8Rng,
    pub q: EventQueue<Ev>,
    pub trace: EventTrace,
    pub cluster: Cluster,
    pub plant: PlantState<f64>,
    pub instances: Vec<Instance>,
    pub wl: BTreeMap<String, WorkloadRt>,
    /// Standby per fallback container; `None` once claimed.
    pub standbys: BTreeMap<String, Option<usize>>,
    pub tasks: TaskProxy,
    pub checkpoints: CheckpointStore,
    freq: Vec<FrequencyMonitor>,
    freq_owner: Vec<String>,
    sup: Vec<SupervisionMonitor>,
    sup_owner: Vec<String>,
    verdicts: BTreeMap<String, TickStatus>,
    last_verdict: BTreeMap<String, TickStatus>,
    monitor_tree: Option<BehaviorTree>,
    pub mitigations: Vec<Mitigation>,
    injected: Vec<Injected>,
    retick_at: Option<Millis>,
    reports: Vec<RecoveryReport>,
    failures: Vec<FailureEvent>,
    cpu: Vec<CpuSample>,
    faults: Vec<String>,
    escalations: Vec<String>,
    flagged: bool,
    stopped: bool,
}

/// Runs `spec` to its end. All randomness comes from one generator seeded
/// with `seed`.
pub fn run(spec: &ScenarioSpec, seed: u64) -> RunOutcome {
    let mut w = World::new(spec.clone(), seed);
    w.bootstrap();
    while !w.stopped {
        let Some((now, ev)) = w.q.pop() else { break };
        w.handle(now, ev);
    }
    w.finish(seed)
}

impl World {
    fn new(spec: ScenarioSpec, seed: u64) -> Self {
        let joints = spec
            .tasks
            .iter()
            .find_map(|t| match &t.goals {
                TaskGoals::MoveArm(g) => g.first().map(Vec::len),
                TaskGoals::Navigate(_) => None,
            })
            .unwrap_or(0);
        let owner = |topic: &str| spec.topic_owner(topic).map(|w| w.name.clone()).unwrap_or_default();
        let freq_owner = spec.frequency_monitors.iter().map(|m| owner(&m.topic)).collect();
        let sup_owner = spec.supervision_monitors.iter().map(|m| owner(&m.commanded_topic)).collect();
        let freq = spec.frequency_monitors.iter().cloned().map(FrequencyMonitor::new).collect();
        let sup = spec.supervision_monitors.iter().cloned().map(SupervisionMonitor::new).collect();
        let monitor_root = spec.monitors.clone().or_else(|| {
            let leaves: Vec<BtNode> = spec
                .frequency_monitors
                .iter()
                .map(frequency_condition)
                .chain(spec.supervision_monitors.iter().map(supervision_condition))
                .collect();
            (!leaves.is_empty()).then(|| BtNode::sequence("all_monitors", leaves))
        });
        World {
            cluster: Cluster::new(spec.cluster.clone()),
            rng: ChaCha8Rng::seed_from_u64(seed),
            q: EventQueue::new(),
            trace: EventTrace::new(),
            plant: PlantState::new(joints),
            instances: Vec::new(),
            wl: spec.workloads.iter().map(|w| (w.name.clone(), WorkloadRt::default())).collect(),
            standbys: BTreeMap::new(),
            tasks: TaskProxy::new(),
            checkpoints: CheckpointStore::default(),
            freq,
            freq_owner,
            sup,
            sup_owner,
            verdicts: BTreeMap::new(),
            last_verdict: BTreeMap::new(),
            monitor_tree: monitor_root.and_then(|r| BehaviorTree::new(r).ok()),
            mitigations: Vec::new(),
            injected: Vec::new(),
            retick_at: None,
            reports: Vec::new(),
            failures: Vec::new(),
            cpu: Vec::new(),
            faults: Vec::new(),
            escalations: Vec::new(),
            flagged: false,
            stopped: false,
            spec,
        }
    }

    fn bootstrap(&mut self) {
        let t0 = Millis::ZERO;
        self.trace.push(t0, "scenario", fields!(name = self.spec.name, duration = self.spec.duration));
        for p in self.spec.workloads.clone() {
            let main = format!("{}-main", p.name);
            self.cluster.add_deployment(&main, &p.name, p.auto_restart);
            let inst = self.bootstrap_pod(&main, &p.name, &p.name, Role::Serving, LifecycleMode::Active);
            self.wl.get_mut(&p.name).expect("workload").serving = Some(inst);
            self.cluster.add_policy(CONSUMER, &p.name, &main);
            self.trace.push(t0, "policy", fields!(consumer = CONSUMER, service = p.name, provider = main));
            if let Some(mode) = p.strategy.standby_mode() {
                let key = p.fallback_container();
                if !self.standbys.contains_key(&key) {
                    self.cluster.add_deployment(&key, &p.name, false);
                    let sb = self.bootstrap_pod(&key, &p.name, &key, Role::Standby, mode);
                    self.standbys.insert(key, Some(sb));
                }
            }
        }
        for t in self.spec.tasks.clone() {
            let status = self.tasks.submit(&t.id, &t.workload, t.goals.clone()).expect("task ids are unique");
            self.trace.push(t0, "task", fields!(id = t.id, workload = t.workload, status = status));
            if status == crate::workload::TaskStatus::Active {
                if let Some(s) = self.wl[&t.workload].serving {
                    self.instances[s].binding = Some(Binding { task: t.id.clone(), goal: 0 });
                }
            }
        }
        for i in 0..self.instances.len() {
            self.start_publishing(i, t0);
        }
        self.q.push(PHYSICS_STEP, C_PHYSICS, Ev::Physics);
        for monitor in 0..self.sup.len() {
            self.q.push(t0, C_SENSOR, Ev::Sensor { monitor });
        }
        self.q.push(t0, C_SUPERVISOR, Ev::SupervisorTick);
        self.q.push(t0, C_CHECKPOINT, Ev::Checkpoint);
        for (k, inj) in self.spec.injections.iter().enumerate() {
            self.q.push(inj.at, C_INJECT, Ev::Inject(k));
        }
        self.q.push(t0, C_CPU, Ev::CpuSample);
        self.q.push(self.spec.duration, C_END, Ev::End);
    }

    fn bootstrap_pod(&mut self, deployment: &str, workload: &str, container: &str, role: Role, mode: LifecycleMode) -> usize {
        let (pod, _) = self
            .cluster
            .create_pod(Millis::ZERO, deployment, true, &mut self.rng, &mut self.trace)
            .expect("deployment just added");
        self.push_instance(Millis::ZERO, pod, deployment, workload, container, role, mode)
    }

    #[allow(clippy::too_many_arguments)]
    pub(super) fn push_instance(
        &mut self,
        now: Millis,
        pod: String,
        deployment: &str,
        workload: &str,
        container: &str,
        role: Role,
        mode: LifecycleMode,
    ) -> usize {
        self.trace.push(now, "mode", fields!(pod = pod, workload = workload, mode = mode));
        self.instances.push(Instance {
            pod,
            deployment: deployment.to_string(),
            workload: workload.to_string(),
            container: container.to_string(),
            role,
            mode,
            gen: 0,
            binding: None,
            remapped: BTreeSet::new(),
            publishing: false,
        });
        self.instances.len() - 1
    }

    fn handle(&mut self, now: Millis, ev: Ev) {
        match ev {
            Ev::Cluster(timer) => {
                if self.cluster.apply(now, &timer, &mut self.trace) {
                    if let ClusterTimer::PodRunning { pod } = &timer {
                        if let Some(i) = self.instances.iter().position(|i| &i.pod == pod) {
                            if self.instances[i].mode == LifecycleMode::Pending {
                                self.set_mode(i, now, LifecycleMode::PodStarted);
                            }
                        }
                    }
                    self.request_retick(now);
                }
            }
            Ev::ModeDone { inst, gen, mode } => {
                if self.instances[inst].gen == gen && self.instances[inst].role != Role::Retired {
                    self.set_mode(inst, now, mode);
                    self.request_retick(now);
                }
            }
            Ev::Physics => {
                let dt = now - self.plant.t;
                if dt > Millis::ZERO {
                    self.plant = step_plant(&self.plant, dt);
                }
                self.q.push(now + PHYSICS_STEP, C_PHYSICS, Ev::Physics);
            }
            Ev::Publish { inst, topic } => self.on_publish(now, inst, topic),
            Ev::Sensor { monitor } => self.on_sensor(now, monitor),
            Ev::SupervisorTick => {
                self.on_supervisor_tick(now);
                self.q.push(now + self.spec.supervisor.tick_period, C_SUPERVISOR, Ev::SupervisorTick);
            }
            Ev::Checkpoint => {
                self.on_checkpoint(now);
                self.q.push(now + self.spec.supervisor.checkpoint_period, C_CHECKPOINT, Ev::Checkpoint);
            }
            Ev::Inject(k) => self.on_inject(now, k),
            Ev::CpuSample => {
                self.on_cpu_sample(now);
                self.q.push(now + self.spec.cluster.cpu_sample_period, C_CPU, Ev::CpuSample);
            }
            Ev::Retick => {
                self.retick_at = None;
                self.tick_mitigations(now);
            }
            Ev::End => {
                self.trace.push(now, "end", fields!());
                self.stopped = true;
            }
        }
    }

    pub(super) fn request_retick(&mut self, now: Millis) {
        if self.retick_at != Some(now) && !self.mitigations.is_empty() {
            self.retick_at = Some(now);
            self.q.push(now, C_RETICK, Ev::Retick);
        }
    }

    pub(super) fn schedule_cluster(&mut self, timer: Option<(Millis, ClusterTimer)>) {
        if let Some((at, t)) = timer {
            self.q.push(at, C_CLUSTER, Ev::Cluster(t));
        }
    }

    pub(super) fn set_mode(&mut self, inst: usize, now: Millis, mode: LifecycleMode) {
        let i = &mut self.instances[inst];
        i.mode = mode;
        i.gen += 1;
        self.trace.push(now, "mode", fields!(pod = i.pod, workload = i.workload, mode = mode));
    }

    /// Enters `during` for `dur`, then `then`; immediately `then` when `dur` is zero.
    pub(super) fn set_phase(&mut self, inst: usize, now: Millis, during: LifecycleMode, dur: Millis, then: LifecycleMode) {
        if dur == Millis::ZERO {
            self.set_mode(inst, now, then);
            return;
        }
        self.set_mode(inst, now, during);
        let gen = self.instances[inst].gen;
        self.q.push(now + dur, C_CLUSTER, Ev::ModeDone { inst, gen, mode: then });
    }

    pub(super) fn start_publishing(&mut self, inst: usize, now: Millis) {
        let i = &self.instances[inst];
        if i.publishing || !matches!(i.mode, LifecycleMode::Active | LifecycleMode::ShadowExecution) {
            return;
        }
        let n = self.spec.workload(&i.workload).map_or(0, |p| p.topics.len());
        self.instances[inst].publishing = true;
        for topic in 0..n {
            self.q.push(now, C_PUBLISH, Ev::Publish { inst, topic });
        }
    }

    pub(super) fn pod_running(&self, inst: usize) -> bool {
        self.cluster.pod(&self.instances[inst].pod).is_some_and(|p| p.phase == PodPhase::Running)
    }

    /// The instance is Active and its messages reach consumers.
    pub(super) fn delivering(&self, inst: usize) -> bool {
        let i = &self.instances[inst];
        i.mode == LifecycleMode::Active
            && i.role == Role::Serving
            && self.cluster.provider(CONSUMER, &i.workload) == Some(i.deployment.as_str())
    }

    fn deps_active(&self, workload: &str) -> bool {
        let Some(p) = self.spec.workload(workload) else { return false };
        p.depends_on.iter().all(|d| self.wl[d].serving.is_some_and(|s| self.delivering(s)))
    }

    fn on_publish(&mut self, now: Millis, inst: usize, topic_idx: usize) {
        let i = &self.instances[inst];
        if i.role == Role::Retired || !matches!(i.mode, LifecycleMode::Active | LifecycleMode::ShadowExecution) {
            self.instances[inst].publishing = false;
            return;
        }
        let profile = self.spec.workload(&i.workload).expect("instance of a declared workload");
        let topic = profile.topics[topic_idx].clone();
        let (max_speed, max_turn, max_joint) = (profile.max_speed, profile.max_turn_rate, profile.max_joint_speed);
        self.q.push(now + topic.period(), C_PUBLISH, Ev::Publish { inst, topic: topic_idx });
        let active = i.mode == LifecycleMode::Active;
        let delivered = self.delivering(inst);
        let applied = delivered && !i.remapped.contains(&topic.id);
        let pod = i.pod.clone();
        let mut speed = None;
        match topic.role {
            TopicRole::Command => {
                if !active {
                    return;
                }
                let Some((v, omega)) = self.nav_step(now, inst, max_speed, max_turn) else { return };
                if applied {
                    self.plant.command_base(v, omega, now);
                }
                speed = Some(v);
                self.trace.push(
                    now,
                    "msg",
                    fields!(topic = topic.id, pod = pod, delivered = delivered, v = format!("{v:.3}"), w = format!("{omega:.3}")),
                );
            }
            TopicRole::JointStates => {
                if active {
                    let period = topic.period().as_secs_f64();
                    if let Some(cmd) = self.arm_step(now, inst, period, max_joint) {
                        if applied {
                            self.plant.command_joints(&cmd, now);
                        }
                    }
                }
                self.trace.push(now, "msg", fields!(topic = topic.id, pod = pod, delivered = delivered));
            }
            TopicRole::Pose | TopicRole::Status => {
                self.trace.push(now, "msg", fields!(topic = topic.id, pod = pod, delivered = delivered));
            }
        }
        if delivered {
            self.on_delivered(now, inst, &topic.id, speed);
        }
    }

    /// Navigation controller cycle. Returns the command to publish, or `None`
    /// when there is nothing to drive.
    fn nav_step(&mut self, now: Millis, inst: usize, max_speed: f64, max_turn: f64) -> Option<(f64, f64)> {
        let b = self.instances[inst].binding.clone()?;
        let workload = self.instances[inst].workload.clone();
        if !self.deps_active(&workload) {
            return None;
        }
        let goals = match &self.tasks.get(&b.task).ok()?.goals {
            TaskGoals::Navigate(g) => g.clone(),
            TaskGoals::MoveArm(_) => return None,
        };
        let pose = (self.plant.x, self.plant.y, self.plant.theta);
        let mut goal = b.goal;
        loop {
            if goal >= goals.len() {
                self.complete_task(now, inst, &b.task);
                return Some((0.0, 0.0));
            }
            match nav_command(pose, goals[goal], max_speed, max_turn) {
                Some(c) => {
                    self.instances[inst].binding = Some(Binding { task: b.task, goal });
                    return Some((c.v, c.omega));
                }
                None => {
                    self.trace.push(now, "goal_reached", fields!(task = b.task, index = goal));
                    goal += 1;
                }
            }
        }
    }

    fn arm_step(&mut self, now: Millis, inst: usize, period_s: f64, limit: f64) -> Option<Vec<f64>> {
        let b = self.instances[inst].binding.clone()?;
        let workload = self.instances[inst].workload.clone();
        if !self.deps_active(&workload) {
            return None;
        }
        let targets = match &self.tasks.get(&b.task).ok()?.goals {
            TaskGoals::MoveArm(g) => g.clone(),
            TaskGoals::Navigate(_) => return None,
        };
        let mut goal = b.goal;
        loop {
            if goal >= targets.len() {
                self.complete_task(now, inst, &b.task);
                return Some(vec![0.0; self.plant.joint_pos.len()]);
            }
            match arm_command(&self.plant.joint_pos, &targets[goal], period_s, limit) {
                Some(c) => {
                    self.instances[inst].binding = Some(Binding { task: b.task, goal });
                    return Some(c);
                }
                None => {
                    self.trace.push(now, "goal_reached", fields!(task = b.task, index = goal));
                    goal += 1;
                }
            }
        }
    }

    fn complete_task(&mut self, now: Millis, inst: usize, task: &str) {
        self.instances[inst].binding = None;
        let next = self.tasks.complete(task).expect("bound task exists");
        self.trace.push(now, "task", fields!(id = task, status = "done"));
        if let Some(next) = next {
            self.trace.push(now, "task", fields!(id = next, status = "active"));
            self.instances[inst].binding = Some(Binding { task: next, goal: 0 });
        }
    }

    fn on_delivered(&mut self, now: Millis, inst: usize, topic: &str, speed: Option<f64>) {
        for m in self.freq.iter_mut().filter(|m| m.spec.topic == topic) {
            m.observe(now);
        }
        if let Some(v) = speed {
            for m in self.sup.iter_mut().filter(|m| m.spec.commanded_topic == topic) {
                m.observe_command(now, v);
            }
        }
        let workload = self.instances[inst].workload.clone();
        if self.wl[&workload].serving != Some(inst) {
            return;
        }
        if let Some(k) = self.mitigations.iter().position(|m| m.finished && m.run.workload == workload) {
            self.complete_recovery(now, k);
        }
    }

    fn complete_recovery(&mut self, now: Millis, k: usize) {
        let mut m = self.mitigations.remove(k);
        m.run.milestones.active = Some(now);
        let w = m.run.workload.clone();
        let report = RecoveryReport::measure(m.failure.clone(), m.strategy, &m.run.milestones, m.run.steps.clone())
            .expect("active milestone set");
        self.trace.push(
            now,
            "recovered",
            fields!(
                workload = w,
                strategy = report.strategy,
                t_detection = report.t_detection,
                t_cluster = report.t_cluster,
                t_startup = report.t_startup,
                t_reinit = report.t_reinit,
                t_recovery = report.t_recovery
            ),
        );
        self.reports.push(report);
        self.end_mitigating(now, &w);
    }

    /// Monitors of `workload` resume; frequency monitors first collect one window.
    pub(super) fn end_mitigating(&mut self, now: Millis, workload: &str) {
        self.wl.get_mut(workload).expect("workload").mitigating = false;
        for (m, owner) in self.freq.iter_mut().zip(&self.freq_owner) {
            if owner == workload {
                m.rearm(now);
            }
        }
        for (m, owner) in self.sup.iter_mut().zip(&self.sup_owner) {
            if owner == workload {
                m.reset();
            }
        }
    }

    fn on_sensor(&mut self, now: Millis, k: usize) {
        let spec = &self.sup[k].spec;
        let period = Millis::period_of_hz(spec.sensor_rate);
        // radial RMS error sigma splits evenly over both axes
        let axis = spec.sensor_noise_sigma / std::f64::consts::SQRT_2;
        let noise = Normal::new(0.0, axis).expect("finite, non-negative sigma");
        let x = self.plant.x + noise.sample(&mut self.rng);
        let y = self.plant.y + noise.sample(&mut self.rng);
        self.sup[k].observe_pose(now, x, y);
        self.q.push(now + period, C_SENSOR, Ev::Sensor { monitor: k });
    }

    fn evaluate_monitors(&mut self, now: Millis) {
        for (m, owner) in self.freq.iter_mut().zip(&self.freq_owner) {
            let v = m.evaluate(now);
            let v = if self.wl.get(owner).is_some_and(|w| w.mitigating) { TickStatus::Success } else { v };
            self.verdicts.insert(m.spec.id.clone(), v);
        }
        for (m, owner) in self.sup.iter_mut().zip(&self.sup_owner) {
            let v = if self.wl.get(owner).is_some_and(|w| w.mitigating) {
                m.reset();
                TickStatus::Success
            } else {
                m.evaluate(now).0
            };
            self.verdicts.insert(m.spec.id.clone(), v);
        }
    }

    pub(super) fn predicate(&self, predicate: &str) -> Result<TickStatus, TickError> {
        let unknown = || TickError::UnknownPredicate(predicate.to_string());
        let (func, arg) = predicate.strip_suffix(')').and_then(|p| p.split_once('(')).ok_or_else(unknown)?;
        match func {
            "monitor" => self.verdicts.get(arg).copied().ok_or_else(unknown),
            "task_requested" => Ok(TickStatus::from_bool(self.tasks.requested(arg))),
            "workload_active" => {
                let rt = self.wl.get(arg).ok_or_else(unknown)?;
                Ok(TickStatus::from_bool(rt.serving.is_some_and(|s| self.delivering(s))))
            }
            _ => Err(unknown()),
        }
    }

    fn on_supervisor_tick(&mut self, now: Millis) {
        self.evaluate_monitors(now);
        if let Some(mut tree) = self.monitor_tree.take() {
            let mut leaves = MonitorLeaves { world: self, ticked: Vec::new() };
            let res = tree.tick(&TickContext::at(now), &mut leaves);
            let ticked = leaves.ticked;
            self.monitor_tree = Some(tree);
            match res {
                Err(e) => return self.fault(now, format!("monitor tree: {e}")),
                Ok(root) => {
                    for (node, monitor, status) in &ticked {
                        let prev = self.last_verdict.insert(node.clone(), *status).unwrap_or(TickStatus::Success);
                        if prev != *status {
                            self.trace.push(now, "verdict", fields!(node = node, monitor = monitor, status = status));
                        }
                    }
                    if root == TickStatus::Failure {
                        self.detect(now, &ticked);
                    }
                }
            }
        }
        self.tick_mitigations(now);
    }

    fn detect(&mut self, now: Millis, ticked: &[(String, String, TickStatus)]) {
        let mut blamed: BTreeMap<String, FailureClass> = BTreeMap::new();
        for (_, monitor, status) in ticked {
            if *status != TickStatus::Failure {
                continue;
            }
            let hit = if let Some(k) = self.freq.iter().position(|m| &m.spec.id == monitor) {
                (self.freq_owner[k].clone(), FailureClass::TopicSilence)
            } else if let Some(k) = self.sup.iter().position(|m| &m.spec.id == monitor) {
                (self.sup_owner[k].clone(), FailureClass::BehaviorDiscrepancy)
            } else {
                continue;
            };
            let e = blamed.entry(hit.0).or_insert(hit.1);
            *e = (*e).min(hit.1);
        }
        for (workload, class) in blamed {
            if self.wl[&workload].mitigating {
                continue;
            }
            let cause = self.injected.iter_mut().filter(|i| i.workload == workload && !i.attributed && i.t <= now);
            let mut t_actual = None;
            for i in cause {
                i.attributed = true;
                t_actual = Some(i.t);
            }
            let failure = FailureEvent {
                workload: workload.clone(),
                class,
                t_failure_actual: t_actual.unwrap_or(now),
                t_detected: now,
                spurious: t_actual.is_none(),
            };
            self.trace.push(
                now,
                "failure_detected",
                fields!(workload = workload, class = class, t_failure = failure.t_failure_actual, spurious = failure.spurious),
            );
            self.failures.push(failure.clone());
            self.start_mitigation(now, failure);
        }
    }

    fn start_mitigation(&mut self, now: Millis, failure: FailureEvent) {
        let w = failure.workload.clone();
        let strategy = self.spec.workload(&w).expect("blamed workload exists").strategy;
        let root = self.spec.mitigation_tree(failure.class, &w).cloned().unwrap_or_else(|| default_tree(strategy));
        let root_name = root.name.clone();
        let tree = match BehaviorTree::new(root) {
            Ok(t) => t,
            Err(e) => return self.fault(now, format!("invalid mitigation tree '{root_name}': {e:?}")),
        };
        self.wl.get_mut(&w).expect("workload").mitigating = true;
        self.trace.push(now, "mitigation_start", fields!(workload = w, class = failure.class, strategy = strategy, tree = root_name));
        self.interrupt(now, &w);
        if let Some(s) = self.wl[&w].serving {
            self.instances[s].binding = None;
        }
        let run = Run::new(&w, failure.class, Vec::new());
        self.mitigations.push(Mitigation { failure, strategy, tree, run, finished: false });
    }

    pub(super) fn interrupt(&mut self, now: Millis, workload: &str) {
        if let Some(id) = self.tasks.interrupt(workload) {
            self.trace.push(now, "task", fields!(id = id, status = "interrupted"));
        }
    }

    fn tick_mitigations(&mut self, now: Millis) {
        let mut ms = std::mem::take(&mut self.mitigations);
        let mut k = 0;
        while k < ms.len() {
            if ms[k].finished {
                k += 1;
                continue;
            }
            let m = &mut ms[k];
            let res = m.tree.tick(&TickContext::at(now), &mut super::steps::StepLeaves { world: self, run: &mut m.run });
            match res {
                Err(e) => {
                    self.mitigations = ms;
                    return self.fault(now, format!("mitigation of {}: {e}", self.mitigations[k].run.workload));
                }
                Ok(TickStatus::Running) => k += 1,
                Ok(TickStatus::Success) => {
                    m.finished = true;
                    self.trace.push(now, "mitigation_done", fields!(workload = m.run.workload));
                    k += 1;
                }
                Ok(TickStatus::Failure) => {
                    let m = ms.remove(k);
                    self.trace.push(now, "escalation", fields!(workload = m.run.workload, class = m.failure.class));
                    self.escalations.push(format!("mitigation of {} ({}) failed", m.run.workload, m.failure.class));
                }
            }
        }
        self.mitigations = ms;
    }

    fn on_checkpoint(&mut self, now: Millis) {
        for (name, rt) in &self.wl {
            let Some(s) = rt.serving else { continue };
            let i = &self.instances[s];
            if rt.mitigating || i.mode != LifecycleMode::Active || !self.pod_running(s) {
                continue;
            }
            let Some(b) = &i.binding else { continue };
            let kind = self.spec.workload(name).map(|p| p.kind);
            let snapshot = match kind {
                Some(WorkloadKind::Navigation) => PlantSnapshot::Base { x: self.plant.x, y: self.plant.y, theta: self.plant.theta },
                Some(WorkloadKind::Manipulation) => PlantSnapshot::Joints(self.plant.joint_pos.clone()),
                _ => PlantSnapshot::None,
            };
            self.checkpoints.store(Checkpoint { workload: name.clone(), t: now, task_id: b.task.clone(), goal_index: b.goal, snapshot });
        }
    }

    fn on_inject(&mut self, now: Millis, k: usize) {
        let inj = self.spec.injections[k].clone();
        let (workload, what, arg) = match &inj.kind {
            InjectionKind::DeletePod(w) => (w.clone(), "delete_pod", w.clone()),
            InjectionKind::SilentRemap(topic) => {
                let owner = self.spec.topic_owner(topic).map(|w| w.name.clone()).unwrap_or_default();
                (owner, "silent_remap", topic.clone())
            }
        };
        self.trace.push(now, "inject", fields!(kind = what, target = arg, workload = workload));
        if self.wl[&workload].mitigating {
            self.trace.push(now, "failure_queued", fields!(workload = workload));
            self.flagged = true;
        }
        self.injected.push(Injected { t: now, workload: workload.clone(), attributed: false });
        let Some(s) = self.wl[&workload].serving else { return };
        match inj.kind {
            InjectionKind::DeletePod(_) => {
                if self.instances[s].role == Role::Retired {
                    self.trace.push(now, "warning", fields!(what = "no_pod_to_delete", workload = workload));
                    return;
                }
                match self.kill(now, s) {
                    Ok(spare) => self.wl.get_mut(&workload).expect("workload").spare = spare,
                    Err(e) => return self.fault(now, e),
                }
                self.interrupt(now, &workload);
            }
            InjectionKind::SilentRemap(topic) => {
                self.instances[s].remapped.insert(topic);
            }
        }
    }

    /// Deletes the instance's pod. Returns the instance of the replacement
    /// pod if its deployment re-creates pods.
    pub(super) fn kill(&mut self, now: Millis, inst: usize) -> Result<Option<usize>, String> {
        let pod = self.instances[inst].pod.clone();
        let replacement =
            self.cluster.delete_pod(now, &pod, &mut self.rng, &mut self.trace).map_err(|e| e.to_string())?;
        {
            let i = &mut self.instances[inst];
            i.role = Role::Retired;
            i.binding = None;
            i.publishing = false;
        }
        self.set_mode(inst, now, LifecycleMode::Terminated);
        let Some((new_pod, timer)) = replacement else { return Ok(None) };
        self.schedule_cluster(timer);
        let (deployment, workload) = (self.instances[inst].deployment.clone(), self.instances[inst].workload.clone());
        let spare = self.push_instance(now, new_pod, &deployment, &workload, &workload, Role::Spare, LifecycleMode::Pending);
        Ok(Some(spare))
    }

    fn on_cpu_sample(&mut self, now: Millis) {
        let mut usage: BTreeMap<String, u32> = BTreeMap::new();
        for (k, i) in self.instances.iter().enumerate() {
            if i.role == Role::Retired || !self.pod_running(k) {
                continue;
            }
            let cpu = self.spec.workload(&i.workload).map_or(0, |p| p.cpu.usage(i.mode));
            *usage.entry(i.container.clone()).or_default() += cpu;
        }
        *usage.entry(SUPERVISOR_CONTAINER.to_string()).or_default() += self.spec.supervisor.cpu;
        for (container, usage) in usage {
            self.cpu.push(CpuSample { container, t: now, usage });
        }
    }

    pub(super) fn fault(&mut self, now: Millis, msg: String) {
        self.trace.push(now, "fault", fields!(message = msg.replace(['\t', '\n'], " ")));
        self.faults.push(msg);
        self.stopped = true;
    }

    fn finish(mut self, seed: u64) -> RunOutcome {
        let now = self.q.now();
        for m in &self.mitigations {
            self.trace.push(now, "mitigation_incomplete", fields!(workload = m.run.workload, finished = m.finished));
        }
        for t in self.tasks.tasks() {
            self.trace.push(now, "task_final", fields!(id = t.id, status = t.status));
        }
        RunOutcome {
            metrics: MetricsBundle { run_id: format!("{}-seed{}", self.spec.name, seed), reports: self.reports, cpu: self.cpu },
            trace: self.trace,
            failures: self.failures,
            faults: self.faults,
            escalations: self.escalations,
            flagged: self.flagged,
            tasks: self.tasks.tasks().to_vec(),
        }
    }
}

struct MonitorLeaves<'a> {
    world: &'a mut World,
    /// (node, monitor id, status) of every `monitor(..)` condition ticked.
    ticked: Vec<(String, String, TickStatus)>,
}

impl Leaves for MonitorLeaves<'_> {
    fn condition(&mut self, node: &str, predicate: &str, _ctx: &TickContext) -> Result<TickStatus, TickError> {
        let status = self.world.predicate(predicate)?;
        if let Some(id) = predicate.strip_prefix("monitor(").and_then(|p| p.strip_suffix(')')) {
            self.ticked.push((node.to_string(), id.to_string(), status));
        }
        Ok(status)
    }

    fn action(&mut self, _node: &str, action: &str, _ctx: &TickContext) -> Result<TickStatus, TickError> {
        Err(TickError::UnknownAction(action.to_string()))
    }
}
