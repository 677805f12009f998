//! The mitigation step library, acting on the simulated world.

use std::collections::BTreeMap;

use super::world::{Binding, Role, World, CONSUMER};
use crate::bt::{BehaviorTree, Leaves, TickContext, TickError, TickStatus};
use crate::fields;
use crate::mitigation::{default_tree, Milestones, Step};
use crate::monitoring::FailureClass;
use crate::time::Millis;
use crate::workload::LifecycleMode;

/// Progress of one mitigation tree for one workload.
pub(super) struct Run {
    pub workload: String,
    pub class: FailureClass,
    /// Workloads whose recovery is waiting on this one.
    pub chain: Vec<String>,
    /// Instance being brought up.
    pub target: Option<usize>,
    pub steps: Vec<String>,
    pub state: BTreeMap<String, StepState>,
    pub milestones: Milestones,
}

impl Run {
    pub fn new(workload: &str, class: FailureClass, chain: Vec<String>) -> Self {
        Run {
            workload: workload.to_string(),
            class,
            chain,
            target: None,
            steps: Vec::new(),
            state: BTreeMap::new(),
            milestones: Milestones::default(),
        }
    }
}

pub(super) enum StepState {
    Started,
    Restart { inst: usize },
    Connect { inst: usize },
    Nested(Box<(BehaviorTree, Run)>),
    Done,
}

pub(super) struct StepLeaves<'a> {
    pub world: &'a mut World,
    pub run: &'a mut Run,
}

impl Leaves for StepLeaves<'_> {
    fn condition(&mut self, _node: &str, predicate: &str, _ctx: &TickContext) -> Result<TickStatus, TickError> {
        self.world.predicate(predicate)
    }

    fn action(&mut self, node: &str, action: &str, ctx: &TickContext) -> Result<TickStatus, TickError> {
        let step = Step::parse(action).ok_or_else(|| TickError::UnknownAction(action.to_string()))?;
        self.world.step(self.run, node, &step, ctx.sim_time)
    }

    fn reset_action(&mut self, node: &str) {
        if let Some(StepState::Nested(n)) = self.run.state.remove(node) {
            self.world.wl.get_mut(&n.1.workload).expect("workload").mitigating = false;
        }
    }
}

fn fault(msg: impl Into<String>) -> TickError {
    TickError::Fault(msg.into())
}

impl World {
    pub(super) fn step(&mut self, run: &mut Run, node: &str, step: &Step, now: Millis) -> Result<TickStatus, TickError> {
        if matches!(run.state.get(node), Some(StepState::Done)) {
            return Ok(TickStatus::Success);
        }
        if !run.state.contains_key(node) {
            run.state.insert(node.to_string(), StepState::Started);
            run.steps.push(step.to_string());
            self.trace.push(now, "mitigation_step", fields!(workload = run.workload, node = node, action = step, phase = "start"));
        }
        let status = match step {
            Step::RestartScratch => self.restart_scratch(run, node, now)?,
            Step::ConnectFallback => self.connect_fallback(run, node, now)?,
            Step::StartApp => self.start_app(run, now),
            Step::Initialize => self.initialize(run, now),
            Step::Handover => self.handover(run, now)?,
            Step::Promote => self.promote(run, now),
            Step::RecoverDependency(d) => self.recover_dependency(run, node, d, now)?,
        };
        match status {
            TickStatus::Running => {}
            TickStatus::Success => {
                run.state.insert(node.to_string(), StepState::Done);
                self.trace.push(now, "mitigation_step", fields!(workload = run.workload, node = node, action = step, phase = "success"));
            }
            TickStatus::Failure => {
                run.state.remove(node);
                self.trace.push(now, "mitigation_step", fields!(workload = run.workload, node = node, action = step, phase = "failure"));
            }
        }
        Ok(status)
    }

    fn mitigation_fault(&mut self, now: Millis, run: &Run, reason: &str) -> TickStatus {
        self.trace.push(now, "mitigation_fault", fields!(workload = run.workload, reason = reason));
        TickStatus::Failure
    }

    fn target(&self, run: &Run) -> Option<usize> {
        run.target.or(self.wl[&run.workload].serving)
    }

    fn patch(&mut self, now: Millis, workload: &str, provider: &str) -> Result<(), TickError> {
        let timer = self
            .cluster
            .patch_policy(now, CONSUMER, workload, provider, &mut self.rng, &mut self.trace)
            .map_err(|e| fault(e.to_string()))?;
        self.schedule_cluster(timer);
        Ok(())
    }

    /// Reachable once the instance's pod runs and the policy routes to it.
    fn reachable(&self, inst: usize) -> bool {
        let i = &self.instances[inst];
        self.pod_running(inst) && self.cluster.provider(CONSUMER, &i.workload) == Some(i.deployment.as_str())
    }

    fn cluster_progress(&mut self, run: &mut Run, inst: usize, now: Millis) -> TickStatus {
        if self.instances[inst].role == Role::Retired {
            return self.mitigation_fault(now, run, "new instance lost");
        }
        if !self.reachable(inst) {
            return TickStatus::Running;
        }
        run.milestones.cluster_ready.get_or_insert(now);
        TickStatus::Success
    }

    fn restart_scratch(&mut self, run: &mut Run, node: &str, now: Millis) -> Result<TickStatus, TickError> {
        if let Some(StepState::Restart { inst }) = run.state.get(node) {
            let inst = *inst;
            return Ok(self.cluster_progress(run, inst, now));
        }
        let w = run.workload.clone();
        let main = format!("{w}-main");
        let mut adopt = self.wl.get_mut(&w).expect("workload").spare.take();
        if let Some(s) = self.wl[&w].serving {
            if self.instances[s].role != Role::Retired {
                let spare = self.kill(now, s).map_err(fault)?;
                adopt = adopt.or(spare);
            }
        }
        let inst = match adopt {
            Some(i) => i,
            None => {
                let (pod, timer) = self
                    .cluster
                    .create_pod(now, &main, false, &mut self.rng, &mut self.trace)
                    .map_err(|e| fault(e.to_string()))?;
                self.schedule_cluster(timer);
                self.push_instance(now, pod, &main, &w, &w, Role::Serving, LifecycleMode::Pending)
            }
        };
        self.instances[inst].role = Role::Serving;
        self.wl.get_mut(&w).expect("workload").serving = Some(inst);
        run.target = Some(inst);
        if self.cluster.provider(CONSUMER, &w) != Some(main.as_str()) {
            self.patch(now, &w, &main)?;
        }
        run.state.insert(node.to_string(), StepState::Restart { inst });
        Ok(self.cluster_progress(run, inst, now))
    }

    fn connect_fallback(&mut self, run: &mut Run, node: &str, now: Millis) -> Result<TickStatus, TickError> {
        if let Some(StepState::Connect { inst }) = run.state.get(node) {
            let inst = *inst;
            return Ok(self.cluster_progress(run, inst, now));
        }
        let w = run.workload.clone();
        let key = self.spec.workload(&w).expect("workload").fallback_container();
        let standby = self
            .standbys
            .get(&key)
            .copied()
            .flatten()
            .filter(|&i| self.instances[i].role == Role::Standby && self.pod_running(i));
        let Some(sb) = standby else {
            return Ok(self.mitigation_fault(now, run, "no standby instance"));
        };
        self.standbys.insert(key, None);
        if let Some(s) = self.wl[&w].serving {
            if s != sb && self.instances[s].role != Role::Retired {
                if let Some(spare) = self.kill(now, s).map_err(fault)? {
                    self.instances[spare].container = format!("{w}-replica");
                    self.wl.get_mut(&w).expect("workload").spare = Some(spare);
                }
            }
        }
        {
            let i = &mut self.instances[sb];
            i.role = Role::Serving;
            i.workload = w.clone();
            i.container = w.clone();
        }
        let deployment = self.instances[sb].deployment.clone();
        self.patch(now, &w, &deployment)?;
        self.wl.get_mut(&w).expect("workload").serving = Some(sb);
        run.target = Some(sb);
        run.state.insert(node.to_string(), StepState::Connect { inst: sb });
        Ok(self.cluster_progress(run, sb, now))
    }

    fn start_app(&mut self, run: &mut Run, now: Millis) -> TickStatus {
        let Some(t) = self.target(run) else { return self.mitigation_fault(now, run, "no instance") };
        if self.instances[t].mode == LifecycleMode::PodStarted {
            let startup = self.spec.workload(&run.workload).expect("workload").startup_time;
            self.set_phase(t, now, LifecycleMode::Booting, startup, LifecycleMode::Booted);
        }
        match self.instances[t].mode {
            LifecycleMode::Pending | LifecycleMode::Booting => TickStatus::Running,
            m if m.app_started() => {
                run.milestones.app_started.get_or_insert(now);
                TickStatus::Success
            }
            _ => self.mitigation_fault(now, run, "instance terminated"),
        }
    }

    fn initialize(&mut self, run: &mut Run, now: Millis) -> TickStatus {
        let Some(t) = self.target(run) else { return self.mitigation_fault(now, run, "no instance") };
        let profile = self.spec.workload(&run.workload).expect("workload");
        let (init, state_init) = (profile.init_time, profile.state_init_time);
        match self.instances[t].mode {
            LifecycleMode::Booted => self.set_phase(t, now, LifecycleMode::Initializing, init, LifecycleMode::Ready),
            LifecycleMode::AppInitialized => {
                self.set_phase(t, now, LifecycleMode::Initializing, state_init, LifecycleMode::Ready)
            }
            _ => {}
        }
        match self.instances[t].mode {
            LifecycleMode::Initializing => TickStatus::Running,
            LifecycleMode::Ready | LifecycleMode::ShadowExecution | LifecycleMode::Active => TickStatus::Success,
            LifecycleMode::Terminated => self.mitigation_fault(now, run, "instance terminated"),
            _ => self.mitigation_fault(now, run, "application not started"),
        }
    }

    fn handover(&mut self, run: &mut Run, now: Millis) -> Result<TickStatus, TickError> {
        let Some(t) = self.target(run) else { return Ok(self.mitigation_fault(now, run, "no instance")) };
        if !self.instances[t].mode.initialized() {
            return Ok(self.mitigation_fault(now, run, "instance not initialized"));
        }
        let Some(task) = self.tasks.current(&run.workload).map(|t| t.id.clone()) else {
            self.trace.push(now, "handover", fields!(workload = run.workload, task = "-"));
            return Ok(TickStatus::Success);
        };
        let (goal, cp_t) = match self.checkpoints.latest(&run.workload) {
            Some(cp) if cp.task_id != task => {
                return Err(fault(format!("checkpoint of {} is for task '{}', not '{task}'", run.workload, cp.task_id)));
            }
            Some(cp) => (cp.goal_index, cp.t.to_string()),
            None => {
                self.trace.push(now, "warning", fields!(what = "no_checkpoint", workload = run.workload));
                (0, "-".to_string())
            }
        };
        self.instances[t].binding = Some(Binding { task: task.clone(), goal });
        self.trace.push(now, "handover", fields!(workload = run.workload, task = task, goal_index = goal, checkpoint_t = cp_t));
        Ok(TickStatus::Success)
    }

    fn promote(&mut self, run: &mut Run, now: Millis) -> TickStatus {
        let Some(t) = self.target(run) else { return self.mitigation_fault(now, run, "no instance") };
        match self.instances[t].mode {
            LifecycleMode::Active => {
                self.trace.push(now, "warning", fields!(what = "promote_active", workload = run.workload));
                return TickStatus::Success;
            }
            LifecycleMode::Ready | LifecycleMode::ShadowExecution | LifecycleMode::AppInitialized => {}
            _ => return self.mitigation_fault(now, run, "instance not initialized"),
        }
        let w = run.workload.clone();
        let stale: Vec<usize> = (0..self.instances.len())
            .filter(|&j| j != t && self.instances[j].workload == w && self.instances[j].mode == LifecycleMode::Active)
            .collect();
        for j in stale {
            if let Err(e) = self.kill(now, j) {
                return self.mitigation_fault(now, run, &e);
            }
        }
        self.set_mode(t, now, LifecycleMode::Active);
        if let Some(id) = self.tasks.reattach(&w) {
            self.trace.push(now, "task", fields!(id = id, status = "active"));
            if self.instances[t].binding.is_none() {
                self.trace.push(now, "warning", fields!(what = "task_restarted", workload = w));
                self.instances[t].binding = Some(Binding { task: id, goal: 0 });
            }
        }
        self.start_publishing(t, now);
        TickStatus::Success
    }

    fn recover_dependency(&mut self, run: &mut Run, node: &str, dep: &str, now: Millis) -> Result<TickStatus, TickError> {
        let mut nested = match run.state.remove(node) {
            Some(StepState::Nested(n)) => n,
            _ => {
                let Some(profile) = self.spec.workload(dep) else {
                    return Err(fault(format!("unknown workload '{dep}'")));
                };
                if dep == run.workload || run.chain.iter().any(|c| c == dep) || self.wl[dep].mitigating {
                    return Err(fault(format!("circular recovery through '{dep}'")));
                }
                let root = self.spec.mitigation_tree(run.class, dep).cloned().unwrap_or_else(|| default_tree(profile.strategy));
                let tree = BehaviorTree::new(root).map_err(|e| fault(format!("invalid tree for '{dep}': {e:?}")))?;
                self.wl.get_mut(dep).expect("workload").mitigating = true;
                self.trace.push(now, "dependency_recovery", fields!(workload = run.workload, dependency = dep, phase = "start"));
                self.interrupt(now, dep);
                let mut chain = run.chain.clone();
                chain.push(run.workload.clone());
                Box::new((tree, Run::new(dep, run.class, chain)))
            }
        };
        let res = {
            let (tree, sub) = &mut *nested;
            tree.tick(&TickContext::at(now), &mut StepLeaves { world: self, run: sub })
        };
        match res {
            Ok(TickStatus::Success) => {
                run.steps.extend(nested.1.steps.iter().map(|s| format!("{dep}/{s}")));
                self.end_mitigating(now, dep);
                self.trace.push(now, "dependency_recovery", fields!(workload = run.workload, dependency = dep, phase = "success"));
                Ok(TickStatus::Success)
            }
            Ok(TickStatus::Failure) => {
                self.trace.push(now, "dependency_recovery", fields!(workload = run.workload, dependency = dep, phase = "failure"));
                Ok(TickStatus::Failure)
            }
            other => {
                run.state.insert(node.to_string(), StepState::Nested(nested));
                other
            }
        }
    }
}
