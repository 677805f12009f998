//! Scenario documents: workloads, monitors, mitigation trees and injections.

mod lex;
mod parse;
mod serialize;

use std::fmt;

use crate::bt::BtNode;
use crate::monitoring::{FailureClass, FrequencyMonitorSpec, SupervisionSpec};
use crate::time::Millis;
use crate::mitigation::RecoveryStrategy;
use crate::workload::{WorkloadKind, WorkloadProfile};

pub use parse::parse_scenario;
pub use serialize::serialize_scenario;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterParams {
    pub pod_restart_latency: Millis,
    pub policy_patch_latency: Millis,
    pub cpu_sample_period: Millis,
    /// Uniform jitter on cluster latencies as a fraction (0.1 = ±10 %).
    pub jitter: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            pod_restart_latency: Millis(2900),
            policy_patch_latency: Millis(100),
            cpu_sample_period: Millis(1000),
            jitter: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupervisorParams {
    pub tick_period: Millis,
    pub checkpoint_period: Millis,
    /// Constant draw of the monitoring/mitigation container.
    pub cpu: u32,
}

impl Default for SupervisorParams {
    fn default() -> Self {
        SupervisorParams { tick_period: Millis(100), checkpoint_period: Millis(100), cpu: 200 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TaskGoals {
    Navigate(Vec<(f64, f64)>),
    MoveArm(Vec<Vec<f64>>),
}

impl TaskGoals {
    pub fn len(&self) -> usize {
        match self {
            TaskGoals::Navigate(g) => g.len(),
            TaskGoals::MoveArm(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub id: String,
    pub workload: String,
    pub goals: TaskGoals,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InjectionKind {
    DeletePod(String),
    SilentRemap(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailureInjection {
    pub at: Millis,
    pub kind: InjectionKind,
}

/// A mitigation tree for one failure class, optionally restricted to one workload.
#[derive(Clone, Debug, PartialEq)]
pub struct MitigationTree {
    pub class: FailureClass,
    pub workload: Option<String>,
    pub tree: BtNode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub duration: Millis,
    pub cluster: ClusterParams,
    pub supervisor: SupervisorParams,
    pub workloads: Vec<WorkloadProfile>,
    pub tasks: Vec<TaskSpec>,
    pub frequency_monitors: Vec<FrequencyMonitorSpec>,
    pub supervision_monitors: Vec<SupervisionSpec>,
    pub monitors: Option<BtNode>,
    pub mitigation: Vec<MitigationTree>,
    pub injections: Vec<FailureInjection>,
}

impl ScenarioSpec {
    pub fn workload(&self, name: &str) -> Option<&WorkloadProfile> {
        self.workloads.iter().find(|w| w.name == name)
    }

    /// Workload publishing `topic`.
    pub fn topic_owner(&self, topic: &str) -> Option<&WorkloadProfile> {
        self.workloads.iter().find(|w| w.topics.iter().any(|t| t.id == topic))
    }

    /// Tree for `class` on `workload`: a workload-specific one wins over a
    /// class-wide one.
    pub fn mitigation_tree(&self, class: FailureClass, workload: &str) -> Option<&BtNode> {
        let specific = self.mitigation.iter().find(|m| m.class == class && m.workload.as_deref() == Some(workload));
        specific
            .or_else(|| self.mitigation.iter().find(|m| m.class == class && m.workload.is_none()))
            .map(|m| &m.tree)
    }

    /// Copy in which every navigation and manipulation workload recovers with
    /// `strategy` through its default tree; declared mitigation trees are
    /// dropped. Fails if the strategy does not apply to one of them.
    pub fn with_strategy(&self, strategy: RecoveryStrategy) -> Result<ScenarioSpec, String> {
        let mut spec = self.clone();
        for w in &mut spec.workloads {
            if w.kind == WorkloadKind::Service {
                continue;
            }
            if !strategy.applicable_to(w.kind) {
                return Err(format!("strategy {strategy} does not apply to {} workload '{}'", w.kind, w.name));
            }
            w.strategy = strategy;
            if strategy != RecoveryStrategy::FallbackPodStarted {
                w.fallback_group = None;
            }
        }
        spec.mitigation.clear();
        Ok(spec)
    }
}

/// A positioned parse or validation message. Line and column are 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Diagnostic { line, column, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}
