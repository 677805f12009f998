use std::fmt;

use crate::mitigation::RecoveryStrategy;
use crate::time::Millis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WorkloadKind {
    Navigation,
    Manipulation,
    /// Publishes its topics and has no task logic (e.g. localization).
    Service,
}

impl WorkloadKind {
    pub const ALL: [WorkloadKind; 3] = [WorkloadKind::Navigation, WorkloadKind::Manipulation, WorkloadKind::Service];

    pub fn keyword(self) -> &'static str {
        match self {
            WorkloadKind::Navigation => "navigation",
            WorkloadKind::Manipulation => "manipulation",
            WorkloadKind::Service => "service",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

impl fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Lifecycle of a workload instance. A standby instance is parked in one of
/// the fallback modes (`PodStarted`, `AppInitialized`, `ShadowExecution`).
///
/// `Booted` is an application that has started but not initialized;
/// `Ready` is fully initialized and waiting for handover and promotion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LifecycleMode {
    Pending,
    PodStarted,
    Booting,
    Booted,
    AppInitialized,
    Initializing,
    Ready,
    ShadowExecution,
    Active,
    Terminated,
}

impl LifecycleMode {
    pub fn keyword(self) -> &'static str {
        match self {
            LifecycleMode::Pending => "pending",
            LifecycleMode::PodStarted => "pod_started",
            LifecycleMode::Booting => "booting",
            LifecycleMode::Booted => "booted",
            LifecycleMode::AppInitialized => "app_initialized",
            LifecycleMode::Initializing => "initializing",
            LifecycleMode::Ready => "ready",
            LifecycleMode::ShadowExecution => "shadow_execution",
            LifecycleMode::Active => "active",
            LifecycleMode::Terminated => "terminated",
        }
    }

    /// Application process is up (it has finished booting).
    pub fn app_started(self) -> bool {
        matches!(
            self,
            LifecycleMode::Booted
                | LifecycleMode::AppInitialized
                | LifecycleMode::Initializing
                | LifecycleMode::Ready
                | LifecycleMode::ShadowExecution
                | LifecycleMode::Active
        )
    }

    /// Initialized far enough to take over a task.
    pub fn initialized(self) -> bool {
        matches!(
            self,
            LifecycleMode::AppInitialized | LifecycleMode::Ready | LifecycleMode::ShadowExecution | LifecycleMode::Active
        )
    }
}

impl fmt::Display for LifecycleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TopicRole {
    /// Velocity commands to the mobile base.
    Command,
    Pose,
    JointStates,
    Status,
}

impl TopicRole {
    pub const ALL: [TopicRole; 4] = [TopicRole::Command, TopicRole::Pose, TopicRole::JointStates, TopicRole::Status];

    pub fn keyword(self) -> &'static str {
        match self {
            TopicRole::Command => "command",
            TopicRole::Pose => "pose",
            TopicRole::JointStates => "joint_states",
            TopicRole::Status => "status",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopicSpec {
    pub id: String,
    pub role: TopicRole,
    pub rate_hz: f64,
}

impl TopicSpec {
    pub fn period(&self) -> Millis {
        Millis::period_of_hz(self.rate_hz)
    }
}

/// milliCPU drawn per lifecycle mode. Instances between pod start and
/// promotion (booting, initializing, ready) bill at the `active` rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CpuProfile {
    pub pod_started: u32,
    pub app_initialized: u32,
    pub shadow_execution: u32,
    pub active: u32,
}

impl Default for CpuProfile {
    fn default() -> Self {
        CpuProfile { pod_started: 600, app_initialized: 800, shadow_execution: 1000, active: 1000 }
    }
}

impl CpuProfile {
    pub fn usage(&self, mode: LifecycleMode) -> u32 {
        match mode {
            LifecycleMode::Pending | LifecycleMode::Terminated => 0,
            LifecycleMode::PodStarted => self.pod_started,
            LifecycleMode::AppInitialized => self.app_initialized,
            LifecycleMode::ShadowExecution => self.shadow_execution,
            LifecycleMode::Booting
            | LifecycleMode::Booted
            | LifecycleMode::Initializing
            | LifecycleMode::Ready
            | LifecycleMode::Active => self.active,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadProfile {
    pub name: String,
    pub kind: WorkloadKind,
    pub startup_time: Millis,
    pub init_time: Millis,
    /// Part of `init_time` spent loading task state; all an already
    /// initialized standby still has to do.
    pub state_init_time: Millis,
    pub topics: Vec<TopicSpec>,
    pub cpu: CpuProfile,
    pub depends_on: Vec<String>,
    pub strategy: RecoveryStrategy,
    /// Shared standby pool name; only for `FallbackPodStarted`.
    pub fallback_group: Option<String>,
    pub auto_restart: bool,
    pub max_speed: f64,
    pub max_turn_rate: f64,
    pub max_joint_speed: f64,
}

impl WorkloadProfile {
    pub fn new(name: impl Into<String>, kind: WorkloadKind) -> Self {
        let (startup, init, state_init) = match kind {
            WorkloadKind::Navigation => (2000, 1500, 500),
            WorkloadKind::Manipulation => (1500, 1000, 400),
            WorkloadKind::Service => (1000, 500, 0),
        };
        WorkloadProfile {
            name: name.into(),
            kind,
            startup_time: Millis(startup),
            init_time: Millis(init),
            state_init_time: Millis(state_init),
            topics: Vec::new(),
            cpu: CpuProfile::default(),
            depends_on: Vec::new(),
            strategy: RecoveryStrategy::RestartScratch,
            fallback_group: None,
            auto_restart: false,
            max_speed: 0.5,
            max_turn_rate: 1.5,
            max_joint_speed: 1.0,
        }
    }

    pub fn topic(&self, role: TopicRole) -> Option<&TopicSpec> {
        self.topics.iter().find(|t| t.role == role)
    }

    /// Name of the container that accounts for the standby instance.
    pub fn fallback_container(&self) -> String {
        match &self.fallback_group {
            Some(g) => g.clone(),
            None => format!("{}-fallback", self.name),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn navigation_uninitialized_fallback_is_sixty_percent() {
        let p = WorkloadProfile::new("nav", WorkloadKind::Navigation);
        let r = p.cpu.usage(LifecycleMode::PodStarted) as f64 / p.cpu.usage(LifecycleMode::Active) as f64;
        assert_eq!(r, 0.6);
        assert_eq!(p.cpu.usage(LifecycleMode::ShadowExecution), p.cpu.usage(LifecycleMode::Active));
    }

    #[test]
    fn keywords_round_trip() {
        for k in WorkloadKind::ALL {
            assert_eq!(WorkloadKind::from_keyword(k.keyword()), Some(k));
        }
        for r in TopicRole::ALL {
            assert_eq!(TopicRole::from_keyword(r.keyword()), Some(r));
        }
    }
}
