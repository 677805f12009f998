use std::fmt;

use crate::workload::{LifecycleMode, WorkloadKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecoveryStrategy {
    RestartScratch,
    FallbackPodStarted,
    FallbackInitialized,
    FallbackShadowExecution,
}

impl RecoveryStrategy {
    /// Ordered from least to most initialized standby.
    pub const ALL: [RecoveryStrategy; 4] = [
        RecoveryStrategy::RestartScratch,
        RecoveryStrategy::FallbackPodStarted,
        RecoveryStrategy::FallbackInitialized,
        RecoveryStrategy::FallbackShadowExecution,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            RecoveryStrategy::RestartScratch => "restart_scratch",
            RecoveryStrategy::FallbackPodStarted => "fallback_pod_started",
            RecoveryStrategy::FallbackInitialized => "fallback_initialized",
            RecoveryStrategy::FallbackShadowExecution => "fallback_shadow_execution",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }

    /// Mode the standby instance is parked in, if the strategy keeps one.
    pub fn standby_mode(self) -> Option<LifecycleMode> {
        match self {
            RecoveryStrategy::RestartScratch => None,
            RecoveryStrategy::FallbackPodStarted => Some(LifecycleMode::PodStarted),
            RecoveryStrategy::FallbackInitialized => Some(LifecycleMode::AppInitialized),
            RecoveryStrategy::FallbackShadowExecution => Some(LifecycleMode::ShadowExecution),
        }
    }

    pub fn applicable_to(self, kind: WorkloadKind) -> bool {
        match kind {
            WorkloadKind::Manipulation => self != RecoveryStrategy::FallbackInitialized,
            WorkloadKind::Navigation | WorkloadKind::Service => true,
        }
    }

    pub fn applicable(kind: WorkloadKind) -> Vec<RecoveryStrategy> {
        Self::ALL.into_iter().filter(|s| s.applicable_to(kind)).collect()
    }
}

impl fmt::Display for RecoveryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}
