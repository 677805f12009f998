use crate::monitoring::FailureEvent;
use crate::time::Millis;

use super::RecoveryStrategy;

/// Recovery of one failure, decomposed into detection, cluster, startup and
/// re-initialization time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveryReport {
    pub failure: FailureEvent,
    pub strategy: RecoveryStrategy,
    pub t_detection: Millis,
    pub t_cluster: Millis,
    pub t_startup: Millis,
    pub t_reinit: Millis,
    /// Failure to first delivered message of the recovered instance.
    pub t_recovery: Millis,
    pub steps: Vec<String>,
}

/// Times at which a mitigation passed its phase boundaries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Milestones {
    /// The replacement pod runs, or the standby became reachable.
    pub cluster_ready: Option<Millis>,
    /// The application process of the new instance is up.
    pub app_started: Option<Millis>,
    /// First message of the recovered instance reached its consumers.
    pub active: Option<Millis>,
}

impl RecoveryReport {
    /// Builds the report from measured milestones. Missing intermediate
    /// milestones collapse onto the next one; each boundary is clamped so the
    /// phases are ordered.
    pub fn measure(failure: FailureEvent, strategy: RecoveryStrategy, m: &Milestones, steps: Vec<String>) -> Option<Self> {
        let active = m.active?;
        let detected = failure.t_detected;
        let cluster = m.cluster_ready.unwrap_or(active).clamp(detected, active);
        let started = m.app_started.unwrap_or(active).clamp(cluster, active);
        Some(RecoveryReport {
            t_detection: failure.t_detection(),
            t_cluster: cluster - detected,
            t_startup: started - cluster,
            t_reinit: active - started,
            t_recovery: active - failure.t_failure_actual,
            failure,
            strategy,
            steps,
        })
    }

    pub fn component_sum(&self) -> Millis {
        self.t_detection + self.t_cluster + self.t_startup + self.t_reinit
    }

    pub fn satisfies_sum(&self) -> bool {
        self.component_sum() == self.t_recovery
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitoring::FailureClass;

    fn failure() -> FailureEvent {
        FailureEvent {
            workload: "nav".into(),
            class: FailureClass::TopicSilence,
            t_failure_actual: Millis(20000),
            t_detected: Millis(20500),
            spurious: false,
        }
    }

    #[test]
    fn scratch_defaults_sum_to_6900() {
        let m = Milestones { cluster_ready: Some(Millis(23400)), app_started: Some(Millis(25400)), active: Some(Millis(26900)) };
        let r = RecoveryReport::measure(failure(), RecoveryStrategy::RestartScratch, &m, vec![]).unwrap();
        assert_eq!((r.t_detection, r.t_cluster, r.t_startup, r.t_reinit), (Millis(500), Millis(2900), Millis(2000), Millis(1500)));
        assert_eq!(r.t_recovery, Millis(6900));
        assert!(r.satisfies_sum());
    }

    #[test]
    fn missing_milestones_collapse() {
        let m = Milestones { cluster_ready: Some(Millis(20600)), app_started: None, active: Some(Millis(20700)) };
        let r = RecoveryReport::measure(failure(), RecoveryStrategy::FallbackShadowExecution, &m, vec![]).unwrap();
        assert_eq!((r.t_cluster, r.t_startup, r.t_reinit), (Millis(100), Millis(100), Millis(0)));
        assert!(RecoveryReport::measure(failure(), RecoveryStrategy::RestartScratch, &Milestones::default(), vec![]).is_none());
    }
}
