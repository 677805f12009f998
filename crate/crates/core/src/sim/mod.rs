//! Scenario execution: one deterministic event loop over the cluster, the
//! workload instances, the robot plant and the supervisor.

mod steps;
mod world;

use crate::kernel::EventTrace;
use crate::metrics::MetricsBundle;
use crate::monitoring::FailureEvent;
use crate::workload::TaskRequest;

pub use world::{run, CONSUMER, SUPERVISOR_CONTAINER};

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub trace: EventTrace,
    pub metrics: MetricsBundle,
    pub failures: Vec<FailureEvent>,
    /// Unresolvable scenario problems; the run stopped at the first one.
    pub faults: Vec<String>,
    /// Mitigation trees that returned Failure.
    pub escalations: Vec<String>,
    /// A failure hit a workload while it was being mitigated.
    pub flagged: bool,
    pub tasks: Vec<TaskRequest>,
}

impl RunOutcome {
    /// 0 clean, 2 scenario fault, 3 escalation.
    pub fn exit_code(&self) -> i32 {
        if !self.faults.is_empty() {
            2
        } else if !self.escalations.is_empty() {
            3
        } else {
            0
        }
    }
}
