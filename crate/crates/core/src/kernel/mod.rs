//! Deterministic event scheduling, the simulated cluster and the event trace.

mod cluster;
mod queue;
mod trace;

pub use cluster::{Cluster, ClusterTimer, Deployment, KernelError, NetworkPolicy, PodPhase, PodRecord, Spawned};
pub use queue::EventQueue;
pub use trace::{EventTrace, TraceEvent};
