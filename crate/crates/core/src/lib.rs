//! Simulation of failure detection and recovery for containerized robot
//! workloads: behavior trees, a scenario language, a discrete-event cluster
//! and robot model, monitoring, mitigation strategies and fleet analysis.

pub mod bt;
pub mod fleet;
pub mod kernel;
pub mod metrics;
pub mod mitigation;
pub mod monitoring;
pub mod num;
pub mod scenario;
pub mod sim;
pub mod time;
pub mod workload;

pub use scenario::{parse_scenario, ScenarioSpec};
pub use sim::{run, RunOutcome};
pub use time::Millis;

/// Robot plant in double precision, as used by the simulator.
pub type Plant = workload::PlantState<f64>;
/// Monte Carlo overflow estimate in double precision.
pub type OverflowEstimate = fleet::McEstimate<f64>;
