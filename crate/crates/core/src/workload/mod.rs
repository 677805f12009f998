//! Simulated robotic workloads: profiles, plant, controllers, task proxy.

mod checkpoint;
pub mod control;
mod plant;
mod profile;
mod task;

pub use checkpoint::{Checkpoint, CheckpointStore, PlantSnapshot};
pub use plant::{step_plant, PlantLimits, PlantState, COMMAND_WATCHDOG};
pub use profile::{CpuProfile, LifecycleMode, TopicRole, TopicSpec, WorkloadKind, WorkloadProfile};
pub use task::{TaskError, TaskProxy, TaskRequest, TaskStatus};
