//! Recovery strategies executed as mitigation trees.
//!
//! The step library is interpreted by the simulator (`crate::sim`), which
//! owns the cluster and instances the steps act on.

mod report;
mod step;
mod strategy;

pub use report::{Milestones, RecoveryReport};
pub use step::{default_tree, Step};
pub use strategy::RecoveryStrategy;
