use std::collections::BTreeMap;

use crate::time::Millis;

#[derive(Clone, Debug, PartialEq)]
pub enum PlantSnapshot {
    Base { x: f64, y: f64, theta: f64 },
    Joints(Vec<f64>),
    None,
}

/// Last healthy application state of a workload.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub workload: String,
    pub t: Millis,
    pub task_id: String,
    pub goal_index: usize,
    pub snapshot: PlantSnapshot,
}

/// Checkpoints kept outside the monitored workloads, latest only.
#[derive(Clone, Debug, Default)]
pub struct CheckpointStore {
    latest: BTreeMap<String, Checkpoint>,
}

impl CheckpointStore {
    pub fn store(&mut self, cp: Checkpoint) {
        self.latest.insert(cp.workload.clone(), cp);
    }

    pub fn latest(&self, workload: &str) -> Option<&Checkpoint> {
        self.latest.get(workload)
    }

    pub fn len(&self) -> usize {
        self.latest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latest.is_empty()
    }
}
