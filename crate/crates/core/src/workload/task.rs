//! Task proxy: holds high-level requests across workload deaths.

use std::fmt;

use thiserror::Error;

use crate::scenario::TaskGoals;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TaskStatus {
    Pending,
    Active,
    Done,
    Interrupted,
}

impl fmt::Display for TaskStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskStatus::Pending => "pending",
            TaskStatus::Active => "active",
            TaskStatus::Done => "done",
            TaskStatus::Interrupted => "interrupted",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskRequest {
    pub id: String,
    pub workload: String,
    pub goals: TaskGoals,
    pub status: TaskStatus,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TaskError {
    #[error("unknown task '{0}'")]
    UnknownTask(String),
    #[error("task '{0}' already submitted")]
    Duplicate(String),
}

/// Requests per workload are served first-in first-out; at most one is
/// Active or Interrupted at a time.
#[derive(Clone, Debug, Default)]
pub struct TaskProxy {
    tasks: Vec<TaskRequest>,
}

impl TaskProxy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the status the task entered: Active, or Pending if queued.
    pub fn submit(&mut self, id: &str, workload: &str, goals: TaskGoals) -> Result<TaskStatus, TaskError> {
        if self.tasks.iter().any(|t| t.id == id) {
            return Err(TaskError::Duplicate(id.to_string()));
        }
        let status = if self.current(workload).is_some() || self.tasks.iter().any(|t| t.workload == workload && t.status == TaskStatus::Pending) {
            TaskStatus::Pending
        } else {
            TaskStatus::Active
        };
        self.tasks.push(TaskRequest { id: id.to_string(), workload: workload.to_string(), goals, status });
        Ok(status)
    }

    pub fn status(&self, id: &str) -> Result<TaskStatus, TaskError> {
        self.get(id).map(|t| t.status)
    }

    pub fn get(&self, id: &str) -> Result<&TaskRequest, TaskError> {
        self.tasks.iter().find(|t| t.id == id).ok_or_else(|| TaskError::UnknownTask(id.to_string()))
    }

    pub fn tasks(&self) -> &[TaskRequest] {
        &self.tasks
    }

    /// The Active or Interrupted task of `workload`.
    pub fn current(&self, workload: &str) -> Option<&TaskRequest> {
        self.tasks
            .iter()
            .find(|t| t.workload == workload && matches!(t.status, TaskStatus::Active | TaskStatus::Interrupted))
    }

    /// A task of `workload` is still to be worked on.
    pub fn requested(&self, workload: &str) -> bool {
        self.tasks.iter().any(|t| t.workload == workload && t.status != TaskStatus::Done)
    }

    /// Marks the current task Interrupted. Returns its id.
    pub fn interrupt(&mut self, workload: &str) -> Option<String> {
        let t = self.tasks.iter_mut().find(|t| t.workload == workload && t.status == TaskStatus::Active)?;
        t.status = TaskStatus::Interrupted;
        Some(t.id.clone())
    }

    /// Re-attaches an Interrupted task to the recovered workload.
    pub fn reattach(&mut self, workload: &str) -> Option<String> {
        let t = self.tasks.iter_mut().find(|t| t.workload == workload && t.status == TaskStatus::Interrupted)?;
        t.status = TaskStatus::Active;
        Some(t.id.clone())
    }

    /// Marks `id` Done and activates the next queued task of the workload.
    pub fn complete(&mut self, id: &str) -> Result<Option<String>, TaskError> {
        let t = self.tasks.iter_mut().find(|t| t.id == id).ok_or_else(|| TaskError::UnknownTask(id.to_string()))?;
        t.status = TaskStatus::Done;
        let workload = t.workload.clone();
        let next = self.tasks.iter_mut().find(|t| t.workload == workload && t.status == TaskStatus::Pending);
        Ok(next.map(|n| {
            n.status = TaskStatus::Active;
            n.id.clone()
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn goals() -> TaskGoals {
        TaskGoals::Navigate(vec![(1.0, 0.0)])
    }

    #[test]
    fn interruption_keeps_the_request_alive() {
        let mut p = TaskProxy::new();
        assert_eq!(p.submit("a", "nav", goals()).unwrap(), TaskStatus::Active);
        p.interrupt("nav");
        assert_eq!(p.status("a").unwrap(), TaskStatus::Interrupted);
        assert!(p.requested("nav"));
        p.reattach("nav");
        assert_eq!(p.status("a").unwrap(), TaskStatus::Active);
    }

    #[test]
    fn fifo_queue_and_done_is_final() {
        let mut p = TaskProxy::new();
        p.submit("a", "nav", goals()).unwrap();
        assert_eq!(p.submit("b", "nav", goals()).unwrap(), TaskStatus::Pending);
        assert_eq!(p.submit("c", "nav", goals()).unwrap(), TaskStatus::Pending);
        assert_eq!(p.complete("a").unwrap().as_deref(), Some("b"));
        assert_eq!(p.status("a").unwrap(), TaskStatus::Done);
        assert_eq!(p.status("c").unwrap(), TaskStatus::Pending);
        assert!(p.reattach("nav").is_none());
        assert_eq!(p.status("a").unwrap(), TaskStatus::Done);
    }

    #[test]
    fn unknown_task_is_an_error() {
        let p = TaskProxy::new();
        assert_eq!(p.status("x"), Err(TaskError::UnknownTask("x".into())));
    }
}
