use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{validate, BtNode, NodeKind, ValidationError};
use crate::time::Millis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TickStatus {
    Success,
    Failure,
    Running,
}

impl TickStatus {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            TickStatus::Success
        } else {
            TickStatus::Failure
        }
    }

    pub fn invert(self) -> Self {
        match self {
            TickStatus::Success => TickStatus::Failure,
            TickStatus::Failure => TickStatus::Success,
            TickStatus::Running => TickStatus::Running,
        }
    }
}

impl fmt::Display for TickStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TickStatus::Success => "success",
            TickStatus::Failure => "failure",
            TickStatus::Running => "running",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BbValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

pub type Blackboard = BTreeMap<String, BbValue>;

/// Inputs visible to every leaf during one tick.
#[derive(Clone, Debug, Default)]
pub struct TickContext {
    pub sim_time: Millis,
    pub blackboard: Blackboard,
}

impl TickContext {
    pub fn at(sim_time: Millis) -> Self {
        TickContext { sim_time, blackboard: Blackboard::new() }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        match self.blackboard.get(key) {
            Some(BbValue::Text(s)) => Some(s),
            _ => None,
        }
    }
}

/// Configuration faults. These abort the tick; they are not a [`TickStatus`].
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TickError {
    #[error("unknown predicate '{0}'")]
    UnknownPredicate(String),
    #[error("unknown action '{0}'")]
    UnknownAction(String),
    #[error("tick time {now} precedes previous tick at {previous}")]
    TimeWentBackwards { previous: Millis, now: Millis },
    #[error("{0}")]
    Fault(String),
}

/// Supplies condition and action behaviour to the engine.
pub trait Leaves {
    fn condition(&mut self, node: &str, predicate: &str, ctx: &TickContext) -> Result<TickStatus, TickError>;

    fn action(&mut self, node: &str, action: &str, ctx: &TickContext) -> Result<TickStatus, TickError>;

    /// Forget any state kept for the action leaf `node`. Called when a Retry
    /// re-runs its child and on [`BehaviorTree::reset`].
    fn reset_action(&mut self, _node: &str) {}
}

#[derive(Clone, Debug, Default)]
struct Memo {
    retries_used: u32,
    running_since: Option<Millis>,
}

/// A validated tree plus decorator bookkeeping.
#[derive(Clone, Debug)]
pub struct BehaviorTree {
    root: BtNode,
    memo: Vec<Memo>,
    last_tick: Option<Millis>,
    trace: Option<Vec<String>>,
}

impl BehaviorTree {
    pub fn new(root: BtNode) -> Result<Self, Vec<ValidationError>> {
        let errors = validate(&root);
        if !errors.is_empty() {
            return Err(errors);
        }
        let memo = vec![Memo::default(); root.size()];
        Ok(BehaviorTree { root, memo, last_tick: None, trace: None })
    }

    pub fn root(&self) -> &BtNode {
        &self.root
    }

    /// Records the names of ticked nodes, in tick order, until disabled.
    pub fn set_tracing(&mut self, on: bool) {
        self.trace = if on { Some(Vec::new()) } else { None };
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Clears retry counters and timeout start times; leaf state is reset
    /// through [`Leaves::reset_action`].
    pub fn reset_with(&mut self, leaves: &mut impl Leaves) {
        self.reset();
        self.root.walk(&mut |n| {
            if let NodeKind::Action { .. } = n.kind {
                leaves.reset_action(&n.name);
            }
        });
    }

    pub fn reset(&mut self) {
        self.memo.iter_mut().for_each(|m| *m = Memo::default());
        self.last_tick = None;
    }

    pub fn tick(&mut self, ctx: &TickContext, leaves: &mut impl Leaves) -> Result<TickStatus, TickError> {
        if let Some(previous) = self.last_tick {
            if ctx.sim_time < previous {
                return Err(TickError::TimeWentBackwards { previous, now: ctx.sim_time });
            }
        }
        self.last_tick = Some(ctx.sim_time);
        let mut run = Run { memo: &mut self.memo, trace: self.trace.as_mut(), ctx, leaves };
        run.node(&self.root, 0)
    }
}

struct Run<'a, L> {
    memo: &'a mut [Memo],
    trace: Option<&'a mut Vec<String>>,
    ctx: &'a TickContext,
    leaves: &'a mut L,
}

impl<L: Leaves> Run<'_, L> {
    fn node(&mut self, node: &BtNode, idx: usize) -> Result<TickStatus, TickError> {
        if let Some(t) = self.trace.as_mut() {
            t.push(node.name.clone());
        }
        match &node.kind {
            NodeKind::Sequence => {
                let mut child = idx + 1;
                for c in &node.children {
                    let s = self.node(c, child)?;
                    if s != TickStatus::Success {
                        return Ok(s);
                    }
                    child += c.size();
                }
                Ok(TickStatus::Success)
            }
            NodeKind::Fallback => {
                let mut child = idx + 1;
                for c in &node.children {
                    let s = self.node(c, child)?;
                    if s != TickStatus::Failure {
                        return Ok(s);
                    }
                    child += c.size();
                }
                Ok(TickStatus::Failure)
            }
            NodeKind::Parallel { success_threshold } => {
                let (mut ok, mut failed) = (0usize, 0usize);
                let mut child = idx + 1;
                for c in &node.children {
                    match self.node(c, child)? {
                        TickStatus::Success => ok += 1,
                        TickStatus::Failure => failed += 1,
                        TickStatus::Running => {}
                    }
                    child += c.size();
                }
                let n = node.children.len();
                Ok(if ok >= *success_threshold {
                    TickStatus::Success
                } else if failed > n - success_threshold {
                    TickStatus::Failure
                } else {
                    TickStatus::Running
                })
            }
            NodeKind::Condition { predicate } => self.leaves.condition(&node.name, predicate, self.ctx),
            NodeKind::Action { action } => self.leaves.action(&node.name, action, self.ctx),
            NodeKind::Inverter => Ok(self.node(&node.children[0], idx + 1)?.invert()),
            NodeKind::Retry { max_attempts } => loop {
                let s = self.node(&node.children[0], idx + 1)?;
                match s {
                    TickStatus::Failure if self.memo[idx].retries_used < *max_attempts => {
                        self.memo[idx].retries_used += 1;
                        self.reset_subtree(&node.children[0], idx + 1);
                    }
                    TickStatus::Success => {
                        self.memo[idx].retries_used = 0;
                        return Ok(s);
                    }
                    _ => return Ok(s),
                }
            },
            NodeKind::Timeout { budget } => {
                let s = self.node(&node.children[0], idx + 1)?;
                let now = self.ctx.sim_time;
                if s != TickStatus::Running {
                    self.memo[idx].running_since = None;
                    return Ok(s);
                }
                let since = *self.memo[idx].running_since.get_or_insert(now);
                if now - since > *budget {
                    self.memo[idx].running_since = None;
                    self.reset_subtree(&node.children[0], idx + 1);
                    Ok(TickStatus::Failure)
                } else {
                    Ok(TickStatus::Running)
                }
            }
        }
    }

    fn reset_subtree(&mut self, node: &BtNode, idx: usize) {
        for m in &mut self.memo[idx..idx + node.size()] {
            *m = Memo::default();
        }
        let leaves = &mut *self.leaves;
        node.walk(&mut |n| {
            if let NodeKind::Action { .. } = n.kind {
                leaves.reset_action(&n.name);
            }
        });
    }
}
