//! Behavior trees: node structure, validation and a deterministic tick engine.
//!
//! Composites are reactive: every tick starts again at the leftmost child, so
//! conditions are re-evaluated each cycle. Leaves are supplied by the caller
//! through [`Leaves`]; the engine only owns decorator bookkeeping (retry
//! counters and timeout start times).

mod node;
mod tick;
mod validate;

pub use node::{BtNode, NodeKind};
pub use tick::{BbValue, Blackboard, BehaviorTree, Leaves, TickContext, TickError, TickStatus};
pub use validate::{validate, ValidationError, ValidationErrorKind};
