use crate::time::Millis;

/// Node kinds. Composites hold their children in [`BtNode::children`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Sequence,
    Fallback,
    Parallel { success_threshold: usize },
    Condition { predicate: String },
    Action { action: String },
    Inverter,
    Retry { max_attempts: u32 },
    Timeout { budget: Millis },
}

impl NodeKind {
    /// Keyword used in scenario files and diagnostics.
    pub fn keyword(&self) -> &'static str {
        match self {
            NodeKind::Sequence => "sequence",
            NodeKind::Fallback => "fallback",
            NodeKind::Parallel { .. } => "parallel",
            NodeKind::Condition { .. } => "condition",
            NodeKind::Action { .. } => "action",
            NodeKind::Inverter => "inverter",
            NodeKind::Retry { .. } => "retry",
            NodeKind::Timeout { .. } => "timeout",
        }
    }

    pub fn is_composite(&self) -> bool {
        matches!(self, NodeKind::Sequence | NodeKind::Fallback | NodeKind::Parallel { .. })
    }

    pub fn is_decorator(&self) -> bool {
        matches!(self, NodeKind::Inverter | NodeKind::Retry { .. } | NodeKind::Timeout { .. })
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, NodeKind::Condition { .. } | NodeKind::Action { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BtNode {
    pub name: String,
    pub kind: NodeKind,
    pub children: Vec<BtNode>,
}

impl BtNode {
    pub fn new(name: impl Into<String>, kind: NodeKind, children: Vec<BtNode>) -> Self {
        BtNode { name: name.into(), kind, children }
    }

    pub fn sequence(name: impl Into<String>, children: Vec<BtNode>) -> Self {
        Self::new(name, NodeKind::Sequence, children)
    }

    pub fn fallback(name: impl Into<String>, children: Vec<BtNode>) -> Self {
        Self::new(name, NodeKind::Fallback, children)
    }

    pub fn parallel(name: impl Into<String>, success_threshold: usize, children: Vec<BtNode>) -> Self {
        Self::new(name, NodeKind::Parallel { success_threshold }, children)
    }

    pub fn condition(name: impl Into<String>, predicate: impl Into<String>) -> Self {
        Self::new(name, NodeKind::Condition { predicate: predicate.into() }, Vec::new())
    }

    pub fn action(name: impl Into<String>, action: impl Into<String>) -> Self {
        Self::new(name, NodeKind::Action { action: action.into() }, Vec::new())
    }

    pub fn inverter(name: impl Into<String>, child: BtNode) -> Self {
        Self::new(name, NodeKind::Inverter, vec![child])
    }

    pub fn retry(name: impl Into<String>, max_attempts: u32, child: BtNode) -> Self {
        Self::new(name, NodeKind::Retry { max_attempts }, vec![child])
    }

    pub fn timeout(name: impl Into<String>, budget: Millis, child: BtNode) -> Self {
        Self::new(name, NodeKind::Timeout { budget }, vec![child])
    }

    /// Number of nodes in this subtree, including `self`.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(BtNode::size).sum::<usize>()
    }

    /// Pre-order walk.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a BtNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    /// Every predicate and action id referenced by leaves, in pre-order.
    pub fn leaf_ids(&self) -> Vec<(&str, &NodeKind)> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if n.kind.is_leaf() {
                out.push((n.name.as_str(), &n.kind));
            }
        });
        out
    }
}
