use std::collections::BTreeSet;
use std::fmt;

use super::{BtNode, NodeKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidationErrorKind {
    EmptyComposite,
    LeafWithChildren { found: usize },
    DecoratorArity { found: usize },
    ThresholdOutOfRange { threshold: usize, children: usize },
    DuplicateName,
    EmptyName,
}

/// A structural problem, naming the node it was found on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationError {
    pub node: String,
    pub keyword: &'static str,
    pub kind: ValidationErrorKind,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kw, name) = (self.keyword, &self.node);
        match &self.kind {
            ValidationErrorKind::EmptyComposite => {
                write!(f, "{kw} '{name}' requires ≥1 child")
            }
            ValidationErrorKind::LeafWithChildren { found } => {
                write!(f, "{kw} '{name}' must have no children, found {found}")
            }
            ValidationErrorKind::DecoratorArity { found } => {
                write!(f, "{kw} '{name}' requires exactly 1 child, found {found}")
            }
            ValidationErrorKind::ThresholdOutOfRange { threshold, children } => write!(
                f,
                "{kw} '{name}' success threshold {threshold} out of range [1, {children}]"
            ),
            ValidationErrorKind::DuplicateName => write!(f, "duplicate node name '{name}'"),
            ValidationErrorKind::EmptyName => write!(f, "{kw} node has an empty name"),
        }
    }
}

/// Checks all structural invariants. An empty result means the tree is valid.
pub fn validate(tree: &BtNode) -> Vec<ValidationError> {
    let mut errors = Vec::new();
    let mut seen = BTreeSet::new();
    check(tree, &mut seen, &mut errors);
    errors
}

fn check<'a>(node: &'a BtNode, seen: &mut BTreeSet<&'a str>, errors: &mut Vec<ValidationError>) {
    let mut push = |kind| {
        errors.push(ValidationError { node: node.name.clone(), keyword: node.kind.keyword(), kind })
    };
    if node.name.is_empty() {
        push(ValidationErrorKind::EmptyName);
    } else if !seen.insert(node.name.as_str()) {
        push(ValidationErrorKind::DuplicateName);
    }
    let n = node.children.len();
    match &node.kind {
        NodeKind::Sequence | NodeKind::Fallback => {
            if n == 0 {
                push(ValidationErrorKind::EmptyComposite);
            }
        }
        NodeKind::Parallel { success_threshold } => {
            if n == 0 {
                push(ValidationErrorKind::EmptyComposite);
            }
            if *success_threshold < 1 || *success_threshold > n {
                push(ValidationErrorKind::ThresholdOutOfRange { threshold: *success_threshold, children: n });
            }
        }
        NodeKind::Condition { .. } | NodeKind::Action { .. } => {
            if n != 0 {
                push(ValidationErrorKind::LeafWithChildren { found: n });
            }
        }
        NodeKind::Inverter | NodeKind::Retry { .. } | NodeKind::Timeout { .. } => {
            if n != 1 {
                push(ValidationErrorKind::DecoratorArity { found: n });
            }
        }
    }
    for c in &node.children {
        check(c, seen, errors);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Millis;
    use proptest::prelude::*;

    #[test]
    fn single_condition_is_valid() {
        assert!(validate(&BtNode::condition("c", "p")).is_empty());
    }

    #[test]
    fn empty_sequence_names_the_node() {
        let errs = validate(&BtNode::sequence("root", vec![]));
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].node, "root");
        assert_eq!(errs[0].kind, ValidationErrorKind::EmptyComposite);
        assert_eq!(errs[0].to_string(), "sequence 'root' requires ≥1 child");
    }

    #[test]
    fn parallel_threshold_above_children() {
        let kids = (0..3).map(|i| BtNode::condition(format!("c{i}"), "p")).collect();
        let errs = validate(&BtNode::parallel("par", 4, kids));
        assert_eq!(
            errs,
            vec![ValidationError {
                node: "par".into(),
                keyword: "parallel",
                kind: ValidationErrorKind::ThresholdOutOfRange { threshold: 4, children: 3 }
            }]
        );
    }

    #[test]
    fn duplicate_and_arity_errors() {
        let bad = BtNode::new(
            "inv",
            NodeKind::Inverter,
            vec![BtNode::condition("a", "p"), BtNode::condition("a", "q")],
        );
        let kinds: Vec<_> = validate(&bad).into_iter().map(|e| e.kind).collect();
        assert!(kinds.contains(&ValidationErrorKind::DecoratorArity { found: 2 }));
        assert!(kinds.contains(&ValidationErrorKind::DuplicateName));
    }

    #[test]
    fn leaf_with_children() {
        let bad = BtNode::new(
            "act",
            NodeKind::Action { action: "x".into() },
            vec![BtNode::condition("c", "p")],
        );
        assert_eq!(validate(&bad)[0].kind, ValidationErrorKind::LeafWithChildren { found: 1 });
    }

    fn valid_tree() -> impl Strategy<Value = BtNode> {
        let leaf = prop_oneof![Just(0u8), Just(1u8)].prop_map(|k| {
            if k == 0 {
                BtNode::condition("x", "p")
            } else {
                BtNode::action("x", "a")
            }
        });
        leaf.prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 1..4).prop_map(|c| BtNode::sequence("x", c)),
                prop::collection::vec(inner.clone(), 1..4).prop_map(|c| BtNode::fallback("x", c)),
                (prop::collection::vec(inner.clone(), 1..4), any::<prop::sample::Index>()).prop_map(
                    |(c, i)| {
                        let t = i.index(c.len()) + 1;
                        BtNode::parallel("x", t, c)
                    }
                ),
                inner.clone().prop_map(|c| BtNode::inverter("x", c)),
                (inner.clone(), 0u32..4).prop_map(|(c, m)| BtNode::retry("x", m, c)),
                (inner, 1u64..500).prop_map(|(c, b)| BtNode::timeout("x", Millis(b), c)),
            ]
        })
        .prop_map(|mut t| {
            let mut i = 0usize;
            rename(&mut t, &mut i);
            t
        })
    }

    fn rename(n: &mut BtNode, i: &mut usize) {
        n.name = format!("n{i}");
        *i += 1;
        for c in &mut n.children {
            rename(c, i);
        }
    }

    /// Breaks exactly one invariant at the pre-order position `at`.
    fn corrupt(n: &mut BtNode, at: &mut usize, how: u8) -> bool {
        if *at == 0 {
            match (&mut n.kind, how % 3) {
                (NodeKind::Parallel { success_threshold }, 0) => *success_threshold = n.children.len() + 1,
                (k, _) if k.is_composite() => n.children.clear(),
                (k, _) if k.is_decorator() => n.children.push(BtNode::condition("extra_child", "p")),
                _ => n.children.push(BtNode::condition("extra_child", "p")),
            }
            return true;
        }
        *at -= 1;
        n.children.iter_mut().any(|c| corrupt(c, at, how))
    }

    proptest! {
        #[test]
        fn generated_valid_trees_pass(t in valid_tree()) {
            prop_assert!(validate(&t).is_empty());
        }

        #[test]
        fn single_corruption_is_detected(t in valid_tree(), pos in any::<prop::sample::Index>(), how in 0u8..3) {
            let mut bad = t.clone();
            let mut at = pos.index(t.size());
            prop_assert!(corrupt(&mut bad, &mut at, how));
            prop_assert!(!validate(&bad).is_empty());
        }

        #[test]
        fn duplicate_names_are_detected(t in valid_tree(), pos in any::<prop::sample::Index>()) {
            prop_assume!(t.size() > 1);
            let mut bad = t.clone();
            let target = pos.index(t.size() - 1) + 1;
            let mut i = 0usize;
            fn set(n: &mut BtNode, i: &mut usize, target: usize) {
                if *i == target { n.name = "n0".into(); }
                *i += 1;
                for c in &mut n.children { set(c, i, target); }
            }
            set(&mut bad, &mut i, target);
            prop_assert!(validate(&bad).iter().any(|e| e.kind == ValidationErrorKind::DuplicateName));
        }
    }
}
