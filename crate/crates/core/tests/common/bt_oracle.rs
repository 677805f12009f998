use std::collections::BTreeMap;

use mitsim_core::bt::{BehaviorTree, BtNode, Leaves, TickContext, TickError, TickStatus};
use mitsim_core::time::Millis;

#[derive(Clone, Debug)]
enum Shape {
    Leaf,
    Inv(Box<Shape>),
    Seq(Vec<Shape>),
    Fb(Vec<Shape>),
}

/// Every shape of depth ≤ `depth` (a leaf has depth 1) with composites of
/// 1..=`arity` children.
fn shapes(depth: usize, arity: usize) -> Vec<Shape> {
    if depth == 1 {
        return vec![Shape::Leaf];
    }
    let sub = shapes(depth - 1, arity);
    let mut out = vec![Shape::Leaf];
    out.extend(sub.iter().cloned().map(|s| Shape::Inv(Box::new(s))));
    let mut lists: Vec<Vec<Shape>> = sub.iter().map(|s| vec![s.clone()]).collect();
    let mut all = lists.clone();
    for _ in 1..arity {
        lists = lists.iter().flat_map(|l| sub.iter().map(move |s| [l.clone(), vec![s.clone()]].concat())).collect();
        all.extend(lists.iter().cloned());
    }
    for l in all {
        out.push(Shape::Seq(l.clone()));
        out.push(Shape::Fb(l));
    }
    out
}

fn leaves(s: &Shape) -> usize {
    match s {
        Shape::Leaf => 1,
        Shape::Inv(c) => leaves(c),
        Shape::Seq(cs) | Shape::Fb(cs) => cs.iter().map(leaves).sum(),
    }
}

fn build(s: &Shape, next: &mut usize) -> BtNode {
    let id = *next;
    *next += 1;
    match s {
        Shape::Leaf => BtNode::condition(format!("l{id}"), format!("p{id}")),
        Shape::Inv(c) => BtNode::inverter(format!("n{id}"), build(c, next)),
        Shape::Seq(cs) => BtNode::sequence(format!("n{id}"), cs.iter().map(|c| build(c, next)).collect()),
        Shape::Fb(cs) => BtNode::fallback(format!("n{id}"), cs.iter().map(|c| build(c, next)).collect()),
    }
}

/// Plain recursive semantics; records the leaves it evaluates.
fn oracle(n: &BtNode, status: &BTreeMap<String, TickStatus>, visited: &mut Vec<String>) -> TickStatus {
    use mitsim_core::bt::NodeKind::*;
    match &n.kind {
        Condition { .. } => {
            visited.push(n.name.clone());
            status[&n.name]
        }
        Inverter => match oracle(&n.children[0], status, visited) {
            TickStatus::Success => TickStatus::Failure,
            TickStatus::Failure => TickStatus::Success,
            TickStatus::Running => TickStatus::Running,
        },
        Sequence => {
            for c in &n.children {
                let s = oracle(c, status, visited);
                if s != TickStatus::Success {
                    return s;
                }
            }
            TickStatus::Success
        }
        Fallback => {
            for c in &n.children {
                let s = oracle(c, status, visited);
                if s != TickStatus::Failure {
                    return s;
                }
            }
            TickStatus::Failure
        }
        other => unreachable!("{other:?}"),
    }
}

struct Fixed<'a> {
    status: &'a BTreeMap<String, TickStatus>,
    visited: Vec<String>,
}

impl Leaves for Fixed<'_> {
    fn condition(&mut self, node: &str, _: &str, _: &TickContext) -> Result<TickStatus, TickError> {
        self.visited.push(node.to_string());
        Ok(self.status[node])
    }

    fn action(&mut self, _: &str, action: &str, _: &TickContext) -> Result<TickStatus, TickError> {
        Err(TickError::UnknownAction(action.to_string()))
    }
}

const STATUSES: [TickStatus; 3] = [TickStatus::Success, TickStatus::Failure, TickStatus::Running];

/// Checks every shape under every leaf assignment; returns (trees, cases).
pub fn exhaustive_check(depth: usize, arity: usize) -> (usize, u64) {
    let all = shapes(depth, arity);
    let mut cases = 0u64;
    for s in &all {
        let root = build(s, &mut 0);
        let names: Vec<String> = root.leaf_ids().into_iter().map(|(n, _)| n.to_string()).collect();
        assert_eq!(names.len(), leaves(s));
        let mut tree = BehaviorTree::new(root.clone()).expect("generated tree is valid");
        for code in 0..3u32.pow(names.len() as u32) {
            let mut c = code;
            let status: BTreeMap<String, TickStatus> = names
                .iter()
                .map(|n| {
                    let st = STATUSES[(c % 3) as usize];
                    c /= 3;
                    (n.clone(), st)
                })
                .collect();
            let mut expected_visits = Vec::new();
            let expected = oracle(&root, &status, &mut expected_visits);
            let mut fixed = Fixed { status: &status, visited: Vec::new() };
            // same tree ticked repeatedly: reactive nodes carry no memory
            let got = tree.tick(&TickContext::at(Millis(cases)), &mut fixed).unwrap();
            assert_eq!(got, expected, "tree {s:?} with {status:?}");
            assert_eq!(fixed.visited, expected_visits, "tick order of {s:?} with {status:?}");
            cases += 1;
        }
    }
    (all.len(), cases)
}

