use std::fmt;

use super::RecoveryStrategy;
use crate::bt::BtNode;

/// Mitigation actions available to mitigation trees.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    RestartScratch,
    ConnectFallback,
    StartApp,
    Initialize,
    Handover,
    Promote,
    RecoverDependency(String),
}

impl Step {
    /// Parses a canonical action string such as `start_app` or
    /// `recover_dependency(loc)`.
    pub fn parse(action: &str) -> Option<Step> {
        let (func, arg) = match action.split_once('(') {
            Some((f, rest)) => (f, Some(rest.strip_suffix(')')?)),
            None => (action, None),
        };
        Some(match (func, arg) {
            ("restart_scratch", None) => Step::RestartScratch,
            ("connect_fallback", None) => Step::ConnectFallback,
            ("start_app", None) => Step::StartApp,
            ("initialize", None) => Step::Initialize,
            ("handover", None) => Step::Handover,
            ("promote", None) => Step::Promote,
            ("recover_dependency", Some(w)) if !w.is_empty() => Step::RecoverDependency(w.to_string()),
            _ => return None,
        })
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::RestartScratch => f.write_str("restart_scratch"),
            Step::ConnectFallback => f.write_str("connect_fallback"),
            Step::StartApp => f.write_str("start_app"),
            Step::Initialize => f.write_str("initialize"),
            Step::Handover => f.write_str("handover"),
            Step::Promote => f.write_str("promote"),
            Step::RecoverDependency(w) => write!(f, "recover_dependency({w})"),
        }
    }
}

/// Tree used when a scenario declares none for a failure: bring up a new
/// instance (redeploy or switch to the standby), start and initialize it,
/// restore the checkpoint and promote it.
pub fn default_tree(strategy: RecoveryStrategy) -> BtNode {
    let first = match strategy {
        RecoveryStrategy::RestartScratch => Step::RestartScratch,
        _ => Step::ConnectFallback,
    };
    let steps = [first, Step::StartApp, Step::Initialize, Step::Handover, Step::Promote];
    BtNode::sequence(
        format!("default_{strategy}"),
        steps.into_iter().map(|s| BtNode::action(s.to_string(), s.to_string())).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::BehaviorTree;

    #[test]
    fn parse_round_trip() {
        for a in ["restart_scratch", "connect_fallback", "start_app", "initialize", "handover", "promote", "recover_dependency(loc)"] {
            assert_eq!(Step::parse(a).unwrap().to_string(), a);
        }
        assert_eq!(Step::parse("promote(nav)"), None);
        assert_eq!(Step::parse("recover_dependency()"), None);
        assert_eq!(Step::parse("reboot"), None);
    }

    #[test]
    fn default_trees_are_valid() {
        for s in RecoveryStrategy::ALL {
            let t = default_tree(s);
            assert_eq!(t.children.len(), 5);
            BehaviorTree::new(t).unwrap();
        }
    }
}
