use crate::bt::BtNode;

/// `Fallback(Inverter(guard), monitored)`: vacuously Success while the
/// guard fails, the monitored verdict otherwise.
pub fn conditional_monitor(name: &str, guard: BtNode, monitored: BtNode) -> BtNode {
    BtNode::fallback(name, vec![BtNode::inverter(format!("{name}.guard_off"), guard), monitored])
}
