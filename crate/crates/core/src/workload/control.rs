//! Task controllers for the navigation and manipulation workloads.

use crate::num::{wrap_angle, Real};

pub const NAV_SPEED_GAIN: f64 = 4.0;
pub const NAV_TURN_GAIN: f64 = 2.0;
pub const NAV_GOAL_TOLERANCE: f64 = 0.05;
pub const ARM_GOAL_TOLERANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaseCommand<T> {
    pub v: T,
    pub omega: T,
}

/// Proportional go-to-point steering. Forward speed fades out with the
/// heading error so the base turns on the spot towards goals behind it.
/// Returns `None` when the goal is within tolerance.
pub fn nav_command<T: Real>(pose: (T, T, T), goal: (T, T), max_speed: T, max_turn_rate: T) -> Option<BaseCommand<T>> {
    let (dx, dy) = (goal.0 - pose.0, goal.1 - pose.1);
    let dist = (dx * dx + dy * dy).sqrt();
    if dist <= T::lit(NAV_GOAL_TOLERANCE) {
        return None;
    }
    let err = wrap_angle(dy.atan2(dx) - pose.2);
    let v = (T::lit(NAV_SPEED_GAIN) * dist).min(max_speed) * err.cos().max(T::zero());
    let omega = (T::lit(NAV_TURN_GAIN) * err).max(-max_turn_rate).min(max_turn_rate);
    Some(BaseCommand { v, omega })
}

/// Rate-limited dead-beat joint command: reach the target in one period if
/// the limit allows. Returns `None` when every joint is within tolerance.
pub fn arm_command<T: Real>(q: &[T], target: &[T], period_s: T, limit: T) -> Option<Vec<T>> {
    let tol = T::lit(ARM_GOAL_TOLERANCE);
    if q.iter().zip(target).all(|(a, b)| (*b - *a).abs() <= tol) {
        return None;
    }
    Some(q.iter().zip(target).map(|(a, b)| ((*b - *a) / period_s).max(-limit).min(limit)).collect())
}
