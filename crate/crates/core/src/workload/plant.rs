//! Kinematic stand-in for the robot: unicycle base and velocity-driven joints.

use crate::num::{wrap_angle, Real};
use crate::time::Millis;

/// Commands older than this are dropped by the actuator watchdog.
pub const COMMAND_WATCHDOG: Millis = Millis(200);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantLimits<T> {
    pub max_speed: T,
    pub max_turn_rate: T,
    pub max_joint_speed: T,
}

impl<T: Real> Default for PlantLimits<T> {
    fn default() -> Self {
        PlantLimits { max_speed: T::one(), max_turn_rate: T::lit(1.5), max_joint_speed: T::one() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantState<T> {
    pub t: Millis,
    pub x: T,
    pub y: T,
    pub theta: T,
    pub v: T,
    pub omega: T,
    pub joint_pos: Vec<T>,
    pub joint_cmd: Vec<T>,
    /// Time the base command was written; `None` exempts it from the watchdog.
    pub base_cmd_at: Option<Millis>,
    pub joint_cmd_at: Option<Millis>,
    pub limits: PlantLimits<T>,
}

impl<T: Real> PlantState<T> {
    pub fn new(joints: usize) -> Self {
        PlantState {
            t: Millis::ZERO,
            x: T::zero(),
            y: T::zero(),
            theta: T::zero(),
            v: T::zero(),
            omega: T::zero(),
            joint_pos: vec![T::zero(); joints],
            joint_cmd: vec![T::zero(); joints],
            base_cmd_at: None,
            joint_cmd_at: None,
            limits: PlantLimits::default(),
        }
    }

    /// Writes a base command, clamped to the limits.
    pub fn command_base(&mut self, v: T, omega: T, at: Millis) {
        let l = self.limits;
        self.v = v.max(-l.max_speed).min(l.max_speed);
        self.omega = omega.max(-l.max_turn_rate).min(l.max_turn_rate);
        self.base_cmd_at = Some(at);
    }

    pub fn command_joints(&mut self, cmd: &[T], at: Millis) {
        let lim = self.limits.max_joint_speed;
        self.joint_cmd = cmd.iter().map(|c| c.max(-lim).min(lim)).collect();
        self.joint_cmd_at = Some(at);
    }

    pub fn speed(&self) -> T {
        self.v.abs()
    }
}

fn stale(at: Option<Millis>, now: Millis) -> bool {
    at.is_some_and(|at| now.saturating_sub(at) >= COMMAND_WATCHDOG)
}

/// Advances the plant by `dt`. Heading for the translation is taken at the
/// middle of the step, which keeps coarse steps on the true arc.
pub fn step_plant<T: Real>(state: &PlantState<T>, dt: Millis) -> PlantState<T> {
    assert!(dt > Millis::ZERO, "step_plant needs dt > 0");
    let mut s = state.clone();
    if stale(s.base_cmd_at, s.t) {
        s.v = T::zero();
        s.omega = T::zero();
        s.base_cmd_at = None;
    }
    if stale(s.joint_cmd_at, s.t) {
        s.joint_cmd.iter_mut().for_each(|c| *c = T::zero());
        s.joint_cmd_at = None;
    }
    let h = T::lit(dt.as_secs_f64());
    let mid = s.theta + s.omega * h / T::lit(2.0);
    s.x += s.v * mid.cos() * h;
    s.y += s.v * mid.sin() * h;
    s.theta = wrap_angle(s.theta + s.omega * h);
    for (q, c) in s.joint_pos.iter_mut().zip(&s.joint_cmd) {
        *q += *c * h;
    }
    s.t += dt;
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn moving(v: f64, omega: f64) -> PlantState<f64> {
        let mut s = PlantState::new(0);
        s.v = v;
        s.omega = omega;
        s
    }

    #[test]
    fn zero_command_keeps_pose() {
        let s = PlantState::<f64>::new(2);
        let n = step_plant(&s, Millis(777));
        assert_eq!((n.x, n.y, n.theta), (0.0, 0.0, 0.0));
        assert_eq!(n.joint_pos, vec![0.0, 0.0]);
    }

    #[test]
    fn straight_line_one_second() {
        let n = step_plant(&moving(1.0, 0.0), Millis(1000));
        assert_abs_diff_eq!(n.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n.y, 0.0, epsilon = 1e-12);
    }

    fn run<T: Real>(mut s: PlantState<T>, dt: u64, steps: usize) -> PlantState<T> {
        for _ in 0..steps {
            s = step_plant(&s, Millis(dt));
        }
        s
    }

    #[test]
    fn coarse_and_fine_arcs_agree() {
        let coarse = run(moving(1.0, 1.0), 100, 10);
        let fine = run(moving(1.0, 1.0), 1, 1000);
        let err = ((coarse.x - fine.x).powi(2) + (coarse.y - fine.y).powi(2)).sqrt();
        assert!(err < 0.02, "{err}");
        // closed form of the unit arc after 1 s
        assert_abs_diff_eq!(fine.x, 1f64.sin(), epsilon = 1e-3);
        assert_abs_diff_eq!(fine.y, 1.0 - 1f64.cos(), epsilon = 1e-3);
    }

    #[test]
    fn f32_plant_tracks_f64() {
        let mut s32 = PlantState::<f32>::new(0);
        s32.v = 0.5;
        s32.omega = 0.3;
        let a = run(s32, 10, 500);
        let b = run(moving(0.5, 0.3), 10, 500);
        assert!((a.x as f64 - b.x).abs() < 1e-3);
    }

    #[test]
    fn watchdog_zeroes_stale_commands() {
        let mut s = PlantState::<f64>::new(1);
        s.command_base(0.5, 0.0, Millis(0));
        s.command_joints(&[2.0], Millis(0));
        assert_eq!(s.joint_cmd, vec![1.0]);
        let s = run(s, 10, 30);
        // moved during [0, 200) only
        assert_abs_diff_eq!(s.x, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(s.joint_pos[0], 0.2, epsilon = 1e-12);
        assert_eq!(s.v, 0.0);
    }

    #[test]
    fn commands_are_clamped() {
        let mut s = PlantState::<f64>::new(0);
        s.command_base(3.0, -9.0, Millis(0));
        assert_eq!((s.v, s.omega), (1.0, -1.5));
    }
}
