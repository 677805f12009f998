use std::collections::VecDeque;

use super::velocity::{estimate_observed_velocity, matched_command_speed, FIT_SAMPLES};
use super::SupervisionSpec;
use crate::bt::{BtNode, TickStatus};
use crate::time::Millis;
use crate::workload::COMMAND_WATCHDOG;

/// Condition leaf for an external-supervision monitor; ticked as `monitor(<id>)`.
pub fn supervision_condition(spec: &SupervisionSpec) -> BtNode {
    BtNode::condition(spec.id.clone(), format!("monitor({})", spec.id))
}

/// One evaluation of the supervision monitor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupervisionReading {
    pub commanded: f64,
    pub observed: f64,
}

impl SupervisionReading {
    pub fn discrepancy(&self) -> f64 {
        (self.commanded - self.observed).abs()
    }
}

/// Compares the speed commanded on the command topic with the speed seen by
/// an external pose sensor.
#[derive(Clone, Debug)]
pub struct SupervisionMonitor {
    pub spec: SupervisionSpec,
    poses: VecDeque<(Millis, f64, f64)>,
    commands: VecDeque<(Millis, f64)>,
    exceeded_since: Option<Millis>,
}

impl SupervisionMonitor {
    pub fn new(spec: SupervisionSpec) -> Self {
        SupervisionMonitor { spec, poses: VecDeque::new(), commands: VecDeque::new(), exceeded_since: None }
    }

    pub fn observe_pose(&mut self, t: Millis, x: f64, y: f64) {
        self.poses.push_back((t, x, y));
        while self.poses.len() > FIT_SAMPLES {
            self.poses.pop_front();
        }
    }

    pub fn observe_command(&mut self, t: Millis, speed: f64) {
        self.commands.push_back((t, speed.abs()));
    }

    /// Forget the discrepancy history, e.g. while the workload is recovering.
    pub fn reset(&mut self) {
        self.exceeded_since = None;
    }

    /// Speed of the command in force at `t`; stale commands count as zero,
    /// like the actuator watchdog.
    fn commanded_at(&self, t: Millis) -> f64 {
        self.commands
            .iter()
            .rev()
            .find(|(ct, _)| *ct <= t)
            .filter(|(ct, _)| t - *ct < COMMAND_WATCHDOG)
            .map_or(0.0, |(_, s)| *s)
    }

    pub fn reading(&self) -> Option<SupervisionReading> {
        let poses: Vec<_> = self.poses.iter().copied().collect();
        let observed = estimate_observed_velocity(&poses)?;
        let times: Vec<Millis> = poses.iter().map(|p| p.0).collect();
        let speeds: Vec<f64> = times.iter().map(|t| self.commanded_at(*t)).collect();
        Some(SupervisionReading { commanded: matched_command_speed(&times, &speeds), observed })
    }

    pub fn evaluate(&mut self, now: Millis) -> (TickStatus, Option<SupervisionReading>) {
        if let Some(oldest) = self.poses.front().map(|p| p.0) {
            // keep the command in force at the oldest pose
            while self.commands.len() > 1 && self.commands[1].0 <= oldest {
                self.commands.pop_front();
            }
        }
        let Some(r) = self.reading() else {
            self.exceeded_since = None;
            return (TickStatus::Success, None);
        };
        if r.discrepancy() <= self.spec.speed_tolerance {
            self.exceeded_since = None;
            return (TickStatus::Success, Some(r));
        }
        let since = *self.exceeded_since.get_or_insert(now);
        (TickStatus::from_bool(now - since < self.spec.sustain), Some(r))
    }
}
