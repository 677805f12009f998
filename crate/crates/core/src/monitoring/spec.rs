use std::fmt;

use crate::time::Millis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FailureClass {
    TopicSilence,
    BehaviorDiscrepancy,
}

impl FailureClass {
    pub const ALL: [FailureClass; 2] = [FailureClass::TopicSilence, FailureClass::BehaviorDiscrepancy];

    pub fn keyword(self) -> &'static str {
        match self {
            FailureClass::TopicSilence => "topic_silence",
            FailureClass::BehaviorDiscrepancy => "behavior_discrepancy",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

impl fmt::Display for FailureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyMonitorSpec {
    pub id: String,
    pub topic: String,
    pub min_rate: f64,
    pub window: Millis,
}

impl FrequencyMonitorSpec {
    pub fn new(id: impl Into<String>, topic: impl Into<String>, min_rate: f64) -> Self {
        FrequencyMonitorSpec { id: id.into(), topic: topic.into(), min_rate, window: Millis(500) }
    }

    /// Messages required inside one window: floor(min_rate × window).
    pub fn required_count(&self) -> usize {
        (self.min_rate * self.window.as_secs_f64() + 1e-9).floor() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupervisionSpec {
    pub id: String,
    pub commanded_topic: String,
    pub observed_pose_topic: String,
    pub speed_tolerance: f64,
    pub sustain: Millis,
    /// RMS planar position error of the external sensor, metres.
    pub sensor_noise_sigma: f64,
    pub sensor_rate: f64,
}

impl SupervisionSpec {
    pub fn new(id: impl Into<String>, commanded_topic: impl Into<String>, observed_pose_topic: impl Into<String>) -> Self {
        SupervisionSpec {
            id: id.into(),
            commanded_topic: commanded_topic.into(),
            observed_pose_topic: observed_pose_topic.into(),
            speed_tolerance: 0.1,
            sustain: Millis(500),
            sensor_noise_sigma: 0.01,
            sensor_rate: 10.0,
        }
    }
}

/// A failure as seen by the supervisor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailureEvent {
    pub workload: String,
    pub class: FailureClass,
    /// Injection time; equals `t_detected` for a detection with no injection
    /// behind it (flagged `spurious`).
    pub t_failure_actual: Millis,
    pub t_detected: Millis,
    pub spurious: bool,
}

impl FailureEvent {
    pub fn t_detection(&self) -> Millis {
        self.t_detected - self.t_failure_actual
    }
}
