use std::collections::VecDeque;

use super::FrequencyMonitorSpec;
use crate::bt::{BtNode, TickStatus};
use crate::time::Millis;

/// Messages received in the half-open window (now − window, now].
pub fn count_in_window(times: &[Millis], now: Millis, window: Millis) -> usize {
    times.iter().filter(|t| **t <= now && now.saturating_sub(**t) < window).count()
}

/// Condition leaf for a topic-rate monitor; ticked as `monitor(<id>)`.
pub fn frequency_condition(spec: &FrequencyMonitorSpec) -> BtNode {
    BtNode::condition(spec.id.clone(), format!("monitor({})", spec.id))
}

/// Sliding-window message counter for one topic.
#[derive(Clone, Debug)]
pub struct FrequencyMonitor {
    pub spec: FrequencyMonitorSpec,
    times: VecDeque<Millis>,
    quiet_until: Millis,
}

impl FrequencyMonitor {
    pub fn new(spec: FrequencyMonitorSpec) -> Self {
        let quiet_until = spec.window;
        FrequencyMonitor { spec, times: VecDeque::new(), quiet_until }
    }

    pub fn observe(&mut self, t: Millis) {
        self.times.push_back(t);
    }

    /// Abstain (report Success) until one full window after `t`, e.g. after
    /// the publisher was (re)activated.
    pub fn rearm(&mut self, t: Millis) {
        self.quiet_until = t + self.spec.window;
    }

    pub fn count(&self, now: Millis) -> usize {
        self.times.iter().filter(|t| **t <= now && now.saturating_sub(**t) < self.spec.window).count()
    }

    pub fn evaluate(&mut self, now: Millis) -> TickStatus {
        while self.times.front().is_some_and(|t| now.saturating_sub(*t) >= self.spec.window) {
            self.times.pop_front();
        }
        if now < self.quiet_until {
            return TickStatus::Success;
        }
        TickStatus::from_bool(self.count(now) >= self.spec.required_count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monitor(rate: f64) -> FrequencyMonitor {
        FrequencyMonitor::new(FrequencyMonitorSpec::new("m", "cmd_vel", rate))
    }

    #[test]
    fn healthy_ten_hz_stream() {
        let mut m = monitor(10.0);
        for t in (0..=2000).step_by(100) {
            m.observe(Millis(t));
        }
        assert_eq!(m.count(Millis(2000)), 5);
        assert_eq!(m.evaluate(Millis(2000)), TickStatus::Success);
    }

    fn first_failure_after_silence(rate: f64) -> u64 {
        let mut m = monitor(rate);
        for t in (0..=20000).step_by(100) {
            m.observe(Millis(t));
        }
        (20000..22000).step_by(100).find(|t| m.evaluate(Millis(*t)) == TickStatus::Failure).unwrap()
    }

    #[test]
    fn silence_is_detected_one_window_later() {
        // one message per window required: "the stream is interrupted"
        let t = first_failure_after_silence(2.0);
        assert!((20500..=20600).contains(&t), "{t}");
        // requiring the nominal rate trips on the first missing message
        assert_eq!(first_failure_after_silence(10.0), 20100);
    }

    #[test]
    fn nine_hz_fails_a_ten_hz_requirement_within_one_window() {
        let mut m = monitor(10.0);
        // 9 Hz: period 111 ms; a 500 ms window sees 4 or 5 messages
        let times: Vec<Millis> = (0..200).map(|i| Millis(i * 1000 / 9)).collect();
        for t in &times {
            m.observe(*t);
        }
        let fails: Vec<u64> = (1000..3000)
            .step_by(100)
            .filter(|t| count_in_window(&times, Millis(*t), Millis(500)) < 5)
            .collect();
        assert!(!fails.is_empty());
        // a deficit shows up at least once per second
        assert!(fails.windows(2).all(|w| w[1] - w[0] <= 1000));
        for t in fails {
            assert_eq!(m.evaluate(Millis(t)), TickStatus::Failure);
        }
    }
}
