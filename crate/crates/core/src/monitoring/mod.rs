//! Failure detection: topic-frequency monitors and external supervision.

mod conditional;
mod frequency;
mod spec;
mod supervision;
mod velocity;

pub use conditional::conditional_monitor;
pub use frequency::{count_in_window, frequency_condition, FrequencyMonitor};
pub use spec::{FailureClass, FailureEvent, FrequencyMonitorSpec, SupervisionSpec};
pub use supervision::{supervision_condition, SupervisionMonitor, SupervisionReading};
pub use velocity::{estimate_observed_velocity, ls_slope, matched_command_speed, FIT_SAMPLES, MIN_FIT_SPAN};
