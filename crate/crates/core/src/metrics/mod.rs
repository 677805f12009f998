//! Recovery-time decomposition and CPU aggregation, plus their CSV exports.

mod export;

use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::mitigation::RecoveryReport;
use crate::time::Millis;

pub use export::{cpu_csv, cpu_summary_csv, format_tenths, reports_csv, write_exports, ExportError};

/// Exact milliCPU value.
pub type Mcpu = Ratio<u64>;

/// One usage sample of one container.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CpuSample {
    pub container: String,
    pub t: Millis,
    pub usage: u32,
}

/// Arithmetic mean of a sample series; `None` for an empty one.
pub fn mean_cpu(samples: &[u32]) -> Option<Mcpu> {
    if samples.is_empty() {
        return None;
    }
    let sum: u64 = samples.iter().map(|&s| u64::from(s)).sum();
    Some(Ratio::new(sum, samples.len() as u64))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MetricsBundle {
    pub run_id: String,
    pub reports: Vec<RecoveryReport>,
    pub cpu: Vec<CpuSample>,
}

impl MetricsBundle {
    /// Sample series per container, in time order.
    pub fn series(&self) -> BTreeMap<&str, Vec<u32>> {
        let mut out: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
        for s in &self.cpu {
            out.entry(s.container.as_str()).or_default().push(s.usage);
        }
        out
    }

    /// Mean usage per container that has at least one sample.
    pub fn container_means(&self) -> BTreeMap<String, Mcpu> {
        self.series()
            .into_iter()
            .filter_map(|(c, s)| mean_cpu(&s).map(|m| (c.to_string(), m)))
            .collect()
    }

    pub fn container_mean(&self, container: &str) -> Option<Mcpu> {
        let s: Vec<u32> = self.cpu.iter().filter(|s| s.container == container).map(|s| s.usage).collect();
        mean_cpu(&s)
    }

    /// Cluster total: sum of the per-container means.
    pub fn total_cpu(&self) -> Mcpu {
        total_cpu(&self.container_means())
    }
}

pub fn total_cpu(means: &BTreeMap<String, Mcpu>) -> Mcpu {
    means.values().fold(Ratio::from_integer(0), |a, b| a + b)
}
