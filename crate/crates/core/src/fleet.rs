//! Fleet-scale sizing of a shared fallback pool: expected failures, the
//! number of failure placements, overflow probability and CPU overhead.

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::num::Real;

/// Monte Carlo work is split into this many seeded substreams, independent
/// of the thread count, so results do not depend on the machine.
pub const MC_PARTITIONS: u64 = 16;

/// Failures expected across the fleet within one interval.
pub fn expected_failures<T: Real>(fleet_size: u64, rate_per_hour: T, interval_s: T) -> T {
    T::from_count(fleet_size) * rate_per_hour * (interval_s / T::lit(3600.0))
}

/// Ways to place `x` indistinguishable failures on `n` time steps:
/// C(n + x − 1, n − 1).
pub fn placement_count(n: u64, x: u64) -> BigUint {
    assert!(n >= 1, "placement_count needs at least one time step");
    // C(n−1+x, x) = Π_{i=1..x} (n−1+i)/i; every prefix product is itself a
    // binomial coefficient, so each division is exact
    let mut c = BigUint::one();
    for i in 1..=x {
        c *= BigUint::from(n - 1 + i);
        c /= BigUint::from(i);
    }
    c
}

/// P(Binomial(x, window/interval) > fallbacks): the chance that one fixed
/// window of the interval receives more failures than there are fallbacks,
/// with the `x` failures uniform over the interval.
pub fn overflow_probability_analytic<T: Real>(x: u64, fallbacks: u64, window: T, interval: T) -> T {
    assert!(window >= T::zero() && window <= interval, "window must lie within the interval");
    if fallbacks >= x {
        return T::zero();
    }
    let p = window / interval;
    if p == T::zero() {
        return T::zero();
    }
    if p == T::one() {
        return T::one();
    }
    // log-space pmf recurrence keeps large x finite
    let (lp, lq) = (p.ln(), (T::one() - p).ln());
    let mut log_pmf = T::from_count(x) * lq;
    let mut tail = T::zero();
    for k in 0..=x {
        if k > fallbacks {
            tail += log_pmf.exp();
        }
        if k < x {
            log_pmf += T::from_count(x - k).ln() - T::from_count(k + 1).ln() + lp - lq;
        }
    }
    tail.min(T::one())
}

/// Where the Monte Carlo sampler looks for an overflow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowModel {
    /// Any window of the given length, anchored at a failure.
    Scan,
    /// The single window at the start of the interval.
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate<T> {
    pub estimate: T,
    pub stderr: T,
    pub hits: u64,
    pub trials: u64,
}

/// Monte Carlo overflow probability with `x` uniform failure times per trial.
/// Deterministic for a given seed.
pub fn overflow_probability_mc<T: Real>(
    x: u64,
    fallbacks: u64,
    window: T,
    interval: T,
    trials: u64,
    seed: u64,
    model: WindowModel,
) -> McEstimate<T> {
    assert!(trials > 0, "at least one trial");
    let hits: u64 = (0..MC_PARTITIONS)
        .into_par_iter()
        .map(|part| {
            let n = trials / MC_PARTITIONS + u64::from(part < trials % MC_PARTITIONS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(part);
            let mut times = vec![T::zero(); x as usize];
            (0..n).filter(|_| trial(&mut rng, &mut times, fallbacks, window, interval, model)).count() as u64
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let est = T::from_count(hits) / T::from_count(trials);
    McEstimate {
        estimate: est,
        stderr: (est * (T::one() - est) / T::from_count(trials)).sqrt(),
        hits,
        trials,
    }
}

fn trial<T: Real>(rng: &mut ChaCha8Rng, times: &mut [T], fallbacks: u64, window: T, interval: T, model: WindowModel) -> bool {
    let f = fallbacks as usize;
    if f >= times.len() {
        return false;
    }
    for t in times.iter_mut() {
        *t = T::lit(rng.random::<f64>()) * interval;
    }
    match model {
        WindowModel::Fixed => times.iter().filter(|t| **t < window).count() > f,
        WindowModel::Scan => {
            times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
            times.windows(f + 1).any(|w| w[f] - w[0] <= window)
        }
    }
}

/// Extra CPU of `fallbacks` standby instances relative to a fleet running one
/// main instance per robot, in percent.
pub fn overhead_percent<T: Real>(fleet_size: u64, main_mcpu: T, fallbacks: u64, fallback_mcpu: T) -> T {
    if fallbacks == 0 {
        return T::zero();
    }
    T::lit(100.0) * T::from_count(fallbacks) * fallback_mcpu / (T::from_count(fleet_size) * main_mcpu)
}

/// One shadow-executing standby per robot at the main instance's cost.
pub fn shadow_per_robot_overhead<T: Real>(fleet_size: u64, main_mcpu: T) -> T {
    overhead_percent(fleet_size, main_mcpu, fleet_size, main_mcpu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn expected_failures_examples() {
        assert_abs_diff_eq!(expected_failures(1000, 1.0, 30.0), 8.3333333, epsilon = 1e-6);
        assert_eq!(expected_failures(1000, 0.0, 30.0), 0.0);
        assert_abs_diff_eq!(expected_failures(1, 1.0f32, 3600.0), 1.0);
    }

    #[test]
    fn placement_small_cases() {
        assert_eq!(placement_count(2, 1), BigUint::from(2u32));
        assert_eq!(placement_count(3, 2), BigUint::from(6u32));
        assert_eq!(placement_count(5, 0), BigUint::one());
    }

    #[test]
    fn analytic_degenerate_cases() {
        assert_eq!(overflow_probability_analytic(8, 8, 6.0, 30.0), 0.0);
        assert_eq!(overflow_probability_analytic(3, 0, 30.0, 30.0), 1.0);
        assert_eq!(overflow_probability_analytic(3, 0, 0.0, 30.0), 0.0);
    }

    #[test]
    fn overhead_examples() {
        assert_abs_diff_eq!(overhead_percent(1000, 1000.0, 4, 600.0), 0.24, epsilon = 1e-12);
        assert_abs_diff_eq!(overhead_percent(1000, 1000.0, 4, 1000.0), 0.4, epsilon = 1e-12);
        assert_eq!(overhead_percent(1000, 1000.0, 0, 600.0), 0.0);
        assert_eq!(shadow_per_robot_overhead(1000, 1000.0), 100.0);
    }

    #[test]
    fn mc_is_deterministic_and_zero_when_pool_suffices() {
        let a = overflow_probability_mc(8, 4, 6.0, 30.0, 20_000, 7, WindowModel::Scan);
        let b = overflow_probability_mc(8, 4, 6.0, 30.0, 20_000, 7, WindowModel::Scan);
        assert_eq!(a, b);
        let z = overflow_probability_mc(4, 4, 6.0f64, 30.0, 20_000, 7, WindowModel::Scan);
        assert_eq!(z.hits, 0);
    }
}
