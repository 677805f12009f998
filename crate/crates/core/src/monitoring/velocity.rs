use crate::num::Real;
use crate::time::Millis;

/// Samples used by the least-squares fit.
pub const FIT_SAMPLES: usize = 5;
/// Minimum time span of the fitted samples.
pub const MIN_FIT_SPAN: Millis = Millis(200);

fn centered<T: Real>(times: &[Millis]) -> (Vec<T>, T) {
    let ts: Vec<T> = times.iter().map(|t| T::lit(t.as_secs_f64())).collect();
    let mean = ts.iter().fold(T::zero(), |a, b| a + *b) / T::from_count(ts.len() as u64);
    let d: Vec<T> = ts.iter().map(|t| *t - mean).collect();
    let s = d.iter().fold(T::zero(), |a, b| a + *b * *b);
    (d, s)
}

/// Least-squares slope of `values` against `times` (seconds).
pub fn ls_slope<T: Real>(times: &[Millis], values: &[T]) -> T {
    let (d, s) = centered::<T>(times);
    d.iter().zip(values).fold(T::zero(), |a, (di, v)| a + *di * *v) / s
}

/// Fitted planar speed from the trailing [`FIT_SAMPLES`] poses `(t, x, y)`.
/// `None` (abstain) with fewer than two samples or a span under 200 ms.
pub fn estimate_observed_velocity<T: Real>(poses: &[(Millis, T, T)]) -> Option<T> {
    let tail = &poses[poses.len().saturating_sub(FIT_SAMPLES)..];
    if tail.len() < 2 || tail[tail.len() - 1].0 - tail[0].0 < MIN_FIT_SPAN {
        return None;
    }
    let times: Vec<Millis> = tail.iter().map(|p| p.0).collect();
    let xs: Vec<T> = tail.iter().map(|p| p.1).collect();
    let ys: Vec<T> = tail.iter().map(|p| p.2).collect();
    let (vx, vy) = (ls_slope(&times, &xs), ls_slope(&times, &ys));
    Some((vx * vx + vy * vy).sqrt())
}

/// The speed the fit would report if the base had moved at exactly
/// `speeds[k]` between `times[k]` and `times[k+1]`: a weighted mean of the
/// commanded speeds with the least-squares interval weights. Comparing
/// against this instead of the latest command removes the estimator lag.
pub fn matched_command_speed<T: Real>(times: &[Millis], speeds: &[T]) -> T {
    let (d, s) = centered::<T>(times);
    let mut acc = T::zero();
    for k in 0..times.len().saturating_sub(1) {
        let w: T = d[k + 1..].iter().fold(T::zero(), |a, b| a + *b);
        let dt = T::lit((times[k + 1] - times[k]).as_secs_f64());
        acc += speeds[k] * dt * w;
    }
    acc / s
}
