//! Synthetic level series used by examples, tests and the CLI.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{LongSeries, ValueKind};
use crate::process_sim::stream_rng;

/// Gaussian increments whose variance is `2r/(r+1)` in the first half of
/// every period and `2/(r+1)` in the second half (mean variance 1, ratio `r`).
pub fn two_regime_series(days: usize, period: usize, ratio: f64, seed: u64) -> LongSeries {
    let high = (2.0 * ratio / (ratio + 1.0)).sqrt();
    let low = (2.0 / (ratio + 1.0)).sqrt();
    build(days * period, seed, |k| if k % period < period / 2 { high } else { low })
}

/// Unit-variance Gaussian increments (a sampled Wiener series).
pub fn homogeneous_series(days: usize, period: usize, seed: u64) -> LongSeries {
    build(days * period, seed, |_| 1.0)
}

fn build(n: usize, seed: u64, sd: impl Fn(usize) -> f64) -> LongSeries {
    let mut rng = stream_rng(seed, 0);
    let mut x = 0.0;
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        values.push(x);
        let z: f64 = rng.sample(StandardNormal);
        x += sd(k) * z;
    }
    LongSeries::from_values(values, ValueKind::Level).expect("finite synthetic series")
}
