use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::profile::{intraday_profile, IntradayProfile};
use super::{segment_series, LongSeries};
use crate::error::{Error, Result};
use crate::process_sim::stream_rng;
use crate::stats;

pub const NULL_REPLICATES: usize = 99;
pub const NULL_QUANTILE: f64 = 0.95;
/// Candidates scoring within this fraction of the best significant score
/// count as tied; the shortest of them wins.
pub const HARMONIC_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityReport {
    pub candidate_periods: Vec<usize>,
    pub scores: Vec<f64>,
    /// `NULL_QUANTILE` of the best candidate score under phase scrambling.
    pub null_threshold: f64,
    pub null_replicates: usize,
    pub lag_samples: usize,
    pub seed: u64,
    pub best_period: Option<usize>,
    pub profile: Option<IntradayProfile>,
}

/// Squared lag-`lag` increments at each phase of each period-`p` segment.
fn segment_profiles(values: &[f64], p: usize, lag: usize) -> Vec<Vec<f64>> {
    (0..values.len() / p)
        .map(|s| {
            let seg = &values[s * p..(s + 1) * p];
            seg.iter().zip(&seg[lag..]).map(|(a, b)| (b - a) * (b - a)).collect()
        })
        .collect()
}

/// Correlation between the mean profile of even and of odd segments, each
/// segment optionally rotated by its own shift. Clamped to `[0, 1]`.
fn split_half_score(profiles: &[Vec<f64>], shifts: Option<&[usize]>) -> f64 {
    let len = profiles[0].len();
    let mut halves = [vec![0.0; len], vec![0.0; len]];
    for (s, prof) in profiles.iter().enumerate() {
        let shift = shifts.map_or(0, |sh| sh[s]);
        let acc = &mut halves[s % 2];
        for (k, v) in prof.iter().enumerate() {
            acc[(k + shift) % len] += v;
        }
    }
    stats::pearson(&halves[0], &halves[1]).clamp(0.0, 1.0)
}

/// Scores each candidate period by how reproducible its per-phase MSF profile
/// is across segments and accepts the best one only if it beats a null built
/// by rotating every segment's profile independently.
pub fn detect_periodicity(
    series: &LongSeries,
    candidates: &[usize],
    lag: usize,
    seed: u64,
) -> Result<PeriodicityReport> {
    if candidates.is_empty() {
        return Err(Error::rejected("no candidate periods given"));
    }
    if lag == 0 {
        return Err(Error::rejected("lag must be at least one sample"));
    }
    let dt = series.uniform_step()?;
    let n = series.len();
    for &p in candidates {
        if p < lag + 2 {
            return Err(Error::rejected(format!(
                "candidate period {p} is too short for lag {lag}"
            )));
        }
        if 4 * p > n {
            return Err(Error::rejected(format!(
                "candidate period {p} exceeds a quarter of the series length {n}"
            )));
        }
    }

    let all_profiles: Vec<Vec<Vec<f64>>> = candidates
        .par_iter()
        .map(|&p| segment_profiles(&series.values, p, lag))
        .collect();
    let scores: Vec<f64> = all_profiles.par_iter().map(|pr| split_half_score(pr, None)).collect();

    let mut null_max: Vec<f64> = (0..NULL_REPLICATES as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(seed, rep);
            all_profiles
                .iter()
                .map(|pr| {
                    let len = pr[0].len();
                    let shifts: Vec<usize> = (0..pr.len()).map(|_| rng.random_range(0..len)).collect();
                    split_half_score(pr, Some(&shifts))
                })
                .fold(0.0, f64::max)
        })
        .collect();
    null_max.sort_by(f64::total_cmp);
    let null_threshold = stats::quantile_sorted(&null_max, NULL_QUANTILE);

    let significant: Vec<(usize, f64)> = candidates
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s > null_threshold)
        .map(|(&p, &s)| (p, s))
        .collect();
    let best_period = significant
        .iter()
        .map(|&(_, s)| s)
        .reduce(f64::max)
        .and_then(|top| {
            significant
                .iter()
                .filter(|&&(_, s)| s >= top * (1.0 - HARMONIC_TOLERANCE))
                .map(|&(p, _)| p)
                .min()
        });
    let profile = match best_period {
        Some(p) => Some(intraday_profile(&segment_series(series, p, 0)?, lag as f64 * dt)?),
        None => None,
    };

    Ok(PeriodicityReport {
        candidate_periods: candidates.to_vec(),
        scores,
        null_threshold,
        null_replicates: NULL_REPLICATES,
        lag_samples: lag,
        seed,
        best_period,
        profile,
    })
}
