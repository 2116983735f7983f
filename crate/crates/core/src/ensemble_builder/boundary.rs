use serde::{Deserialize, Serialize};

use super::LongSeries;
use crate::error::{Error, Result};
use crate::process_sim::{PathEnsemble, SeedTag};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagCorrelation {
    pub lag: usize,
    pub correlation: f64,
    pub std_error: f64,
}

/// Cross-run dependence left over after cutting a series into runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub period: usize,
    pub n_segments: usize,
    /// Correlation of each run's first return with the previous run's last.
    pub boundary_correlation: f64,
    pub boundary_std_error: f64,
    /// Correlation of the raw levels on either side of each cut.
    pub level_correlation: f64,
    /// Correlation of run `n`'s rebased value at phase `L` with the last
    /// return of run `n − 1`, for `L = 1..=period/4`.
    pub decay: Vec<LagCorrelation>,
    pub note: String,
}

impl BoundaryReport {
    pub fn boundary_z(&self) -> f64 {
        if self.boundary_std_error > 0.0 {
            self.boundary_correlation / self.boundary_std_error
        } else {
            0.0
        }
    }
}

fn corr_with_error(a: &[f64], b: &[f64]) -> (f64, f64) {
    let r = stats::pearson(a, b);
    (r, (1.0 - r * r) / ((a.len() - 1) as f64).sqrt())
}

pub fn boundary_correlation_check(ensemble: &PathEnsemble, original: &LongSeries) -> Result<BoundaryReport> {
    let n = ensemble.n_paths();
    if n < 3 {
        return Err(Error::insufficient("the boundary check needs at least 3 segments"));
    }
    let period = ensemble.grid.n_points();
    let mut starts = Vec::with_capacity(n);
    for (i, p) in ensemble.paths.iter().enumerate() {
        let SeedTag::Segment { start, base, .. } = p.seed_tag else {
            return Err(Error::rejected(format!("path {i} was not cut from a series")));
        };
        let orig = original
            .values
            .get(start..start + period)
            .ok_or_else(|| Error::rejected(format!("segment {i} runs past the end of the series")))?;
        if orig.iter().zip(&p.values).any(|(o, v)| o - base != *v) {
            return Err(Error::rejected(format!("segment {i} does not match the series at sample {start}")));
        }
        starts.push(start);
    }

    let last_return: Vec<f64> = ensemble.paths[..n - 1]
        .iter()
        .map(|p| p.values[period - 1] - p.values[period - 2])
        .collect();
    let first_return: Vec<f64> = ensemble.paths[1..].iter().map(|p| p.values[1] - p.values[0]).collect();
    let (boundary_correlation, boundary_std_error) = corr_with_error(&first_return, &last_return);

    let level_before: Vec<f64> = starts[..n - 1].iter().map(|s| original.values[s + period - 1]).collect();
    let level_after: Vec<f64> = starts[1..].iter().map(|&s| original.values[s]).collect();
    let level_correlation = stats::pearson(&level_before, &level_after);

    let decay = (1..=(period / 4).min(period - 1))
        .map(|lag| {
            let x: Vec<f64> = ensemble.paths[1..].iter().map(|p| p.values[lag]).collect();
            let (correlation, std_error) = corr_with_error(&x, &last_return);
            LagCorrelation {
                lag,
                correlation,
                std_error,
            }
        })
        .collect();

    Ok(BoundaryReport {
        period,
        n_segments: n,
        boundary_correlation,
        boundary_std_error,
        level_correlation,
        decay,
        note: "correlation proxy for cross-run dependence; it does not show that cross-run transition densities vanish"
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble_builder::{homogeneous_series, segment_series, ValueKind};
    use crate::process_sim::{simulate_ensemble, simulate_path, ProcessSpec, TimeGrid};

    #[test]
    fn independent_runs_show_no_boundary_correlation() {
        let g = TimeGrid::new(0.0, 1.0, 31).unwrap();
        let ens = simulate_ensemble(&ProcessSpec::wiener(1.0), &g, 500, 21, 1).unwrap();
        let mut values = Vec::new();
        for p in &ens.paths {
            let offset = 10.0 * p.values[31];
            values.extend(p.values.iter().map(|v| v + offset));
        }
        let s = LongSeries::from_values(values, ValueKind::Level).unwrap();
        let seg = segment_series(&s, 32, 0).unwrap();
        let r = boundary_correlation_check(&seg, &s).unwrap();
        assert!(r.boundary_z().abs() < 4.0, "{r:?}");
    }

    #[test]
    fn contiguous_wiener_levels_correlate_but_increments_do_not() {
        let s = homogeneous_series(500, 32, 22);
        let seg = segment_series(&s, 32, 0).unwrap();
        let r = boundary_correlation_check(&seg, &s).unwrap();
        assert!(r.level_correlation > 0.9);
        assert!(r.boundary_z().abs() < 4.0);
        assert_eq!(r.decay.len(), 8);
        for d in &r.decay {
            assert!((d.correlation / d.std_error).abs() < 4.0, "{d:?}");
        }
    }

    #[test]
    fn contiguous_fbm_has_positive_boundary_correlation() {
        let g = TimeGrid::new(0.0, 1.0, 16_000 - 1).unwrap();
        let path = simulate_path(&ProcessSpec::fbm(0.75, 1.0), &g, 23, 1).unwrap();
        let s = LongSeries::from_values(path.values, ValueKind::Level).unwrap();
        let seg = segment_series(&s, 16, 0).unwrap();
        let r = boundary_correlation_check(&seg, &s).unwrap();
        // increments two steps apart: ρ(2) = (3^1.5 − 2·2^1.5 + 1)/2 ≈ 0.27
        assert!(r.boundary_z() > 4.0, "{r:?}");
        assert!((r.boundary_correlation - 0.2697).abs() < 4.0 * r.boundary_std_error);
    }

    #[test]
    fn rejects_foreign_or_short_ensembles() {
        let s = homogeneous_series(10, 8, 1);
        let seg = segment_series(&s, 8, 0).unwrap();
        let other = homogeneous_series(10, 8, 2);
        assert!(boundary_correlation_check(&seg, &other).is_err());
        let mut few = seg.clone();
        few.paths.truncate(2);
        assert!(matches!(boundary_correlation_check(&few, &s), Err(Error::InsufficientData(_))));
    }
}
