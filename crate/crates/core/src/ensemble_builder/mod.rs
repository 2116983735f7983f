//! Building a statistical ensemble out of one long, statistically periodic
//! series by cutting it into day-like runs.

mod boundary;
mod periodicity;
mod profile;
mod synthetic;

use serde::{Deserialize, Serialize};

pub use boundary::{boundary_correlation_check, BoundaryReport, LagCorrelation};
pub use periodicity::{detect_periodicity, PeriodicityReport, HARMONIC_TOLERANCE, NULL_QUANTILE, NULL_REPLICATES};
pub use profile::{intraday_profile, IntradayProfile};
pub use synthetic::{homogeneous_series, two_regime_series};

use crate::error::{Error, Result};
use crate::process_sim::{Path, PathEnsemble, SeedTag, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Level,
    Price,
}

/// A single historic series on strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongSeries {
    pub timestamps: Vec<f64>,
    pub values: Vec<f64>,
    pub value_kind: ValueKind,
}

impl LongSeries {
    pub fn new(timestamps: Vec<f64>, values: Vec<f64>, value_kind: ValueKind) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::rejected(format!(
                "{} timestamps but {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if let Some(i) = timestamps.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::rejected(format!(
                "timestamps must be strictly increasing (index {})",
                i + 1
            )));
        }
        if let Some(i) = values.iter().chain(&timestamps).position(|v| !v.is_finite()) {
            return Err(Error::rejected(format!("non-finite entry at position {i}")));
        }
        if value_kind == ValueKind::Price {
            if let Some(i) = values.iter().position(|&p| p <= 0.0) {
                return Err(Error::rejected(format!(
                    "price at index {i} is {} but prices must be > 0",
                    values[i]
                )));
            }
        }
        Ok(LongSeries {
            timestamps,
            values,
            value_kind,
        })
    }

    /// Unit-step series `t = 0, 1, 2, …`.
    pub fn from_values(values: Vec<f64>, value_kind: ValueKind) -> Result<Self> {
        let ts = (0..values.len()).map(|i| i as f64).collect();
        LongSeries::new(ts, values, value_kind)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The common sample spacing; irregular series are refused.
    pub fn uniform_step(&self) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::insufficient("a series needs at least two samples"));
        }
        let span = self.timestamps[self.len() - 1] - self.timestamps[0];
        let dt = span / (self.len() - 1) as f64;
        let tol = 1e-9 * dt.max(1.0);
        for (i, w) in self.timestamps.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > tol * 1e3 {
                return Err(Error::rejected(format!(
                    "irregular timestamps at index {}: regularize the series onto a uniform grid first",
                    i + 1
                )));
            }
        }
        Ok(dt)
    }
}

/// Log returns `ln(p(t + lag) / p(t))`, stamped at the later time.
pub fn to_returns(series: &LongSeries, lag: usize) -> Result<LongSeries> {
    if series.value_kind != ValueKind::Price {
        return Err(Error::rejected("log returns need a price series"));
    }
    if let Some(i) = series.values.iter().position(|&p| p <= 0.0) {
        return Err(Error::rejected(format!("nonpositive price at index {i}")));
    }
    if lag == 0 || lag >= series.len() {
        return Err(Error::rejected(format!(
            "return lag {lag} must lie in [1, {})",
            series.len()
        )));
    }
    let values = series
        .values
        .iter()
        .zip(&series.values[lag..])
        .map(|(p0, p1)| (p1 / p0).ln())
        .collect();
    LongSeries::new(series.timestamps[lag..].to_vec(), values, ValueKind::Level)
}

/// Reshapes the series into `⌊(n − phase0) / period⌋` runs of `period`
/// samples, each rebased to start at zero. The trailing partial run is
/// dropped.
pub fn segment_series(series: &LongSeries, period: usize, phase0: usize) -> Result<PathEnsemble> {
    if period < 2 {
        return Err(Error::rejected(format!("period must be >= 2 samples, got {period}")));
    }
    if phase0 >= period {
        return Err(Error::rejected(format!(
            "phase0 {phase0} must lie in [0, {period})"
        )));
    }
    if 2 * period > series.len() {
        return Err(Error::insufficient(format!(
            "period {period} is longer than half the series ({} samples)",
            series.len()
        )));
    }
    let dt = series.uniform_step()?;
    let count = (series.len() - phase0) / period;
    if count < 2 {
        return Err(Error::insufficient(format!(
            "only {count} complete segment(s) of {period} samples after phase {phase0}"
        )));
    }
    let grid = TimeGrid::new(0.0, dt, period - 1)?;
    let paths = (0..count)
        .map(|index| {
            let start = phase0 + index * period;
            let base = series.values[start];
            let values = series.values[start..start + period].iter().map(|v| v - base).collect();
            Path::new(grid, values, SeedTag::Segment { index, start, base })
        })
        .collect::<Result<Vec<_>>>()?;
    PathEnsemble::new(grid, paths)
}

/// Undoes the rebase: `(sample index, value)` for every covered sample.
pub fn flatten_segments(ensemble: &PathEnsemble) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::with_capacity(ensemble.n_paths() * ensemble.grid.n_points());
    for (i, p) in ensemble.paths.iter().enumerate() {
        let SeedTag::Segment { start, base, .. } = p.seed_tag else {
            return Err(Error::rejected(format!("path {i} was not cut from a series")));
        };
        out.extend(p.values.iter().enumerate().map(|(k, v)| (start + k, v + base)));
    }
    Ok(out)
}
