use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance when snapping a requested time or lag onto the grid.
const GRID_SNAP_TOL: f64 = 1e-9;

/// Uniform strobe grid `t0 + k·dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        let grid = TimeGrid { t0, dt, n_steps };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t0.is_finite() {
            return Err(Error::rejected(format!("grid t0 must be finite, got {}", self.t0)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::rejected(format!("grid dt must be > 0, got {}", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(Error::rejected("grid n_steps must be >= 1"));
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.n_steps)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|k| self.time(k))
    }

    /// Number of grid steps spanned by `span`, which must be a non-negative
    /// integer multiple of `dt`.
    pub fn steps(&self, span: f64) -> Result<usize> {
        if !span.is_finite() || span < 0.0 {
            return Err(Error::rejected(format!("span {span} must be finite and >= 0")));
        }
        let k = (span / self.dt).round();
        if (k * self.dt - span).abs() > GRID_SNAP_TOL * self.dt.max(span.abs()) {
            return Err(Error::rejected(format!(
                "span {span} is not an integer multiple of dt = {}",
                self.dt
            )));
        }
        Ok(k as usize)
    }

    /// Like [`TimeGrid::steps`] but rejects zero.
    pub fn lag_steps(&self, lag: f64) -> Result<usize> {
        let k = self.steps(lag)?;
        if k == 0 {
            return Err(Error::rejected(format!("lag {lag} must be > 0")));
        }
        Ok(k)
    }

    /// Grid index of time `t`; off-grid or out-of-range times are rejected.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = self
            .steps(t - self.t0)
            .map_err(|_| Error::rejected(format!("time {t} is not on the grid (t0 = {}, dt = {})", self.t0, self.dt)))?;
        if k > self.n_steps {
            return Err(Error::rejected(format!(
                "time {t} lies beyond the grid end {}",
                self.end()
            )));
        }
        Ok(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(0.0, 0.0, 5).is_err());
        assert!(TimeGrid::new(0.0, -1.0, 5).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        assert!(TimeGrid::new(f64::NAN, 1.0, 2).is_err());
    }

    #[test]
    fn snaps_times_and_lags() {
        let g = TimeGrid::new(0.0, 0.1, 100).unwrap();
        assert_eq!(g.index_of(0.3).unwrap(), 3);
        assert_eq!(g.lag_steps(2.5).unwrap(), 25);
        assert!(g.index_of(0.35).is_err());
        assert!(g.index_of(10.1).is_err());
        assert!(g.lag_steps(0.0).is_err());
        assert_eq!(g.n_points(), 101);
        assert!((g.end() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn times_are_strictly_increasing() {
        let g = TimeGrid::new(-1.0, 0.25, 8).unwrap();
        let ts: Vec<f64> = g.times().collect();
        assert_eq!(ts.len(), 9);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }
}
