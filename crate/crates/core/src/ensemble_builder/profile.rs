use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::ensemble_moment;
use crate::process_sim::io::fmt_f64;
use crate::process_sim::PathEnsemble;

/// Per-phase mean square fluctuation across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntradayProfile {
    pub lag: f64,
    pub phases: Vec<f64>,
    pub msf: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_runs: usize,
}

impl IntradayProfile {
    /// CSV with header `phase,msf,std_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,msf,std_error\n");
        for ((p, m), s) in self.phases.iter().zip(&self.msf).zip(&self.std_error) {
            out.push_str(&format!("{},{},{}\n", fmt_f64(*p), fmt_f64(*m), fmt_f64(*s)));
        }
        out
    }

    /// Mean of the profile over phases in `[from, to)`.
    pub fn mean_over(&self, from: f64, to: f64) -> f64 {
        let vals: Vec<f64> = self
            .phases
            .iter()
            .zip(&self.msf)
            .filter(|(p, _)| **p >= from && **p < to)
            .map(|(_, m)| *m)
            .collect();
        crate::stats::mean(&vals)
    }
}

/// `⟨x²(t, lag)⟩` across runs for every phase `t` where the window fits.
pub fn intraday_profile(ensemble: &PathEnsemble, lag: f64) -> Result<IntradayProfile> {
    if ensemble.n_paths() < 2 {
        return Err(Error::insufficient("an intraday profile needs at least 2 runs"));
    }
    let grid = &ensemble.grid;
    let l = grid.lag_steps(lag)?;
    if l > grid.n_steps {
        return Err(Error::rejected(format!("lag {lag} is longer than a run")));
    }
    let mut phases = Vec::new();
    let mut msf = Vec::new();
    let mut std_error = Vec::new();
    for k in 0..=(grid.n_steps - l) {
        let t = grid.time(k);
        let r = ensemble_moment(ensemble, t, lag, 2)?;
        phases.push(t);
        msf.push(r.estimate);
        std_error.push(r.std_error);
    }
    Ok(IntradayProfile {
        lag,
        phases,
        msf,
        std_error,
        n_runs: ensemble.n_paths(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble_builder::{homogeneous_series, segment_series, two_regime_series};
    use crate::stats;

    #[test]
    fn homogeneous_runs_give_a_flat_profile() {
        let s = homogeneous_series(60, 48, 1);
        let prof = intraday_profile(&segment_series(&s, 48, 0).unwrap(), 1.0).unwrap();
        assert_eq!(prof.msf.len(), 47);
        let mean = stats::mean(&prof.msf);
        let pooled_se = stats::mean(&prof.std_error);
        // deviation of the worst phase, allowing for 47 looks at 4 SE each
        let worst = prof.msf.iter().map(|m| (m - mean).abs()).fold(0.0, f64::max);
        assert!(worst < 4.0 * pooled_se, "{worst} vs {pooled_se}");
    }

    #[test]
    fn two_regime_ratio_is_recovered() {
        let s = two_regime_series(50, 288, 4.0, 3);
        let prof = intraday_profile(&segment_series(&s, 288, 0).unwrap(), 1.0).unwrap();
        let ratio = prof.mean_over(0.0, 144.0) / prof.mean_over(144.0, 288.0);
        assert!((ratio / 4.0 - 1.0).abs() < 0.15, "ratio {ratio}");
        assert!(prof.to_csv().starts_with("phase,msf,std_error\n"));
    }

    #[test]
    fn single_run_is_insufficient() {
        let s = homogeneous_series(3, 10, 1);
        let mut ens = segment_series(&s, 10, 0).unwrap();
        ens.paths.truncate(1);
        assert!(matches!(intraday_profile(&ens, 1.0), Err(Error::InsufficientData(_))));
    }
}
