//! Time averages along one path versus cross-path averages at fixed times.
//!
//! Every report carries the naive i.i.d. standard error together with the
//! lag-1 autocorrelation of the averaged summands. When that autocorrelation
//! is far from zero the i.i.d. error bar is not trustworthy, and the report
//! says so instead of correcting for it.

mod convergence;
mod correlation;
mod ensemble;
mod sliding;

use serde::{Deserialize, Serialize};

pub use convergence::{convergence_rate, ConvergenceConfig, ConvergenceReport, NamedEstimator};
pub use correlation::{
    ergodicity_diagnostic, increment_autocorrelation, pair_correlation, volatility_correlation,
    IncrementPairReport, BACKWARD_INCREMENT_CONVENTION,
};
pub use ensemble::{ensemble_moment, ensemble_sliding_moment};
pub use sliding::{sliding_increment_mean, sliding_increments, sliding_msf};
pub(crate) use sliding::window_notes;

use crate::stats;

/// The increment `z = x(t + lag) − x(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementSample {
    pub z: f64,
    pub t: f64,
    pub lag: f64,
}

/// Point estimate with its naive standard error and summand diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub autocorr_lag1: f64,
    pub notes: String,
}

impl EstimatorReport {
    /// Mean of `summands` with `sample_std / √n` as the error bar.
    pub fn from_summands(summands: &[f64], notes: impl Into<String>) -> Self {
        EstimatorReport {
            estimate: stats::mean(summands),
            std_error: stats::std_error(summands),
            n_samples: summands.len(),
            autocorr_lag1: stats::autocorr_lag1(summands),
            notes: notes.into(),
        }
    }

    /// `|a − b| / √(se_a² + se_b²)`; infinite when both errors vanish and
    /// the estimates differ.
    pub fn z_distance(&self, other: &EstimatorReport) -> f64 {
        let diff = (self.estimate - other.estimate).abs();
        let se = self.std_error.hypot(other.std_error);
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// `|estimate − target| / std_error` with the same zero conventions.
    pub fn z_from(&self, target: f64) -> f64 {
        let diff = (self.estimate - target).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    PairCorrelation,
    IncrementAutocorr,
    VolatilityCorr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: CorrelationKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub std_errors: Vec<f64>,
}

impl CorrelationCurve {
    /// CSV with header `lag,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lag,value\n");
        for (l, v) in self.lags.iter().zip(&self.values) {
            out.push_str(&format!(
                "{},{}\n",
                crate::process_sim::io::fmt_f64(*l),
                crate::process_sim::io::fmt_f64(*v)
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_json_field_names_are_fixed() {
        let r = EstimatorReport::from_summands(&[1.0, 2.0, 3.0], "n");
        let v = serde_json::to_value(&r).unwrap();
        for key in ["estimate", "std_error", "n_samples", "autocorr_lag1", "notes"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let c = CorrelationCurve {
            lags: vec![0.0, 1.0],
            values: vec![1.0, 0.5],
            kind: CorrelationKind::PairCorrelation,
            std_errors: vec![],
        };
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["kind"], "pair_correlation");
        assert!(c.to_csv().starts_with("lag,value\n"));
    }

    #[test]
    fn z_distances() {
        let a = EstimatorReport::from_summands(&[1.0, 1.0], "");
        let b = EstimatorReport::from_summands(&[2.0, 2.0], "");
        assert_eq!(a.z_distance(&a), 0.0);
        assert!(a.z_distance(&b).is_infinite());
        assert_eq!(a.z_from(1.0), 0.0);
    }
}
