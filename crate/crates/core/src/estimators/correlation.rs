use serde::{Deserialize, Serialize};

use super::{CorrelationCurve, CorrelationKind, EstimatorReport};
use crate::error::{Error, Result};
use crate::process_sim::PathEnsemble;
use crate::stats;

/// Orientation of the backward increment, recorded in every paired report.
pub const BACKWARD_INCREMENT_CONVENTION: &str =
    "backward increment x(t,-T) taken as x(t) - x(t-T); forward x(t,T) = x(t+T) - x(t)";

/// Raw cross-path moment plus its normalized (correlation) form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementPairReport {
    pub raw: EstimatorReport,
    pub normalized: EstimatorReport,
    pub convention: String,
}

/// Backward and forward increments around `t`, one pair per path.
fn around(ensemble: &PathEnsemble, t: f64, lag: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = &ensemble.grid;
    let l = grid.lag_steps(lag)?;
    let i = grid.index_of(t)?;
    if i < l || i + l > grid.n_steps {
        return Err(Error::rejected(format!(
            "t = {t} with lag {lag} needs both t - lag and t + lag on the grid [{}, {}]",
            grid.t0,
            grid.end()
        )));
    }
    if ensemble.n_paths() < 3 {
        return Err(Error::insufficient("paired increment statistics need at least 3 paths"));
    }
    let back = ensemble.paths.iter().map(|p| p.values[i] - p.values[i - l]).collect();
    let fwd = ensemble.paths.iter().map(|p| p.values[i + l] - p.values[i]).collect();
    Ok((back, fwd))
}

fn correlation_report(a: &[f64], b: &[f64], notes: &str) -> EstimatorReport {
    let r = stats::pearson(a, b);
    let n = a.len();
    EstimatorReport {
        estimate: r,
        std_error: (1.0 - r * r) / ((n - 1) as f64).sqrt(),
        n_samples: n,
        autocorr_lag1: 0.0,
        notes: notes.to_string(),
    }
}

/// `⟨x(t,T) · x(t,−T)⟩` across paths, raw and as a Pearson correlation.
pub fn increment_autocorrelation(ensemble: &PathEnsemble, t: f64, lag: f64) -> Result<IncrementPairReport> {
    let (back, fwd) = around(ensemble, t, lag)?;
    let products: Vec<f64> = back.iter().zip(&fwd).map(|(b, f)| b * f).collect();
    Ok(IncrementPairReport {
        raw: EstimatorReport::from_summands(&products, BACKWARD_INCREMENT_CONVENTION),
        normalized: correlation_report(&back, &fwd, "pearson correlation of backward and forward increments"),
        convention: BACKWARD_INCREMENT_CONVENTION.to_string(),
    })
}

/// Covariance of squared backward and forward increments (the volatility
/// measure), raw and normalized.
pub fn volatility_correlation(ensemble: &PathEnsemble, t: f64, lag: f64) -> Result<IncrementPairReport> {
    let (back, fwd) = around(ensemble, t, lag)?;
    let b2: Vec<f64> = back.iter().map(|x| x * x).collect();
    let f2: Vec<f64> = fwd.iter().map(|x| x * x).collect();
    let mb = stats::mean(&b2);
    let mf = stats::mean(&f2);
    let centered: Vec<f64> = b2.iter().zip(&f2).map(|(b, f)| (b - mb) * (f - mf)).collect();
    Ok(IncrementPairReport {
        raw: EstimatorReport::from_summands(&centered, "covariance of squared increments"),
        normalized: correlation_report(&b2, &f2, "pearson correlation of squared increments"),
        convention: BACKWARD_INCREMENT_CONVENTION.to_string(),
    })
}

/// Mean-subtracted `R(T) = ⟨x(t)x(t+T)⟩` across paths at base time `t`.
pub fn pair_correlation(ensemble: &PathEnsemble, base_t: f64, lags: &[f64]) -> Result<CorrelationCurve> {
    if lags.is_empty() {
        return Err(Error::rejected("pair correlation needs at least one lag"));
    }
    if lags.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::rejected("lags must be strictly increasing"));
    }
    let grid = &ensemble.grid;
    let i = grid.index_of(base_t)?;
    let base = ensemble.column(i);
    let mb = stats::mean(&base);
    let mut values = Vec::with_capacity(lags.len());
    let mut std_errors = Vec::with_capacity(lags.len());
    for &lag in lags {
        let j = i + grid.steps(lag)?;
        if j > grid.n_steps {
            return Err(Error::rejected(format!(
                "lag {lag} from base time {base_t} runs past the grid end {}",
                grid.end()
            )));
        }
        let other = ensemble.column(j);
        let mo = stats::mean(&other);
        let prods: Vec<f64> = base.iter().zip(&other).map(|(a, b)| (a - mb) * (b - mo)).collect();
        values.push(stats::mean(&prods));
        std_errors.push(stats::std_error(&prods));
    }
    Ok(CorrelationCurve {
        lags: lags.to_vec(),
        values,
        kind: CorrelationKind::PairCorrelation,
        std_errors,
    })
}

/// Running mean `(1/T) ∫ R(s) ds` over the whole curve (trapezoid rule).
/// Values near zero support ergodicity of the mean; a constant `R = c`
/// returns `c`.
pub fn ergodicity_diagnostic(curve: &CorrelationCurve) -> Result<f64> {
    if curve.kind != CorrelationKind::PairCorrelation {
        return Err(Error::rejected("ergodicity diagnostic needs a pair_correlation curve"));
    }
    if curve.lags.is_empty() || curve.lags.len() != curve.values.len() {
        return Err(Error::rejected("ergodicity diagnostic needs a non-empty curve"));
    }
    let span = curve.lags[curve.lags.len() - 1] - curve.lags[0];
    if span <= 0.0 {
        return Ok(curve.values[0]);
    }
    let integral: f64 = curve
        .lags
        .windows(2)
        .zip(curve.values.windows(2))
        .map(|(l, v)| 0.5 * (v[0] + v[1]) * (l[1] - l[0]))
        .sum();
    Ok(integral / span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_sim::{simulate_ensemble, Path, ProcessSpec, SeedTag, TimeGrid};

    fn curve(lags: Vec<f64>, f: impl Fn(f64) -> f64) -> CorrelationCurve {
        let values = lags.iter().map(|&l| f(l)).collect();
        CorrelationCurve {
            lags,
            values,
            kind: CorrelationKind::PairCorrelation,
            std_errors: vec![],
        }
    }

    #[test]
    fn ergodicity_of_exponential_correlation() {
        let lags: Vec<f64> = (0..=10_000).map(|k| k as f64 * 1e-3).collect();
        let d = ergodicity_diagnostic(&curve(lags, |s| (-s).exp())).unwrap();
        let exact = (1.0 - (-10f64).exp()) / 10.0;
        assert!((exact - 0.0999955).abs() < 1e-7);
        assert!((d / exact - 1.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn ergodicity_of_constant_and_zero_curves() {
        let lags: Vec<f64> = (0..=50).map(|k| k as f64 * 0.2).collect();
        assert_eq!(ergodicity_diagnostic(&curve(lags.clone(), |_| 0.0)).unwrap(), 0.0);
        let c = ergodicity_diagnostic(&curve(lags, |_| 0.75)).unwrap();
        assert!((c - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ergodicity_rejects_empty_and_wrong_kind() {
        assert!(ergodicity_diagnostic(&curve(vec![], |_| 0.0)).is_err());
        let mut c = curve(vec![0.0, 1.0], |_| 1.0);
        c.kind = CorrelationKind::VolatilityCorr;
        assert!(ergodicity_diagnostic(&c).is_err());
    }

    #[test]
    fn lag_zero_is_the_sample_variance() {
        let g = TimeGrid::new(0.0, 1.0, 3).unwrap();
        let ens = simulate_ensemble(&ProcessSpec::wiener(1.0), &g, 500, 4, 1).unwrap();
        let c = pair_correlation(&ens, 1.0, &[0.0, 1.0]).unwrap();
        let col = ens.column(1);
        let m = stats::mean(&col);
        let var = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / col.len() as f64;
        assert_eq!(c.values[0], var);
    }

    #[test]
    fn wiener_pair_correlation_is_min_of_times() {
        let g = TimeGrid::new(0.0, 0.5, 6).unwrap();
        let ens = simulate_ensemble(&ProcessSpec::wiener(1.0), &g, 20_000, 12, 1).unwrap();
        let c = pair_correlation(&ens, 1.0, &[0.5, 1.0, 2.0]).unwrap();
        for (v, se) in c.values.iter().zip(&c.std_errors) {
            assert!((v - 1.0).abs() < 5.0 * se, "{v} ± {se}");
        }
        assert!(pair_correlation(&ens, 1.0, &[2.5]).is_err());
        assert!(pair_correlation(&ens, 1.0, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn boundary_times_rejected() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let ens = simulate_ensemble(&ProcessSpec::wiener(1.0), &g, 10, 0, 1).unwrap();
        assert!(increment_autocorrelation(&ens, 0.0, 1.0).is_err());
        assert!(increment_autocorrelation(&ens, 4.0, 1.0).is_err());
        assert!(volatility_correlation(&ens, 3.0, 2.0).is_err());
        assert!(increment_autocorrelation(&ens, 2.0, 2.0).is_ok());
    }

    #[test]
    fn constant_ensemble_has_zero_volatility_covariance() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let paths = (0..5)
            .map(|k| Path::new(g, vec![3.0; 5], SeedTag::rng(0, k)).unwrap())
            .collect();
        let ens = PathEnsemble::new(g, paths).unwrap();
        let r = volatility_correlation(&ens, 2.0, 1.0).unwrap();
        assert_eq!(r.raw.estimate, 0.0);
        assert_eq!(r.normalized.estimate, 0.0);
    }

    #[test]
    fn wiener_increments_are_uncorrelated() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let ens = simulate_ensemble(&ProcessSpec::wiener(1.0), &g, 20_000, 21, 1).unwrap();
        let a = increment_autocorrelation(&ens, 2.0, 1.0).unwrap();
        assert!(a.normalized.z_from(0.0) < 4.0);
        assert!(a.convention.contains("x(t) - x(t-T)"));
        let v = volatility_correlation(&ens, 2.0, 1.0).unwrap();
        assert!(v.normalized.z_from(0.0) < 4.0);
    }
}
