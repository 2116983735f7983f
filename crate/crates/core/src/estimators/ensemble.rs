use super::sliding::{sliding_increments, window_notes};
use super::EstimatorReport;
use crate::error::{Error, Result};
use crate::process_sim::PathEnsemble;
use crate::stats;

fn check_power(power: u32) -> Result<i32> {
    match power {
        1 | 2 => Ok(power as i32),
        p => Err(Error::rejected(format!("power must be 1 or 2, got {p}"))),
    }
}

/// Cross-path average of `x(t, lag)^power` at one strobe time.
///
/// Summands come from independent runs, so `autocorr_lag1` (taken across the
/// path index) should be near zero and the error bar is honest.
pub fn ensemble_moment(ensemble: &PathEnsemble, t: f64, lag: f64, power: u32) -> Result<EstimatorReport> {
    let power = check_power(power)?;
    let summands: Vec<f64> = ensemble
        .increments_at(t, lag)?
        .into_iter()
        .map(|z| z.powi(power))
        .collect();
    let notes = if summands.len() == 1 {
        "single path: no error bar".to_string()
    } else {
        String::new()
    };
    Ok(EstimatorReport::from_summands(&summands, notes))
}

/// Sliding time average computed separately on every path over windows
/// inside `[t_start, t_end]`, then averaged across paths.
///
/// The error bar comes from the spread of the per-path time averages, which
/// are independent; `autocorr_lag1` is the mean within-path summand
/// autocorrelation.
pub fn ensemble_sliding_moment(
    ensemble: &PathEnsemble,
    lag: f64,
    stride: f64,
    power: u32,
    t_start: f64,
    t_end: f64,
) -> Result<EstimatorReport> {
    let power = check_power(power)?;
    let grid = &ensemble.grid;
    let i0 = grid.index_of(t_start)?;
    let i1 = grid.index_of(t_end)?;
    if i1 <= i0 {
        return Err(Error::rejected(format!("empty window range [{t_start}, {t_end}]")));
    }
    let lo = grid.time(i0) - 1e-9 * grid.dt;
    let hi = grid.time(i1) + 1e-9 * grid.dt;
    let mut per_path = Vec::with_capacity(ensemble.n_paths());
    let mut autocorrs = Vec::with_capacity(ensemble.n_paths());
    for path in &ensemble.paths {
        let summands: Vec<f64> = sliding_increments(path, lag, stride)?
            .into_iter()
            .filter(|s| s.t >= lo && s.t + s.lag <= hi)
            .map(|s| s.z.powi(power))
            .collect();
        if summands.is_empty() {
            return Err(Error::insufficient(format!(
                "no window of lag {lag} fits inside [{t_start}, {t_end}]"
            )));
        }
        autocorrs.push(stats::autocorr_lag1(&summands));
        per_path.push(stats::mean(&summands));
    }
    let mut report = EstimatorReport::from_summands(&per_path, window_notes(lag, stride));
    report.autocorr_lag1 = stats::mean(&autocorrs);
    Ok(report)
}
