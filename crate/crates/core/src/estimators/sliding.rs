use super::{EstimatorReport, IncrementSample};
use crate::error::{Error, Result};
use crate::process_sim::Path;

/// Increments `x(t, lag)` for window starts `t0, t0 + stride, …` that fit in
/// the path.
pub fn sliding_increments(path: &Path, lag: f64, stride: f64) -> Result<Vec<IncrementSample>> {
    let grid = &path.grid;
    let l = grid.lag_steps(lag)?;
    let s = grid
        .lag_steps(stride)
        .map_err(|_| Error::rejected(format!("stride {stride} must be a positive multiple of dt")))?;
    let v = &path.values;
    Ok((0..)
        .map(|k| k * s)
        .take_while(|start| start + l <= grid.n_steps)
        .map(|start| IncrementSample {
            z: v[start + l] - v[start],
            t: grid.time(start),
            lag,
        })
        .collect())
}

pub(crate) fn window_notes(lag: f64, stride: f64) -> String {
    if stride < lag {
        format!(
            "overlapping windows (stride {stride} < lag {lag}): summands are correlated by construction"
        )
    } else {
        String::new()
    }
}

fn sliding_power(path: &Path, lag: f64, stride: f64, power: i32) -> Result<EstimatorReport> {
    let incs = sliding_increments(path, lag, stride)?;
    if incs.len() < 2 {
        return Err(Error::insufficient(format!(
            "{} complete window(s) of lag {lag} fit in the path; need at least 2",
            incs.len()
        )));
    }
    let summands: Vec<f64> = incs.iter().map(|s| s.z.powi(power)).collect();
    Ok(EstimatorReport::from_summands(&summands, window_notes(lag, stride)))
}

/// Time average of `x(t, lag)` along one path.
pub fn sliding_increment_mean(path: &Path, lag: f64, stride: f64) -> Result<EstimatorReport> {
    sliding_power(path, lag, stride, 1)
}

/// Time average of `x²(t, lag)` along one path.
pub fn sliding_msf(path: &Path, lag: f64, stride: f64) -> Result<EstimatorReport> {
    sliding_power(path, lag, stride, 2)
}
