use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sliding::sliding_increments;
use crate::error::{Error, Result};
use crate::process_sim::{simulate_ensemble, simulate_path, stream_rng, ProcessSpec, TimeGrid};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedEstimator {
    SlidingIncrementMean,
    SlidingMsf,
    EnsembleMoment,
}

impl NamedEstimator {
    pub fn name(&self) -> &'static str {
        match self {
            NamedEstimator::SlidingIncrementMean => "sliding_increment_mean",
            NamedEstimator::SlidingMsf => "sliding_msf",
            NamedEstimator::EnsembleMoment => "ensemble_moment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub estimator: NamedEstimator,
    pub lag: f64,
    /// Sample sizes: windows for sliding estimators, paths for the ensemble one.
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub substeps: usize,
}

impl ConvergenceConfig {
    pub const DEFAULT_REPLICATIONS: usize = 32;

    pub fn new(estimator: NamedEstimator, lag: f64, n_grid: Vec<usize>, master_seed: u64) -> Self {
        ConvergenceConfig {
            estimator,
            lag,
            n_grid,
            replications: Self::DEFAULT_REPLICATIONS,
            master_seed,
            substeps: crate::process_sim::DEFAULT_SUBSTEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub estimator: NamedEstimator,
    pub n_grid: Vec<usize>,
    /// Variance of the estimator across replications, per `n_grid` entry.
    pub variances: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub replications: usize,
}

/// Estimates for every prefix size in `n_grid` from one replication.
fn replication_estimates(spec: &ProcessSpec, cfg: &ConvergenceConfig, seed: u64) -> Result<Vec<f64>> {
    let n_max = *cfg.n_grid.last().expect("validated non-empty");
    match cfg.estimator {
        NamedEstimator::SlidingIncrementMean | NamedEstimator::SlidingMsf => {
            let grid = TimeGrid::new(0.0, cfg.lag, n_max)?;
            let path = simulate_path(spec, &grid, seed, cfg.substeps)?;
            let power = if cfg.estimator == NamedEstimator::SlidingMsf { 2 } else { 1 };
            let summands: Vec<f64> = sliding_increments(&path, cfg.lag, cfg.lag)?
                .into_iter()
                .map(|s| s.z.powi(power))
                .collect();
            Ok(prefix_means(&summands, &cfg.n_grid))
        }
        NamedEstimator::EnsembleMoment => {
            let grid = TimeGrid::new(0.0, cfg.lag, 1)?;
            let ens = simulate_ensemble(spec, &grid, n_max, seed, cfg.substeps)?;
            let summands: Vec<f64> = ens.increments_at(0.0, cfg.lag)?.iter().map(|z| z * z).collect();
            Ok(prefix_means(&summands, &cfg.n_grid))
        }
    }
}

fn prefix_means(summands: &[f64], sizes: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut acc = 0.0;
    let mut done = 0;
    for &n in sizes {
        acc += summands[done..n].iter().sum::<f64>();
        done = n;
        out.push(acc / n as f64);
    }
    out
}

/// Slope of log(estimator variance) against log N over independent
/// replications. A slope near −1 is law-of-large-numbers behaviour.
pub fn convergence_rate(spec: &ProcessSpec, cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    spec.validate()?;
    let grid = &cfg.n_grid;
    if grid.len() < 4 {
        return Err(Error::rejected("n_grid needs at least 4 sample sizes"));
    }
    if grid[0] == 0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::rejected("n_grid must be positive and strictly increasing"));
    }
    if (grid[grid.len() - 1] as f64) < 100.0 * grid[0] as f64 {
        return Err(Error::rejected("n_grid must span at least two decades"));
    }
    if cfg.replications < ConvergenceConfig::DEFAULT_REPLICATIONS {
        return Err(Error::rejected(format!(
            "convergence fits need >= {} replications, got {}",
            ConvergenceConfig::DEFAULT_REPLICATIONS,
            cfg.replications
        )));
    }
    let mut seeder = stream_rng(cfg.master_seed, u64::MAX);
    let seeds: Vec<u64> = (0..cfg.replications).map(|_| seeder.next_u64()).collect();
    let per_rep = seeds
        .par_iter()
        .map(|&s| replication_estimates(spec, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let variances: Vec<f64> = (0..grid.len())
        .map(|j| {
            let col: Vec<f64> = per_rep.iter().map(|r| r[j]).collect();
            stats::sample_variance(&col)
        })
        .collect();
    if let Some(j) = variances.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::numerical(format!(
            "estimator variance at N = {} is {}; cannot fit a log-log slope",
            grid[j], variances[j]
        )));
    }
    let lx: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = variances.iter().map(|v| v.ln()).collect();
    let (intercept, slope) =
        stats::ols(&lx, &ly).ok_or_else(|| Error::numerical("degenerate log-log fit"))?;
    Ok(ConvergenceReport {
        estimator: cfg.estimator,
        n_grid: grid.clone(),
        variances,
        slope,
        intercept,
        replications: cfg.replications,
    })
}
