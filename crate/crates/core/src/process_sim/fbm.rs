//! Exact sampling of fractional Brownian motion.
//!
//! Small grids factor the level covariance matrix directly (Cholesky). Larger
//! grids use circulant embedding of the fractional Gaussian noise
//! autocovariance, which is also exact: the embedding of fGn is nonnegative
//! definite for every `H ∈ (0, 1)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::TimeGrid;
use super::spec::{check_hurst, FbmParams};
use crate::error::{Error, Result};

/// Largest number of sampled levels factored by Cholesky.
pub const CHOLESKY_MAX_POINTS: usize = 1024;

/// Covariance of fBm levels, `½σ²(s^2H + t^2H − |t−s|^2H)`.
pub fn fbm_covariance(s: f64, t: f64, hurst: f64, sigma: f64) -> Result<f64> {
    check_hurst(hurst)?;
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::rejected(format!(
            "fbm covariance needs non-negative times, got s = {s}, t = {t}"
        )));
    }
    let h2 = 2.0 * hurst;
    Ok(0.5 * sigma * sigma * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2)))
}

/// Autocovariance of unit-step fractional Gaussian noise at integer lag `k`.
pub fn fgn_autocovariance(k: usize, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Reusable sampler for one `(H, σ, grid)` combination.
pub struct FbmSampler {
    n_steps: usize,
    method: Method,
}

enum Method {
    Cholesky(DMatrix<f64>),
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
        /// Increment scale `σ · dt^H`.
        scale: f64,
    },
}

impl FbmSampler {
    pub fn new(params: &FbmParams, grid: &TimeGrid) -> Result<Self> {
        params.validate()?;
        grid.validate()?;
        let n = grid.n_steps;
        let method = if n <= CHOLESKY_MAX_POINTS {
            Method::Cholesky(level_cholesky(params, grid)?)
        } else {
            circulant(params, grid)?
        };
        Ok(FbmSampler { n_steps: n, method })
    }

    pub fn uses_cholesky(&self) -> bool {
        matches!(self.method, Method::Cholesky(_))
    }

    /// Levels at every grid point, anchored at zero at the grid start.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.n_steps;
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        match &self.method {
            Method::Cholesky(l) => {
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                for i in 0..n {
                    let row = l.row(i);
                    let mut acc = 0.0;
                    for j in 0..=i {
                        acc += row[j] * z[j];
                    }
                    values.push(acc);
                }
            }
            Method::Circulant {
                sqrt_eig,
                fft,
                scale,
            } => {
                let m = sqrt_eig.len();
                let norm = (2.0 / m as f64).sqrt();
                let mut buf: Vec<Complex<f64>> = sqrt_eig
                    .iter()
                    .map(|&s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex::new(s * norm * re, s * norm * im)
                    })
                    .collect();
                fft.process(&mut buf);
                let mut level = 0.0;
                for c in buf.iter().take(n) {
                    level += scale * c.re;
                    values.push(level);
                }
            }
        }
        values
    }
}

fn level_cholesky(params: &FbmParams, grid: &TimeGrid) -> Result<DMatrix<f64>> {
    let n = grid.n_steps;
    let rel = |k: usize| k as f64 * grid.dt;
    let mut cov = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let c = fbm_covariance(rel(i + 1), rel(j + 1), params.hurst, params.sigma)?;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    cov.cholesky().map(|c| c.l()).ok_or_else(|| {
        Error::numerical(format!(
            "Cholesky factorization of the {n}x{n} fBm covariance failed (H = {}, dt = {}); \
             matrix not positive definite in floating point",
            params.hurst, grid.dt
        ))
    })
}

fn circulant(params: &FbmParams, grid: &TimeGrid) -> Result<Method> {
    let n = grid.n_steps;
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|k| {
            let lag = if k <= n { k } else { m - k };
            Complex::new(fgn_autocovariance(lag, params.hurst), 0.0)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut row);
    let max = row.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let mut sqrt_eig = Vec::with_capacity(m);
    for (k, c) in row.iter().enumerate() {
        let lambda = c.re;
        if lambda < -1e-9 * max {
            return Err(Error::numerical(format!(
                "circulant embedding eigenvalue {k} is negative ({lambda:e}) for H = {}, n = {n}",
                params.hurst
            )));
        }
        sqrt_eig.push(lambda.max(0.0).sqrt());
    }
    Ok(Method::Circulant {
        sqrt_eig,
        fft,
        scale: params.sigma * grid.dt.powf(params.hurst),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn covariance_closed_forms() {
        assert!((fbm_covariance(2.0, 3.0, 0.5, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((fbm_covariance(1.0, 1.0, 0.7, 1.0).unwrap() - 1.0).abs() < 1e-12);
        // ½(1 + 2^1.4 − 1) = 2^0.4
        let c = fbm_covariance(1.0, 2.0, 0.7, 1.0).unwrap();
        assert!((c - 2f64.powf(0.4)).abs() < 1e-12);
        assert!((c - 1.3195).abs() < 1e-4);
    }

    #[test]
    fn covariance_rejects_bad_inputs() {
        assert!(fbm_covariance(-1.0, 1.0, 0.5, 1.0).is_err());
        assert!(fbm_covariance(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(fbm_covariance(1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn fgn_lag_one_matches_adjacent_increment_correlation() {
        for h in [0.3, 0.5, 0.7, 0.75] {
            let rho = 2f64.powf(2.0 * h - 1.0) - 1.0;
            assert!((fgn_autocovariance(1, h) - rho).abs() < 1e-12);
            assert!((fgn_autocovariance(0, h) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn both_routes_anchor_at_zero() {
        let p = FbmParams { hurst: 0.7, sigma: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let small = FbmSampler::new(&p, &TimeGrid::new(0.0, 0.5, 8).unwrap()).unwrap();
        assert!(small.uses_cholesky());
        let v = small.sample(&mut rng);
        assert_eq!(v.len(), 9);
        assert_eq!(v[0], 0.0);
        let big = FbmSampler::new(&p, &TimeGrid::new(0.0, 1.0, 4000).unwrap()).unwrap();
        assert!(!big.uses_cholesky());
        let v = big.sample(&mut rng);
        assert_eq!(v.len(), 4001);
        assert_eq!(v[0], 0.0);
        assert!(v.iter().all(|x| x.is_finite()));
    }
}
