//! Reproducible sample paths and ensembles.
//!
//! Every generator is a pure function of `(spec, grid, seed[, substeps])`.
//! Path `k` of an ensemble draws from ChaCha stream `k` of the master seed,
//! so ensembles are bit-identical regardless of how many threads build them.

mod diffusion;
mod fbm;
mod grid;
pub mod io;
mod spec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use diffusion::simulate_ito;
pub use fbm::{fbm_covariance, fgn_autocovariance, FbmSampler, CHOLESKY_MAX_POINTS};
pub use grid::TimeGrid;
pub use spec::{DiffusionModel, FbmParams, ItoParams, OuParams, ProcessSpec, WienerParams};

use crate::error::{Error, Result};

/// Euler refinement used when a caller does not choose one.
pub const DEFAULT_SUBSTEPS: usize = 20;

/// Where a path's values came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SeedTag {
    /// Simulated from ChaCha stream `stream` of `master_seed`.
    Rng { master_seed: u64, stream: u64 },
    /// Cut from a long series: segment `index` starting at sample `start`,
    /// rebased by subtracting `base`.
    Segment { index: usize, start: usize, base: f64 },
}

impl SeedTag {
    pub fn rng(master_seed: u64, stream: u64) -> Self {
        SeedTag::Rng { master_seed, stream }
    }
}

/// Deterministic RNG for one stream of a master seed.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// One sampled trajectory on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub seed_tag: SeedTag,
}

impl Path {
    pub fn new(grid: TimeGrid, values: Vec<f64>, seed_tag: SeedTag) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n_points() {
            return Err(Error::rejected(format!(
                "path has {} values but the grid has {} points",
                values.len(),
                grid.n_points()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::numerical(format!(
                "path value at t = {} is not finite",
                grid.time(i)
            )));
        }
        Ok(Path {
            grid,
            values,
            seed_tag,
        })
    }

    /// Value at grid time `t`.
    pub fn at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.grid.index_of(t)?])
    }
}

/// `N` paths sharing one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub grid: TimeGrid,
    pub paths: Vec<Path>,
}

impl PathEnsemble {
    pub fn new(grid: TimeGrid, paths: Vec<Path>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::rejected("an ensemble needs at least one path"));
        }
        if let Some(i) = paths.iter().position(|p| p.grid != grid) {
            return Err(Error::rejected(format!(
                "path {i} does not share the ensemble grid"
            )));
        }
        Ok(PathEnsemble { grid, paths })
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Values of every path at grid index `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p.values[k]).collect()
    }

    /// Cross-path samples of `x(t + lag) − x(t)`.
    pub fn increments_at(&self, t: f64, lag: f64) -> Result<Vec<f64>> {
        let i = self.grid.index_of(t)?;
        let j = self.grid.index_of(t + lag)?;
        if j <= i {
            return Err(Error::rejected(format!("lag {lag} must be > 0")));
        }
        Ok(self.paths.iter().map(|p| p.values[j] - p.values[i]).collect())
    }
}

/// A generator prepared for one `(spec, grid, substeps)`; reused across paths.
pub struct Sampler {
    grid: TimeGrid,
    kind: SamplerKind,
}

enum SamplerKind {
    Wiener(WienerParams),
    Fbm(FbmSampler),
    Ito(ItoParams, usize),
    Ou(OuParams),
}

impl Sampler {
    pub fn new(spec: &ProcessSpec, grid: &TimeGrid, substeps: usize) -> Result<Self> {
        spec.validate()?;
        grid.validate()?;
        let kind = match spec {
            ProcessSpec::Wiener(p) => SamplerKind::Wiener(*p),
            ProcessSpec::Fbm(p) => SamplerKind::Fbm(FbmSampler::new(p, grid)?),
            ProcessSpec::ItoDiffusion(p) => {
                if substeps == 0 {
                    return Err(Error::rejected("substeps must be >= 1"));
                }
                SamplerKind::Ito(*p, substeps)
            }
            ProcessSpec::OrnsteinUhlenbeck(p) => SamplerKind::Ou(*p),
        };
        Ok(Sampler { grid: *grid, kind })
    }

    pub fn sample(&self, master_seed: u64, stream: u64) -> Result<Path> {
        let mut rng = stream_rng(master_seed, stream);
        let tag = SeedTag::rng(master_seed, stream);
        let values = match &self.kind {
            SamplerKind::Wiener(p) => wiener_values(p, &self.grid, &mut rng),
            SamplerKind::Fbm(s) => s.sample(&mut rng),
            SamplerKind::Ito(p, substeps) => {
                diffusion::ito_values(p, &self.grid, *substeps, &mut rng)?
            }
            SamplerKind::Ou(p) => ou_values(p, &self.grid, &mut rng),
        };
        Path::new(self.grid, values, tag)
    }
}

fn wiener_values<R: Rng + ?Sized>(p: &WienerParams, grid: &TimeGrid, rng: &mut R) -> Vec<f64> {
    let step_sd = p.sigma * grid.dt.sqrt();
    let mut x = 0.0;
    let mut values = Vec::with_capacity(grid.n_points());
    values.push(x);
    for _ in 0..grid.n_steps {
        let z: f64 = rng.sample(StandardNormal);
        x += step_sd * z;
        values.push(x);
    }
    values
}

fn ou_values<R: Rng + ?Sized>(p: &OuParams, grid: &TimeGrid, rng: &mut R) -> Vec<f64> {
    let decay = (-p.theta * grid.dt).exp();
    let cond_sd = (p.stationary_variance() * (1.0 - decay * decay)).sqrt();
    let mut x = if p.stationary_start {
        let z: f64 = rng.sample(StandardNormal);
        p.stationary_variance().sqrt() * z
    } else {
        p.x0
    };
    let mut values = Vec::with_capacity(grid.n_points());
    values.push(x);
    for _ in 0..grid.n_steps {
        let z: f64 = rng.sample(StandardNormal);
        x = x * decay + cond_sd * z;
        values.push(x);
    }
    values
}

fn expect_kind(ok: bool, want: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::rejected(format!("process spec must be of kind {want}")))
    }
}

/// Wiener path with `x(t0) = 0` and independent `N(0, σ²dt)` steps.
pub fn simulate_wiener(spec: &ProcessSpec, grid: &TimeGrid, seed: u64) -> Result<Path> {
    expect_kind(matches!(spec, ProcessSpec::Wiener(_)), "wiener")?;
    Sampler::new(spec, grid, 1)?.sample(seed, 0)
}

/// Exact fBm draw with `x(t0) = 0`.
pub fn simulate_fbm(spec: &ProcessSpec, grid: &TimeGrid, seed: u64) -> Result<Path> {
    expect_kind(matches!(spec, ProcessSpec::Fbm(_)), "fbm")?;
    Sampler::new(spec, grid, 1)?.sample(seed, 0)
}

/// Exact Ornstein–Uhlenbeck transitions.
pub fn simulate_ou(spec: &ProcessSpec, grid: &TimeGrid, seed: u64) -> Result<Path> {
    expect_kind(
        matches!(spec, ProcessSpec::OrnsteinUhlenbeck(_)),
        "ornstein_uhlenbeck",
    )?;
    Sampler::new(spec, grid, 1)?.sample(seed, 0)
}

/// Single path of any kind from stream 0 of `seed`.
pub fn simulate_path(spec: &ProcessSpec, grid: &TimeGrid, seed: u64, substeps: usize) -> Result<Path> {
    Sampler::new(spec, grid, substeps)?.sample(seed, 0)
}

/// `n_paths` independent paths; path `k` uses stream `k` of `master_seed`.
pub fn simulate_ensemble(
    spec: &ProcessSpec,
    grid: &TimeGrid,
    n_paths: usize,
    master_seed: u64,
    substeps: usize,
) -> Result<PathEnsemble> {
    if n_paths == 0 {
        return Err(Error::rejected("n_paths must be >= 1"));
    }
    let sampler = Sampler::new(spec, grid, substeps)?;
    let paths = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            sampler
                .sample(master_seed, k as u64)
                .map_err(|e| Error::Path {
                    index: k,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    PathEnsemble::new(*grid, paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, sample_variance};

    fn grid(dt: f64, n: usize) -> TimeGrid {
        TimeGrid::new(0.0, dt, n).unwrap()
    }

    #[test]
    fn wiener_starts_at_zero_and_has_step_variance() {
        // σ = 2, dt = 0.25 → per-step variance σ²dt = 1
        let spec = ProcessSpec::wiener(2.0);
        let path = simulate_wiener(&spec, &grid(0.25, 40_000), 7).unwrap();
        assert_eq!(path.values[0], 0.0);
        let steps: Vec<f64> = path.values.windows(2).map(|w| w[1] - w[0]).collect();
        let v = sample_variance(&steps);
        let se = v * (2.0 / steps.len() as f64).sqrt();
        assert!((v - 1.0).abs() < 4.0 * se, "variance {v}");
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let g = grid(1.0, 4);
        assert!(simulate_wiener(&ProcessSpec::fbm(0.5, 1.0), &g, 0).is_err());
        assert!(simulate_fbm(&ProcessSpec::wiener(1.0), &g, 0).is_err());
        assert!(simulate_ou(&ProcessSpec::wiener(1.0), &g, 0).is_err());
    }

    #[test]
    fn fbm_rejects_hurst_outside_unit_interval() {
        let g = grid(1.0, 4);
        for h in [0.0, 1.0, 1.5, -0.2] {
            let err = simulate_fbm(&ProcessSpec::fbm(h, 1.0), &g, 0).unwrap_err();
            assert!(matches!(err, Error::RejectedInput(_)));
        }
    }

    #[test]
    fn ou_zero_lag_autocovariance_is_stationary_variance() {
        let p = OuParams {
            theta: 1.0,
            sigma: 2f64.sqrt(),
            x0: 0.0,
            stationary_start: true,
        };
        assert_eq!(p.autocovariance(0.0), p.stationary_variance());
        assert!((p.stationary_variance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ou_stationary_variance_holds_across_the_grid() {
        let spec = ProcessSpec::ou(1.0, 2f64.sqrt(), 0.0, true);
        let ens = simulate_ensemble(&spec, &grid(0.5, 4), 10_000, 3, 1).unwrap();
        for k in 0..=4 {
            let col = ens.column(k);
            let v = sample_variance(&col);
            let se = v * (2.0 / col.len() as f64).sqrt();
            assert!((v - 1.0).abs() < 4.0 * se, "k = {k}: {v}");
        }
    }

    #[test]
    fn ou_autocovariance_at_half_lag() {
        // θ = 2, σ = 2: stationary variance 1, R(0.5) = e^{-1}
        let spec = ProcessSpec::ou(2.0, 2.0, 0.0, true);
        let ens = simulate_ensemble(&spec, &grid(0.5, 1), 100_000, 11, 1).unwrap();
        let prod: Vec<f64> = ens.paths.iter().map(|p| p.values[0] * p.values[1]).collect();
        let r = mean(&prod);
        let se = crate::stats::std_error(&prod);
        assert!((r - (-1f64).exp()).abs() < 4.0 * se, "R = {r}");
    }

    #[test]
    fn single_path_ensemble_matches_stream_zero() {
        let spec = ProcessSpec::fbm(0.7, 1.0);
        let g = grid(0.1, 30);
        let ens = simulate_ensemble(&spec, &g, 1, 99, 1).unwrap();
        let single = simulate_fbm(&spec, &g, 99).unwrap();
        assert_eq!(ens.paths[0], single);
    }

    #[test]
    fn ensembles_are_reproducible_across_thread_counts() {
        let spec = ProcessSpec::ito(DiffusionModel::OnePlusAbsX, 0.0);
        let g = grid(0.1, 20);
        let a = simulate_ensemble(&spec, &g, 64, 5, 4).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_ensemble(&spec, &g, 64, 5, 4).unwrap());
        assert_eq!(a, b);
        let c = simulate_ensemble(&spec, &g, 64, 6, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ensemble_rejects_zero_paths_and_foreign_grids() {
        let spec = ProcessSpec::wiener(1.0);
        assert!(simulate_ensemble(&spec, &grid(1.0, 2), 0, 0, 1).is_err());
        let p = simulate_wiener(&spec, &grid(1.0, 2), 0).unwrap();
        assert!(PathEnsemble::new(grid(0.5, 4), vec![p]).is_err());
    }

    #[test]
    fn path_rejects_non_finite_values() {
        let g = grid(1.0, 1);
        let err = Path::new(g, vec![0.0, f64::INFINITY], SeedTag::rng(0, 0)).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
        assert!(Path::new(g, vec![0.0], SeedTag::rng(0, 0)).is_err());
    }
}
