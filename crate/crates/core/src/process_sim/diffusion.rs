//! Euler–Maruyama integration of drift-free diffusions `dx = √D(x,t) dW`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::TimeGrid;
use super::spec::{DiffusionModel, ItoParams, ProcessSpec};
use super::{Path, Sampler};
use crate::error::{Error, Result};

/// Euler path on a grid refined `substeps` times, reported on the coarse grid.
pub fn simulate_ito(spec: &ProcessSpec, grid: &TimeGrid, seed: u64, substeps: usize) -> Result<Path> {
    if !matches!(spec, ProcessSpec::ItoDiffusion(_)) {
        return Err(Error::rejected("process spec must be of kind ito_diffusion"));
    }
    Sampler::new(spec, grid, substeps)?.sample(seed, 0)
}

pub(super) fn ito_values<R: Rng + ?Sized>(
    p: &ItoParams,
    grid: &TimeGrid,
    substeps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let h = grid.dt / substeps as f64;
    let sqrt_h = h.sqrt();
    let reflect = matches!(p.diffusion, DiffusionModel::LinearX);
    let mut x = p.x0;
    let mut values = Vec::with_capacity(grid.n_points());
    values.push(x);
    for k in 0..grid.n_steps {
        for s in 0..substeps {
            let t = grid.time(k) + s as f64 * h;
            let d = p.diffusion.coefficient(x, t, h);
            if !(d >= 0.0) {
                return Err(Error::numerical(format!(
                    "diffusion coefficient {} evaluated to {d} at t = {t}, x = {x}",
                    p.diffusion.id()
                )));
            }
            let z: f64 = rng.sample(StandardNormal);
            x += d.sqrt() * sqrt_h * z;
            if reflect {
                x = x.abs();
            }
            if !x.is_finite() {
                return Err(Error::numerical(format!(
                    "{} diffusion overflowed at t = {}",
                    p.diffusion.id(),
                    t + h
                )));
            }
        }
        values.push(x);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_sim::simulate_ensemble;
    use crate::stats::{mean, sample_variance, std_error};

    fn second_moment(col: &[f64]) -> (f64, f64) {
        let sq: Vec<f64> = col.iter().map(|x| x * x).collect();
        (mean(&sq), std_error(&sq))
    }

    #[test]
    fn one_plus_abs_small_time_variance() {
        // d⟨x²⟩/dt = 1 + ⟨|x|⟩ with ⟨|x|⟩ ≈ √(2s/π), so
        // ⟨x²(t)⟩ ≈ t + (2/3)√(2/π) t^{3/2}: ratio to t tends to 1 like √t
        let spec = ProcessSpec::ito(DiffusionModel::OnePlusAbsX, 0.0);
        for (t, tol_vs_t) in [(0.01, 0.08), (1e-4, 0.02)] {
            let grid = TimeGrid::new(0.0, t, 1).unwrap();
            let ens = simulate_ensemble(&spec, &grid, 100_000, 1, 100).unwrap();
            let (m2, _) = second_moment(&ens.column(1));
            let corrected = t + 2.0 / 3.0 * (2.0 / std::f64::consts::PI).sqrt() * t.powf(1.5);
            assert!((m2 / corrected - 1.0).abs() < 0.02, "t = {t}: ⟨x²⟩ = {m2}, expected {corrected}");
            assert!((m2 / t - 1.0).abs() < tol_vs_t, "t = {t}: ⟨x²⟩ = {m2}");
        }
    }

    #[test]
    fn exp_t_variance_matches_integral() {
        // ⟨x²(1)⟩ = ∫₀¹ e^s ds = e − 1
        let spec = ProcessSpec::ito(DiffusionModel::ExpT { gamma: 1.0 }, 0.0);
        let grid = TimeGrid::new(0.0, 0.25, 4).unwrap();
        let ens = simulate_ensemble(&spec, &grid, 100_000, 2, 50).unwrap();
        let (m2, _) = second_moment(&ens.column(4));
        let expect = 1f64.exp() - 1.0;
        assert!((m2 / expect - 1.0).abs() < 0.03, "⟨x²⟩ = {m2}");
    }

    #[test]
    fn every_registered_diffusion_is_a_martingale() {
        let grid = TimeGrid::new(0.0, 0.25, 8).unwrap();
        for (diffusion, x0) in [
            (DiffusionModel::LinearX, 1.0),
            (DiffusionModel::OnePlusAbsX, 0.0),
            (DiffusionModel::ScalingH { hurst: 0.5 }, 0.0),
            (DiffusionModel::ExpT { gamma: 1.0 }, 0.5),
        ] {
            let spec = ProcessSpec::ito(diffusion, x0);
            let ens = simulate_ensemble(&spec, &grid, 20_000, 3, 20).unwrap();
            for k in 0..=grid.n_steps {
                let col = ens.column(k);
                let se = (sample_variance(&col) / col.len() as f64).sqrt();
                let m = mean(&col);
                assert!(
                    (m - x0).abs() <= 5.0 * se + 1e-12,
                    "{}: mean {m} at k = {k} (se {se})",
                    diffusion.id()
                );
            }
        }
    }

    #[test]
    fn linear_diffusion_stays_non_negative() {
        let spec = ProcessSpec::ito(DiffusionModel::LinearX, 0.05);
        let grid = TimeGrid::new(0.0, 0.5, 10).unwrap();
        let ens = simulate_ensemble(&spec, &grid, 500, 4, 10).unwrap();
        assert!(ens.paths.iter().all(|p| p.values.iter().all(|&v| v >= 0.0)));
    }

    #[test]
    fn overflow_reports_the_time() {
        let spec = ProcessSpec::ito(DiffusionModel::ExpT { gamma: 2000.0 }, 0.0);
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let err = simulate_ito(&spec, &grid, 0, 2).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Numerical(_)) && msg.contains("t = "), "{msg}");
    }

    #[test]
    fn zero_substeps_rejected() {
        let spec = ProcessSpec::ito(DiffusionModel::OnePlusAbsX, 0.0);
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        assert!(simulate_ito(&spec, &grid, 0, 0).is_err());
    }
}
