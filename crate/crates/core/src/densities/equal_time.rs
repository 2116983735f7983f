use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::histogram::BinEdges;
use crate::error::{Error, Result};
use crate::process_sim::PathEnsemble;
use crate::stats;

/// Bin pairs expecting fewer joint hits than this under independence are
/// not tested.
pub const MIN_EXPECTED_JOINT: f64 = 5.0;

/// Cross-run covariance of bin indicators for one ordered bin pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinPairCovariance {
    pub bin_a: usize,
    pub bin_b: usize,
    pub covariance: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualTimeReport {
    pub t: f64,
    /// Off-diagonal mass of the within-run joint histogram of `(x(t), x(t))`.
    pub single_run_offdiagonal_mass: f64,
    /// Number of run pairs `(2i, 2i + 1)` used for cross-run covariances.
    pub run_pairs: usize,
    /// Disjoint bin pairs with a defined covariance test.
    pub bin_pairs_tested: usize,
    pub max_abs_z: f64,
    /// Bin pairs whose covariance is more than `z_threshold` errors from 0.
    pub flagged: Vec<BinPairCovariance>,
    /// Runs that repeat an earlier run value for value.
    pub duplicated_runs: usize,
    pub z_threshold: f64,
    /// No flagged covariance and no duplicated runs.
    pub runs_independent: bool,
}

/// Checks the two facts behind the ensemble law of large numbers at time `t`:
/// the within-run joint density at equal times is diagonal, and indicators of
/// disjoint bins are uncorrelated across distinct runs.
pub fn equal_time_factorization_check(
    ensemble: &PathEnsemble,
    t: f64,
    bins: &BinEdges,
    z_threshold: f64,
) -> Result<EqualTimeReport> {
    let k = ensemble.grid.index_of(t)?;
    let x = ensemble.column(k);
    let n_bins = bins.n_bins();

    // Within-run joint counts of (x(t), x(t)).
    let mut joint = vec![0usize; n_bins * n_bins];
    let mut inside = 0usize;
    for &v in &x {
        if let (Ok(i), Ok(j)) = (bins.locate(v), bins.locate(v)) {
            joint[i * n_bins + j] += 1;
            inside += 1;
        }
    }
    let offdiag: usize = (0..n_bins)
        .flat_map(|i| (0..n_bins).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| joint[i * n_bins + j])
        .sum();
    let single_run_offdiagonal_mass = if inside == 0 { 0.0 } else { offdiag as f64 / inside as f64 };

    let m = x.len() / 2;
    if m < 2 {
        return Err(Error::insufficient("cross-run covariances need at least 4 runs"));
    }
    let bin_of: Vec<Option<usize>> = x.iter().map(|&v| bins.locate(v).ok()).collect();
    let mut flagged = Vec::new();
    let mut tested = 0;
    let mut max_abs_z: f64 = 0.0;
    for a in 0..n_bins {
        for b in 0..n_bins {
            if a == b {
                continue;
            }
            let ia: Vec<f64> = (0..m).map(|i| (bin_of[2 * i] == Some(a)) as u8 as f64).collect();
            let ib: Vec<f64> = (0..m).map(|i| (bin_of[2 * i + 1] == Some(b)) as u8 as f64).collect();
            let (ma, mb) = (stats::mean(&ia), stats::mean(&ib));
            if (m as f64) * ma * mb < MIN_EXPECTED_JOINT {
                continue;
            }
            let joint = ia.iter().zip(&ib).filter(|(p, q)| **p > 0.0 && **q > 0.0).count();
            let cov = joint as f64 / m as f64 - ma * mb;
            // spread of the estimate when the two indicators are independent
            let se = (ma * (1.0 - ma) * mb * (1.0 - mb) / m as f64).sqrt();
            if se == 0.0 {
                continue;
            }
            tested += 1;
            let z = cov.abs() / se;
            max_abs_z = max_abs_z.max(z);
            if z > z_threshold {
                flagged.push(BinPairCovariance {
                    bin_a: a,
                    bin_b: b,
                    covariance: cov,
                    std_error: se,
                    z,
                });
            }
        }
    }

    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut duplicated_runs = 0;
    for p in &ensemble.paths {
        let key: Vec<u64> = p.values.iter().map(|v| v.to_bits()).collect();
        let c = seen.entry(key).or_insert(0);
        if *c > 0 {
            duplicated_runs += 1;
        }
        *c += 1;
    }

    Ok(EqualTimeReport {
        t,
        single_run_offdiagonal_mass,
        run_pairs: m,
        bin_pairs_tested: tested,
        max_abs_z,
        runs_independent: flagged.is_empty() && duplicated_runs == 0,
        flagged,
        duplicated_runs,
        z_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_sim::{simulate_ensemble, ProcessSpec, TimeGrid};

    fn bins() -> BinEdges {
        BinEdges::uniform(-3.0, 3.0, 6).unwrap()
    }

    #[test]
    fn independent_wiener_runs_pass() {
        let g = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let ens = simulate_ensemble(&ProcessSpec::wiener(1.0), &g, 10_000, 5, 1).unwrap();
        let r = equal_time_factorization_check(&ens, 1.0, &bins(), 4.0).unwrap();
        assert_eq!(r.single_run_offdiagonal_mass, 0.0);
        assert!(r.runs_independent, "{r:?}");
        // the two tail bins (p ≈ 0.021) cannot be paired with each other
        assert_eq!(r.bin_pairs_tested, 28);
    }

    #[test]
    fn pairwise_copies_are_flagged_by_covariance() {
        let g = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let mut ens = simulate_ensemble(&ProcessSpec::wiener(1.0), &g, 10_000, 6, 1).unwrap();
        for i in 0..5000 {
            ens.paths[2 * i + 1].values = ens.paths[2 * i].values.clone();
        }
        let r = equal_time_factorization_check(&ens, 1.0, &bins(), 4.0).unwrap();
        assert!(!r.flagged.is_empty());
        assert!(r.flagged.iter().all(|f| f.covariance < 0.0));
        assert_eq!(r.duplicated_runs, 5000);
        assert!(!r.runs_independent);
    }

    #[test]
    fn too_few_runs() {
        let g = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let ens = simulate_ensemble(&ProcessSpec::wiener(1.0), &g, 3, 6, 1).unwrap();
        assert!(equal_time_factorization_check(&ens, 1.0, &bins(), 4.0).is_err());
    }
}
