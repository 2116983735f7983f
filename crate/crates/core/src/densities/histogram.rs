use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::sliding_increments;
use crate::process_sim::io::fmt_f64;
use crate::process_sim::{Path, PathEnsemble};
use crate::stats::quantile_sorted;

/// Upper bound on the number of bins chosen automatically.
pub const MAX_BINS: usize = 4096;
/// Raw samples are kept (for sample-level KS) up to this many.
pub const MAX_RETAINED_SAMPLES: usize = 1_000_000;
/// Largest tolerated fraction of samples falling outside the bins.
pub const OVERFLOW_TOLERANCE: f64 = 1e-3;

/// Strictly increasing bin edges; bins are `[e_i, e_{i+1})`, the last one closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BinEdges(Vec<f64>);

impl TryFrom<Vec<f64>> for BinEdges {
    type Error = Error;

    fn try_from(edges: Vec<f64>) -> Result<Self> {
        BinEdges::new(edges)
    }
}

impl From<BinEdges> for Vec<f64> {
    fn from(b: BinEdges) -> Self {
        b.0
    }
}

impl BinEdges {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::rejected("bin edges need at least two values"));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::rejected("bin edges must be finite and strictly increasing"));
        }
        Ok(BinEdges(edges))
    }

    pub fn uniform(lo: f64, hi: f64, n_bins: usize) -> Result<Self> {
        if n_bins == 0 || !(hi > lo) {
            return Err(Error::rejected(format!("bad uniform bins [{lo}, {hi}] x {n_bins}")));
        }
        let w = (hi - lo) / n_bins as f64;
        let mut edges: Vec<f64> = (0..n_bins).map(|i| lo + i as f64 * w).collect();
        edges.push(hi);
        BinEdges::new(edges)
    }

    /// Freedman–Diaconis bins over the pooled samples, so every density being
    /// compared shares one binning.
    pub fn freedman_diaconis(samples: &[&[f64]]) -> Result<Self> {
        let mut pooled: Vec<f64> = samples.iter().flat_map(|s| s.iter().copied()).collect();
        if pooled.is_empty() {
            return Err(Error::rejected("cannot choose bins for an empty sample"));
        }
        if pooled.iter().any(|x| !x.is_finite()) {
            return Err(Error::rejected("samples must be finite"));
        }
        pooled.sort_by(f64::total_cmp);
        let n = pooled.len() as f64;
        let lo = pooled[0];
        let hi = pooled[pooled.len() - 1];
        if hi <= lo {
            return BinEdges::new(vec![lo - 0.5, lo + 0.5]);
        }
        let iqr = quantile_sorted(&pooled, 0.75) - quantile_sorted(&pooled, 0.25);
        let mut width = 2.0 * iqr * n.powf(-1.0 / 3.0);
        if !(width > 0.0) {
            width = (hi - lo) / n.sqrt().ceil();
        }
        let n_bins = (((hi - lo) / width).ceil() as usize).clamp(1, MAX_BINS);
        BinEdges::uniform(lo, hi, n_bins)
    }

    pub fn edges(&self) -> &[f64] {
        &self.0
    }

    pub fn n_bins(&self) -> usize {
        self.0.len() - 1
    }

    pub fn width(&self, i: usize) -> f64 {
        self.0[i + 1] - self.0[i]
    }

    pub fn lo(&self) -> f64 {
        self.0[0]
    }

    pub fn hi(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// `Ok(bin)` inside the range, `Err(true)` above it, `Err(false)` below.
    pub fn locate(&self, x: f64) -> std::result::Result<usize, bool> {
        if x < self.lo() {
            return Err(false);
        }
        if x > self.hi() {
            return Err(true);
        }
        if x == self.hi() {
            return Ok(self.n_bins() - 1);
        }
        Ok(self.0.partition_point(|e| *e <= x) - 1)
    }
}

/// Which theoretical density a histogram estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DensityLabel {
    /// `f_s(z, T)` from windows along one or more paths.
    IncrementSliding { lag: f64 },
    /// `f(z, t, t + T)` across paths.
    IncrementEnsemble { t: f64, lag: f64 },
    /// `f₁(x, t)` across paths.
    OnePoint { t: f64 },
    Joint2pt,
}

/// Normalized histogram: `Σ mass · width = 1` over the in-range samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDensity {
    pub bin_edges: Vec<f64>,
    pub mass: Vec<f64>,
    pub n_samples: usize,
    pub label: DensityLabel,
    pub underflow: usize,
    pub overflow: usize,
    /// Sorted raw samples, kept for exact KS when not too many.
    #[serde(skip)]
    pub samples: Option<Vec<f64>>,
}

impl EmpiricalDensity {
    pub fn from_samples(samples: &[f64], bins: &BinEdges, label: DensityLabel) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::insufficient("no samples to histogram"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::numerical("histogram samples must be finite"));
        }
        let mut counts = vec![0usize; bins.n_bins()];
        let (mut under, mut over) = (0usize, 0usize);
        for &x in samples {
            match bins.locate(x) {
                Ok(i) => counts[i] += 1,
                Err(true) => over += 1,
                Err(false) => under += 1,
            }
        }
        let inside = samples.len() - under - over;
        if inside == 0 {
            return Err(Error::insufficient("every sample fell outside the bin range"));
        }
        let mass = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| c as f64 / (inside as f64 * bins.width(i)))
            .collect();
        let retained = (samples.len() <= MAX_RETAINED_SAMPLES).then(|| {
            let mut s = samples.to_vec();
            s.sort_by(f64::total_cmp);
            s
        });
        Ok(EmpiricalDensity {
            bin_edges: bins.edges().to_vec(),
            mass,
            n_samples: samples.len(),
            label,
            underflow: under,
            overflow: over,
            samples: retained,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.mass.len()
    }

    pub fn in_range(&self) -> usize {
        self.n_samples - self.underflow - self.overflow
    }

    /// `Σ mass · width`.
    pub fn integral(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, m)| m * (self.bin_edges[i + 1] - self.bin_edges[i]))
            .sum()
    }

    /// Probability in each bin.
    pub fn probabilities(&self) -> Vec<f64> {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, m)| m * (self.bin_edges[i + 1] - self.bin_edges[i]))
            .collect()
    }

    /// Fails when the density is not normalized or too many samples were
    /// clipped into the overflow counters.
    pub fn normalization_check(&self) -> Result<()> {
        let integral = self.integral();
        if (integral - 1.0).abs() > 1e-9 {
            return Err(Error::numerical(format!("density integrates to {integral}")));
        }
        let clipped = (self.underflow + self.overflow) as f64 / self.n_samples as f64;
        if clipped > OVERFLOW_TOLERANCE {
            return Err(Error::numerical(format!(
                "{:.3}% of samples fell outside the bins (underflow {}, overflow {})",
                100.0 * clipped,
                self.underflow,
                self.overflow
            )));
        }
        Ok(())
    }

    /// Index of the bin holding the most mass.
    pub fn mode_bin(&self) -> usize {
        let p = self.probabilities();
        (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0)
    }

    /// CSV with header `bin_left,bin_right,mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,mass\n");
        for (i, m) in self.mass.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_f64(self.bin_edges[i]),
                fmt_f64(self.bin_edges[i + 1]),
                fmt_f64(*m)
            ));
        }
        out
    }
}

fn edges_or_fd(bins: Option<&BinEdges>, samples: &[f64]) -> Result<BinEdges> {
    match bins {
        Some(b) => Ok(b.clone()),
        None => BinEdges::freedman_diaconis(&[samples]),
    }
}

/// `f_s(z, T)`: windows `x(t, T)` along one path.
pub fn sliding_increment_histogram(
    path: &Path,
    lag: f64,
    stride: f64,
    bins: Option<&BinEdges>,
) -> Result<EmpiricalDensity> {
    let z: Vec<f64> = sliding_increments(path, lag, stride)?.iter().map(|s| s.z).collect();
    if z.is_empty() {
        return Err(Error::insufficient(format!("no complete window of lag {lag} in the path")));
    }
    EmpiricalDensity::from_samples(&z, &edges_or_fd(bins, &z)?, DensityLabel::IncrementSliding { lag })
}

/// Sliding-window increments from every path with window starts in
/// `[t_start, t_end − lag]`, pooled into one histogram.
pub fn pooled_sliding_increment_histogram(
    ensemble: &PathEnsemble,
    lag: f64,
    stride: f64,
    t_start: f64,
    t_end: f64,
    bins: Option<&BinEdges>,
) -> Result<EmpiricalDensity> {
    let grid = &ensemble.grid;
    let lo = grid.time(grid.index_of(t_start)?) - 1e-9 * grid.dt;
    let hi = grid.time(grid.index_of(t_end)?) + 1e-9 * grid.dt;
    let mut z = Vec::new();
    for p in &ensemble.paths {
        z.extend(
            sliding_increments(p, lag, stride)?
                .into_iter()
                .filter(|s| s.t >= lo && s.t + s.lag <= hi)
                .map(|s| s.z),
        );
    }
    if z.is_empty() {
        return Err(Error::insufficient(format!(
            "no window of lag {lag} fits inside [{t_start}, {t_end}]"
        )));
    }
    EmpiricalDensity::from_samples(&z, &edges_or_fd(bins, &z)?, DensityLabel::IncrementSliding { lag })
}

/// `f(z, t, t + T)`: one increment per path at fixed `t`.
pub fn ensemble_increment_histogram(
    ensemble: &PathEnsemble,
    t: f64,
    lag: f64,
    bins: Option<&BinEdges>,
) -> Result<EmpiricalDensity> {
    let z = ensemble.increments_at(t, lag)?;
    EmpiricalDensity::from_samples(&z, &edges_or_fd(bins, &z)?, DensityLabel::IncrementEnsemble { t, lag })
}

/// `f₁(x, t)`: the strobed values `x_k(t)`.
pub fn one_point_histogram(ensemble: &PathEnsemble, t: f64, bins: Option<&BinEdges>) -> Result<EmpiricalDensity> {
    let x = ensemble.column(ensemble.grid.index_of(t)?);
    EmpiricalDensity::from_samples(&x, &edges_or_fd(bins, &x)?, DensityLabel::OnePoint { t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_sim::{SeedTag, TimeGrid};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear(v: f64) -> Path {
        let g = TimeGrid::new(0.0, 1.0, 50).unwrap();
        Path::new(g, g.times().map(|t| v * t).collect(), SeedTag::rng(0, 0)).unwrap()
    }

    #[test]
    fn drift_puts_all_mass_in_one_bin() {
        let bins = BinEdges::uniform(-5.0, 5.0, 20).unwrap();
        let d = sliding_increment_histogram(&linear(1.25), 2.0, 1.0, Some(&bins)).unwrap();
        let p = d.probabilities();
        let hit = bins.locate(2.5).unwrap();
        assert_eq!(p[hit], 1.0);
        assert_eq!(p.iter().filter(|&&x| x > 0.0).count(), 1);
        let flat = sliding_increment_histogram(&linear(0.0), 1.0, 1.0, Some(&bins)).unwrap();
        assert_eq!(flat.probabilities()[bins.locate(0.0).unwrap()], 1.0);
    }

    #[test]
    fn degenerate_sample_gets_a_unit_bin() {
        let d = sliding_increment_histogram(&linear(0.0), 1.0, 1.0, None).unwrap();
        assert_eq!(d.bin_edges, vec![-0.5, 0.5]);
        d.normalization_check().unwrap();
    }

    #[test]
    fn overflow_beyond_tolerance_fails_the_check() {
        let bins = BinEdges::uniform(-1.0, 1.0, 4).unwrap();
        let mut xs = vec![0.0; 999];
        xs.push(5.0);
        let ok = EmpiricalDensity::from_samples(&xs, &bins, DensityLabel::Joint2pt).unwrap();
        ok.normalization_check().unwrap();
        xs.push(-7.0);
        let bad = EmpiricalDensity::from_samples(&xs, &bins, DensityLabel::Joint2pt).unwrap();
        assert_eq!((bad.underflow, bad.overflow), (1, 1));
        assert!(bad.normalization_check().is_err());
    }

    #[test]
    fn locate_respects_half_open_bins() {
        let b = BinEdges::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(b.locate(0.0), Ok(0));
        assert_eq!(b.locate(1.0), Ok(1));
        assert_eq!(b.locate(2.0), Ok(1));
        assert_eq!(b.locate(2.5), Err(true));
        assert_eq!(b.locate(-0.1), Err(false));
        assert!(BinEdges::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn csv_header() {
        let b = BinEdges::uniform(0.0, 1.0, 2).unwrap();
        let d = EmpiricalDensity::from_samples(&[0.2, 0.7], &b, DensityLabel::OnePoint { t: 0.0 }).unwrap();
        let csv = d.to_csv();
        assert!(csv.starts_with("bin_left,bin_right,mass\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn densities_are_normalized_and_order_free(
            mut xs in proptest::collection::vec(-1e3f64..1e3, 1..400),
            seed in any::<u64>(),
        ) {
            let bins = BinEdges::freedman_diaconis(&[&xs]).unwrap();
            let a = EmpiricalDensity::from_samples(&xs, &bins, DensityLabel::Joint2pt).unwrap();
            prop_assert!((a.integral() - 1.0).abs() < 1e-9);
            prop_assert!(a.mass.iter().all(|m| *m >= 0.0));
            prop_assert_eq!(a.underflow + a.overflow, 0);
            xs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let b = EmpiricalDensity::from_samples(&xs, &bins, DensityLabel::Joint2pt).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
