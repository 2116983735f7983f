use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::histogram::BinEdges;
use crate::error::{Error, Result};
use crate::process_sim::io::fmt_f64;
use crate::process_sim::{stream_rng, PathEnsemble};

/// Number of resamples in the product-of-marginals null.
pub const FACTORIZATION_RESAMPLES: usize = 199;
/// Significance level for declaring that a joint density does not factor.
pub const FACTORIZATION_LEVEL: f64 = 0.01;

/// Normalized 2-D histogram of `(x(t1, T), x(t2, T))` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDensity2D {
    pub bin_edges_z1: Vec<f64>,
    pub bin_edges_z2: Vec<f64>,
    /// Row-major `B1 × B2` density values.
    pub mass: Vec<Vec<f64>>,
    pub t1: f64,
    pub t2: f64,
    pub lag: f64,
    pub n_samples: usize,
    /// Pairs with at least one coordinate outside the bins.
    pub outside: usize,
}

impl JointDensity2D {
    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for (i, row) in self.mass.iter().enumerate() {
            let w1 = self.bin_edges_z1[i + 1] - self.bin_edges_z1[i];
            for (j, m) in row.iter().enumerate() {
                acc += m * w1 * (self.bin_edges_z2[j + 1] - self.bin_edges_z2[j]);
            }
        }
        acc
    }

    /// Probability mass per cell.
    pub fn probabilities(&self) -> Vec<Vec<f64>> {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let w1 = self.bin_edges_z1[i + 1] - self.bin_edges_z1[i];
                row.iter()
                    .enumerate()
                    .map(|(j, m)| m * w1 * (self.bin_edges_z2[j + 1] - self.bin_edges_z2[j]))
                    .collect()
            })
            .collect()
    }

    /// CSV triples `z1_bin,z2_bin,mass` (bin indices), nonzero cells only.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z1_bin,z2_bin,mass\n");
        for (i, row) in self.mass.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                if *m > 0.0 {
                    out.push_str(&format!("{i},{j},{}\n", fmt_f64(*m)));
                }
            }
        }
        out
    }
}

/// Resampling test of `joint = product of marginals`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationTest {
    /// Total-variation distance between the joint and its marginal product.
    pub score: f64,
    /// 99th percentile of the score under the null.
    pub threshold: f64,
    pub p_value: f64,
    pub resamples: usize,
    pub factorizes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointReport {
    pub joint: JointDensity2D,
    pub factorization: FactorizationTest,
    pub notes: String,
}

fn cell_counts(z1: &[f64], z2: &[f64], b1: &BinEdges, b2: &BinEdges) -> (Vec<usize>, usize) {
    let n2 = b2.n_bins();
    let mut counts = vec![0usize; b1.n_bins() * n2];
    let mut inside = 0;
    for (a, b) in z1.iter().zip(z2) {
        if let (Ok(i), Ok(j)) = (b1.locate(*a), b2.locate(*b)) {
            counts[i * n2 + j] += 1;
            inside += 1;
        }
    }
    (counts, inside)
}

fn tv_from_counts(counts: &[usize], inside: usize, n1: usize, n2: usize) -> f64 {
    if inside == 0 {
        return 0.0;
    }
    let n = inside as f64;
    let mut row = vec![0.0; n1];
    let mut col = vec![0.0; n2];
    for i in 0..n1 {
        for j in 0..n2 {
            let p = counts[i * n2 + j] as f64 / n;
            row[i] += p;
            col[j] += p;
        }
    }
    let mut tv = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            tv += (counts[i * n2 + j] as f64 / n - row[i] * col[j]).abs();
        }
    }
    0.5 * tv
}

/// Joint histogram of increments at two strobe times with a factorization
/// score. The null distribution permutes the second coordinate across paths,
/// which keeps both marginals and destroys any pairing.
pub fn two_point_increment_histogram(
    ensemble: &PathEnsemble,
    t1: f64,
    t2: f64,
    lag: f64,
    bins: Option<&BinEdges>,
    resample_seed: u64,
) -> Result<TwoPointReport> {
    let z1 = ensemble.increments_at(t1, lag)?;
    let z2 = ensemble.increments_at(t2, lag)?;
    if z1.len() < 2 {
        return Err(Error::insufficient("a joint histogram needs at least 2 paths"));
    }
    let edges = match bins {
        Some(b) => b.clone(),
        None => BinEdges::freedman_diaconis(&[&z1, &z2])?,
    };
    let (n1, n2) = (edges.n_bins(), edges.n_bins());
    let (counts, inside) = cell_counts(&z1, &z2, &edges, &edges);
    if inside == 0 {
        return Err(Error::insufficient("no pair fell inside the bins"));
    }
    let mass = (0..n1)
        .map(|i| {
            (0..n2)
                .map(|j| counts[i * n2 + j] as f64 / (inside as f64 * edges.width(i) * edges.width(j)))
                .collect()
        })
        .collect();
    let score = tv_from_counts(&counts, inside, n1, n2);

    let mut rng = stream_rng(resample_seed, 0);
    let mut shuffled = z2.clone();
    let mut null: Vec<f64> = (0..FACTORIZATION_RESAMPLES)
        .map(|_| {
            shuffled.shuffle(&mut rng);
            let (c, inn) = cell_counts(&z1, &shuffled, &edges, &edges);
            tv_from_counts(&c, inn, n1, n2)
        })
        .collect();
    null.sort_by(f64::total_cmp);
    let exceed = null.iter().filter(|&&s| s >= score).count();
    let p_value = (1 + exceed) as f64 / (FACTORIZATION_RESAMPLES + 1) as f64;
    let idx = ((1.0 - FACTORIZATION_LEVEL) * (FACTORIZATION_RESAMPLES + 1) as f64).floor() as usize - 1;
    let threshold = null[idx.min(null.len() - 1)];

    let mut notes = Vec::new();
    let (lo, hi) = (t1.min(t2), t1.max(t2));
    if hi < lo + lag - 1e-12 {
        notes.push(format!("overlapping windows: |t2 - t1| < lag {lag}"));
    }
    Ok(TwoPointReport {
        joint: JointDensity2D {
            bin_edges_z1: edges.edges().to_vec(),
            bin_edges_z2: edges.edges().to_vec(),
            mass,
            t1,
            t2,
            lag,
            n_samples: z1.len(),
            outside: z1.len() - inside,
        },
        factorization: FactorizationTest {
            score,
            threshold,
            p_value,
            resamples: FACTORIZATION_RESAMPLES,
            factorizes: p_value > FACTORIZATION_LEVEL,
        },
        notes: notes.join("; "),
    })
}
