//! Two-sample Kolmogorov–Smirnov comparison.

use serde::{Deserialize, Serialize};

use super::histogram::EmpiricalDensity;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KsMethod {
    /// Exact statistic over the raw samples.
    Samples,
    /// Largest gap between binned CDFs; never exceeds the sample statistic.
    Binned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub alpha: f64,
    /// `true` when the two samples are compatible at level `alpha`.
    pub passes: bool,
    pub method: KsMethod,
    pub n_a: usize,
    pub n_b: usize,
}

/// Asymptotic critical value `c(α) · √((n + m) / (n m))`.
pub fn ks_critical_value(alpha: f64, n_a: usize, n_b: usize) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    let (n, m) = (n_a as f64, n_b as f64);
    c * ((n + m) / (n * m)).sqrt()
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (−1)^(j−1) exp(−2 j² λ²)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn p_value(d: f64, n_a: usize, n_b: usize) -> f64 {
    let ne = (n_a as f64 * n_b as f64) / (n_a + n_b) as f64;
    let sq = ne.sqrt();
    kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::rejected(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Sup-distance between the empirical CDFs of two sorted samples.
fn sorted_statistic(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

fn result(statistic: f64, alpha: f64, n_a: usize, n_b: usize, method: KsMethod) -> KsResult {
    let critical_value = ks_critical_value(alpha, n_a, n_b);
    KsResult {
        statistic,
        critical_value,
        p_value: p_value(statistic, n_a, n_b),
        alpha,
        passes: statistic <= critical_value,
        method,
        n_a,
        n_b,
    }
}

/// Two-sample KS on raw samples.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult> {
    check_alpha(alpha)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::rejected("KS needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::rejected("KS samples must not contain NaN"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(result(sorted_statistic(&a, &b), alpha, a.len(), b.len(), KsMethod::Samples))
}

fn binned_cdf_at(d: &EmpiricalDensity, x: f64) -> f64 {
    let e = &d.bin_edges;
    if x <= e[0] {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..d.mass.len() {
        let (l, r) = (e[i], e[i + 1]);
        if x >= r {
            acc += d.mass[i] * (r - l);
        } else {
            acc += d.mass[i] * (x - l);
            break;
        }
    }
    acc.min(1.0)
}

/// KS distance between two densities: exact on retained samples, otherwise
/// the largest gap between piecewise-linear binned CDFs over the union of
/// both edge sets. Symmetric in its arguments.
pub fn ks_distance(a: &EmpiricalDensity, b: &EmpiricalDensity, alpha: f64) -> Result<KsResult> {
    check_alpha(alpha)?;
    if a.in_range() == 0 || b.in_range() == 0 || a.mass.is_empty() || b.mass.is_empty() {
        return Err(Error::rejected("KS needs two non-empty densities"));
    }
    if let (Some(sa), Some(sb)) = (&a.samples, &b.samples) {
        return Ok(result(sorted_statistic(sa, sb), alpha, sa.len(), sb.len(), KsMethod::Samples));
    }
    let mut xs: Vec<f64> = a.bin_edges.iter().chain(&b.bin_edges).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let d = xs
        .iter()
        .map(|&x| (binned_cdf_at(a, x) - binned_cdf_at(b, x)).abs())
        .fold(0.0, f64::max);
    Ok(result(d, alpha, a.in_range(), b.in_range(), KsMethod::Binned))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{BinEdges, DensityLabel};

    fn density(xs: &[f64], keep: bool) -> EmpiricalDensity {
        let b = BinEdges::freedman_diaconis(&[xs]).unwrap();
        let mut d = EmpiricalDensity::from_samples(xs, &b, DensityLabel::Joint2pt).unwrap();
        if !keep {
            d.samples = None;
        }
        d
    }

    #[test]
    fn identical_samples_have_zero_distance() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let r = ks_two_sample(&xs, &xs, 0.01).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.passes);
        let d = density(&xs, false);
        assert_eq!(ks_distance(&d, &d, 0.01).unwrap().statistic, 0.0);
    }

    #[test]
    fn disjoint_supports_have_unit_distance() {
        let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..30).map(|i| 100.0 + i as f64).collect();
        assert_eq!(ks_two_sample(&a, &b, 0.01).unwrap().statistic, 1.0);
        let (da, db) = (density(&a, false), density(&b, false));
        let r = ks_distance(&da, &db, 0.01).unwrap();
        assert_eq!(r.method, KsMethod::Binned);
        assert!((r.statistic - 1.0).abs() < 1e-12);
        assert!(!r.passes);
    }

    #[test]
    fn distance_is_symmetric() {
        let a: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 10.0).collect();
        let b: Vec<f64> = (0..150).map(|i| ((i * 53) % 89) as f64 / 8.0 - 1.0).collect();
        for keep in [true, false] {
            let (da, db) = (density(&a, keep), density(&b, keep));
            let ab = ks_distance(&da, &db, 0.05).unwrap();
            let ba = ks_distance(&db, &da, 0.05).unwrap();
            assert_eq!(ab.statistic, ba.statistic);
        }
    }

    #[test]
    fn ties_are_handled_jointly() {
        let a = [1.0, 1.0, 2.0, 2.0];
        let b = [1.0, 2.0];
        assert_eq!(ks_two_sample(&a, &b, 0.05).unwrap().statistic, 0.0);
    }

    #[test]
    fn critical_values_and_survival() {
        // c(0.05) ≈ 1.358, c(0.01) ≈ 1.628
        assert!((ks_critical_value(0.05, 1, 1) / 2f64.sqrt() - 1.3581).abs() < 1e-3);
        assert!((ks_critical_value(0.01, 1, 1) / 2f64.sqrt() - 1.6276).abs() < 1e-3);
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-3);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn rejects_empty_inputs_and_bad_alpha() {
        assert!(ks_two_sample(&[], &[1.0], 0.05).is_err());
        assert!(ks_two_sample(&[1.0], &[1.0], 1.5).is_err());
    }
}
