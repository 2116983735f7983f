use std::path::Path as FsPath;

use super::{in_request, CommandOutcome, Context, EXIT_OK};
use crate::data_io::{
    finite, load_ensemble, load_series, regularize, write_bundle, BundleMetadata, ComparisonRow, ComparisonTable,
    GapStats, InputSource, Moment, Report, ReportBody, ResultBundle,
};
use crate::densities::{equal_time_factorization_check, ks_two_sample, BinEdges, DensityLabel, EmpiricalDensity};
use crate::ensemble_builder::{LongSeries, ValueKind};
use crate::error::{Error, Result};
use crate::estimators::{
    ensemble_moment, ensemble_sliding_moment, ergodicity_diagnostic, increment_autocorrelation, pair_correlation,
    sliding_increments, volatility_correlation, window_notes, EstimatorReport,
};
use crate::process_sim::{simulate_ensemble, Path, PathEnsemble, SeedTag, TimeGrid};

/// Sliding and ensemble estimates farther apart than this many joint
/// standard errors are flagged as disagreeing.
pub const DISAGREEMENT_Z: f64 = 5.0;
const EQUAL_TIME_Z: f64 = 4.0;

/// Reads `input.series`, regularizing if asked; prices become log prices.
pub(super) fn input_series(input: &InputSource) -> Result<(LongSeries, Option<GapStats>)> {
    let path = input
        .series
        .as_deref()
        .ok_or_else(|| Error::rejected("`input.series` is required here"))?;
    let mut series = load_series(path, input.value_kind)?;
    let mut gaps = None;
    if let Some(dt) = input.regularize_dt {
        let (s, g) = regularize(&series, dt)?;
        series = s;
        gaps = Some(g);
    }
    if series.value_kind == ValueKind::Price {
        let logs = series.values.iter().map(|p| p.ln()).collect();
        series = LongSeries::new(series.timestamps, logs, ValueKind::Level)?;
    }
    Ok((series, gaps))
}

fn series_as_ensemble(series: &LongSeries) -> Result<PathEnsemble> {
    let dt = series.uniform_step()?;
    let grid = TimeGrid::new(series.timestamps[0], dt, series.len() - 1)?;
    let tag = SeedTag::Segment {
        index: 0,
        start: 0,
        base: 0.0,
    };
    PathEnsemble::new(grid, vec![Path::new(grid, series.values.clone(), tag)?])
}

fn row(moment: Moment, lag: f64, variant: &str, t: Option<f64>, r: &EstimatorReport) -> ComparisonRow {
    ComparisonRow {
        moment,
        lag,
        variant: variant.to_string(),
        t,
        estimate: r.estimate,
        std_error: r.std_error,
        n_samples: r.n_samples,
        autocorr_lag1: r.autocorr_lag1,
        z_vs_sliding: None,
        ks_statistic: None,
        ks_p_value: None,
        ks_passes: None,
        disagrees: None,
    }
}

fn shared_bins(samples: &[&[f64]], n_bins: Option<usize>) -> Result<BinEdges> {
    match n_bins {
        None => BinEdges::freedman_diaconis(samples),
        Some(n) => {
            let lo = samples.iter().flat_map(|s| s.iter()).copied().fold(f64::INFINITY, f64::min);
            let hi = samples.iter().flat_map(|s| s.iter()).copied().fold(f64::NEG_INFINITY, f64::max);
            let pad = 1e-9 * (hi - lo).abs().max(1.0);
            BinEdges::uniform(lo - pad, hi + pad, n)
        }
    }
}

pub(super) fn run(ctx: &mut Context, config: &FsPath) -> Result<CommandOutcome> {
    let cfg = ctx.config(config)?;
    let seed = ctx.seed(&cfg)?;
    let mut reports = Vec::new();
    let ens = match (&cfg.process, &cfg.input) {
        (Some(spec), _) => {
            let grid = cfg.grid.expect("validated config has a grid");
            simulate_ensemble(spec, &grid, cfg.n_paths, seed.seed, cfg.substeps)?
        }
        (None, Some(input)) => match &input.bundle {
            Some(b) => load_ensemble(b)?,
            None => {
                let (series, gaps) = input_series(input)?;
                if let Some(g) = gaps {
                    reports.push(Report::new("regularize", &[], ReportBody::Regularization(g)));
                }
                series_as_ensemble(&series)?
            }
        },
        (None, None) => unreachable!("validated config has a source"),
    };
    cfg.check_against_grid(&ens.grid)?;
    let dir = ctx.claim_output(cfg.output_dir.as_deref())?;

    let a = &cfg.analysis;
    let grid = ens.grid;
    let stride = a.stride.unwrap_or(grid.dt);
    let [lo, hi] = a.window.unwrap_or([grid.t0, grid.end()]);
    let eps = 1e-9 * grid.dt;
    let base_times = if a.base_times.is_empty() { vec![grid.t0] } else { a.base_times.clone() };
    let lags = if a.lags.is_empty() { vec![grid.dt] } else { a.lags.clone() };
    let multi = ens.n_paths() >= 2;

    let mut table = ComparisonTable {
        disagreement_z: DISAGREEMENT_Z,
        rows: Vec::new(),
    };
    for &lag in &lags {
        let req = format!("lag T = {lag}");
        let window = |p: &Path| -> Result<Vec<f64>> {
            Ok(sliding_increments(p, lag, stride)?
                .into_iter()
                .filter(|s| s.t >= lo - eps && s.t + s.lag <= hi + eps)
                .map(|s| s.z)
                .collect())
        };
        let z0 = window(&ens.paths[0]).map_err(|e| in_request(&req, e))?;
        if z0.len() < 2 {
            return Err(Error::insufficient(format!(
                "{req}: {} sliding window(s) fit in [{lo}, {hi}]; need at least 2",
                z0.len()
            )));
        }
        let pooled: Vec<f64> = if multi {
            let mut all = Vec::new();
            for p in &ens.paths {
                all.extend(window(p)?);
            }
            all
        } else {
            Vec::new()
        };
        let mut strobed = Vec::new();
        if multi {
            for &t in &base_times {
                let z = ens
                    .increments_at(t, lag)
                    .map_err(|e| in_request(&format!("{req}, t = {t}"), e))?;
                strobed.push((t, z));
            }
        }
        let reference_z = if multi { &pooled } else { &z0 };

        for &moment in &a.moments {
            let p = moment.power();
            let req = format!("{} at {req}", moment.name());
            let summands: Vec<f64> = z0.iter().map(|z| z.powi(p as i32)).collect();
            let sliding = EstimatorReport::from_summands(&summands, window_notes(lag, stride));
            table.rows.push(row(moment, lag, "sliding", None, &sliding));
            let reference = if multi {
                let pooled_r =
                    ensemble_sliding_moment(&ens, lag, stride, p, lo, hi).map_err(|e| in_request(&req, e))?;
                table.rows.push(row(moment, lag, "sliding_pooled", None, &pooled_r));
                pooled_r
            } else {
                sliding
            };
            for (t, z) in &strobed {
                let r = ensemble_moment(&ens, *t, lag, p).map_err(|e| in_request(&req, e))?;
                let mut line = row(moment, lag, "ensemble", Some(*t), &r);
                let zd = reference.z_distance(&r);
                line.z_vs_sliding = finite(zd);
                line.disagrees = Some(zd > DISAGREEMENT_Z);
                let ks = ks_two_sample(reference_z, z, a.ks_alpha).map_err(|e| in_request(&req, e))?;
                line.ks_statistic = Some(ks.statistic);
                line.ks_p_value = Some(ks.p_value);
                line.ks_passes = Some(ks.passes);
                table.rows.push(line);
            }
        }

        if multi {
            let mut all: Vec<&[f64]> = vec![&pooled];
            all.extend(strobed.iter().map(|(_, z)| z.as_slice()));
            let bins = shared_bins(&all, a.n_bins).map_err(|e| in_request(&req, e))?;
            let d = EmpiricalDensity::from_samples(&pooled, &bins, DensityLabel::IncrementSliding { lag })?;
            reports.push(Report::new("sliding_increment_density", &[("lag", lag)], d));
            for (t, z) in &strobed {
                let d = EmpiricalDensity::from_samples(z, &bins, DensityLabel::IncrementEnsemble { t: *t, lag })?;
                reports.push(Report::new("ensemble_increment_density", &[("lag", lag), ("t", *t)], d));
            }
            for &t in &base_times {
                let k = grid.index_of(t)?;
                let l = grid.lag_steps(lag)?;
                if k >= l && k + l <= grid.n_steps {
                    let params = [("lag", lag), ("t", t)];
                    let r = increment_autocorrelation(&ens, t, lag).map_err(|e| in_request(&req, e))?;
                    reports.push(Report::new("increment_autocorrelation", &params, ReportBody::IncrementPair(r)));
                    let r = volatility_correlation(&ens, t, lag).map_err(|e| in_request(&req, e))?;
                    reports.push(Report::new("volatility_correlation", &params, ReportBody::IncrementPair(r)));
                }
            }
        }
    }

    if multi && !a.correlation_lags.is_empty() {
        let t = base_times[0];
        let curve = pair_correlation(&ens, t, &a.correlation_lags).map_err(|e| in_request("pair correlation", e))?;
        let erg = ergodicity_diagnostic(&curve)?;
        reports.push(Report::new("pair_correlation", &[("t", t)], ReportBody::Curve(curve)));
        reports.push(Report::new("ergodicity_diagnostic", &[("t", t)], ReportBody::Scalar { value: erg }));
    }

    if multi && a.equal_time {
        let t = base_times[0];
        let x = ens.column(grid.index_of(t)?);
        let bins = shared_bins(&[&x], a.n_bins)?;
        let r = equal_time_factorization_check(&ens, t, &bins, EQUAL_TIME_Z)?;
        reports.push(Report::new("equal_time_factorization", &[("t", t)], ReportBody::EqualTime(r)));
    }

    let summary = summarize(&table, ens.n_paths(), &dir);
    let mut bundle = ResultBundle::new(cfg.clone(), BundleMetadata::current("analyze", cfg.process.is_some().then_some(seed)));
    bundle.push(Report::new("comparison", &[], ReportBody::Comparison(table)));
    for r in reports {
        bundle.push(r);
    }
    let manifest = write_bundle(&bundle, &dir)?;
    Ok(CommandOutcome {
        exit_code: EXIT_OK,
        summary,
        artifacts: vec![manifest, dir.join("reports")],
    })
}

fn summarize(table: &ComparisonTable, n_paths: usize, dir: &FsPath) -> String {
    let mut out = format!("analyzed {n_paths} path(s)\n");
    for r in &table.rows {
        let t = r.t.map(|t| format!(" t = {t}")).unwrap_or_default();
        let z = r.z_vs_sliding.map(|z| format!(" z = {z:.2}")).unwrap_or_default();
        let flag = if r.disagrees == Some(true) { " DISAGREES" } else { "" };
        out.push_str(&format!(
            "{} T = {} {}{}: {:.6} ± {:.6}{}{}\n",
            r.moment.name(),
            r.lag,
            r.variant,
            t,
            r.estimate,
            r.std_error,
            z,
            flag
        ));
    }
    out.push_str(&format!("written to {}", dir.display()));
    out
}
