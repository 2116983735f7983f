use std::fs;
use std::path::Path as FsPath;

use super::{CommandOutcome, Context, EXIT_OK};
use crate::data_io::{load_bundle, prepare_output_dir, ReportBody};
use crate::error::{Error, Result};
use crate::process_sim::io::fmt_f64;

fn synopsis(body: &ReportBody) -> Vec<String> {
    match body {
        ReportBody::Ensemble { n_paths, grid, .. } => vec![format!(
            "{n_paths} paths, t0 = {}, dt = {}, n_steps = {}",
            grid.t0, grid.dt, grid.n_steps
        )],
        ReportBody::Estimator(r) => vec![format!("{:.6} ± {:.6} (n = {})", r.estimate, r.std_error, r.n_samples)],
        ReportBody::Comparison(t) => {
            if t.rows.is_empty() {
                return vec!["no rows".into()];
            }
            t.rows
                .iter()
                .map(|r| {
                    let at = r.t.map(|t| format!(" t = {t}")).unwrap_or_default();
                    let z = r.z_vs_sliding.map(|z| format!(", z = {z:.2}")).unwrap_or_default();
                    let ks = r.ks_passes.map(|p| format!(", KS {}", if p { "pass" } else { "fail" })).unwrap_or_default();
                    let flag = if r.disagrees == Some(true) { ", DISAGREES" } else { "" };
                    format!(
                        "({}, T = {}) {}{}: {:.6} ± {:.6}{z}{ks}{flag}",
                        r.moment.name(),
                        r.lag,
                        r.variant,
                        at,
                        r.estimate,
                        r.std_error
                    )
                })
                .collect()
        }
        ReportBody::Density(d) => vec![format!(
            "{} bins, {} samples, {} outside range",
            d.mass.len(),
            d.n_samples,
            d.underflow + d.overflow
        )],
        ReportBody::Ks(k) => vec![format!(
            "D = {:.4}, p = {:.4}, {}",
            k.statistic,
            k.p_value,
            if k.passes { "pass" } else { "fail" }
        )],
        ReportBody::Curve(c) => vec![format!("{} lags", c.lags.len())],
        ReportBody::IncrementPair(p) => vec![format!(
            "raw {:.6}, normalized {:.4} ± {:.4}",
            p.raw.estimate, p.normalized.estimate, p.normalized.std_error
        )],
        ReportBody::Scalar { value } => vec![format!("{value:.6}")],
        ReportBody::Periodicity(p) => vec![format!(
            "best_period = {}, null threshold {:.3}",
            p.best_period.map_or("none".to_string(), |b| b.to_string()),
            p.null_threshold
        )],
        ReportBody::Boundary(b) => vec![format!(
            "boundary correlation {:.4} ± {:.4}, level correlation {:.4}",
            b.boundary_correlation, b.boundary_std_error, b.level_correlation
        )],
        ReportBody::Profile(p) => vec![format!("{} phases over {} runs", p.phases.len(), p.n_runs)],
        ReportBody::EqualTime(e) => vec![format!(
            "runs independent: {}, max |z| = {:.2}",
            e.runs_independent, e.max_abs_z
        )],
        ReportBody::TwoPoint(t) => vec![format!(
            "factorizes: {}, score {:.4} vs threshold {:.4}",
            t.factorization.factorizes, t.factorization.score, t.factorization.threshold
        )],
        ReportBody::Regularization(g) => vec![format!("{} of {} points filled", g.filled, g.n_output)],
    }
}

pub(super) fn run(ctx: &mut Context, bundle_dir: &FsPath) -> Result<CommandOutcome> {
    if !bundle_dir.is_dir() {
        return Err(Error::rejected(format!("{} is not a bundle directory", bundle_dir.display())));
    }
    let bundle = load_bundle(bundle_dir)?;
    let out = match &ctx.cli.out {
        Some(o) => {
            prepare_output_dir(o, ctx.cli.overwrite)?;
            ctx.out_dir = Some(o.clone());
            o.clone()
        }
        None => bundle_dir.to_path_buf(),
    };

    let mut text = format!(
        "bundle {}\nwritten by version {} ({})\n",
        bundle_dir.display(),
        bundle.metadata.version,
        bundle.metadata.command
    );
    if let Some(s) = bundle.metadata.seed {
        text.push_str(&format!("seed {} ({:?})\n", s.seed, s.source));
    }
    for n in &bundle.load_notes {
        text.push_str(&format!("warning: {n}\n"));
    }
    let analyses: Vec<_> = bundle
        .reports
        .iter()
        .filter(|r| !matches!(r.body, ReportBody::Ensemble { .. }))
        .collect();
    if analyses.is_empty() {
        text.push_str("no analyses\n");
    }
    let mut table = String::from("operation,params,kind,estimate,std_error\n");
    let reports_dir = out.join("reports");
    let mut artifacts = Vec::new();
    for (i, r) in bundle.reports.iter().enumerate() {
        text.push_str(&format!("{}\n", r.key()));
        for line in synopsis(&r.body) {
            text.push_str(&format!("  {line}\n"));
        }
        let params = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
        let (est, se) = match &r.body {
            ReportBody::Estimator(e) => (fmt_f64(e.estimate), fmt_f64(e.std_error)),
            ReportBody::Scalar { value } => (fmt_f64(*value), String::new()),
            ReportBody::IncrementPair(p) => (fmt_f64(p.normalized.estimate), fmt_f64(p.normalized.std_error)),
            _ => (String::new(), String::new()),
        };
        table.push_str(&format!("{},{params},{},{est},{se}\n", r.operation, r.body.kind()));
        if let ReportBody::Comparison(t) = &r.body {
            for row in &t.rows {
                let at = row.t.map(|t| format!(";t={t}")).unwrap_or_default();
                table.push_str(&format!(
                    "{}_{},lag={}{at},comparison_row,{},{}\n",
                    row.moment.name(),
                    row.variant,
                    row.lag,
                    fmt_f64(row.estimate),
                    fmt_f64(row.std_error)
                ));
            }
        }
        if let Some(csv) = r.body.to_csv() {
            fs::create_dir_all(&reports_dir).map_err(|e| Error::io(&reports_dir, e))?;
            let p = reports_dir.join(format!("{i:03}_{}.csv", r.operation));
            fs::write(&p, csv).map_err(|e| Error::io(&p, e))?;
            artifacts.push(p);
        }
    }
    let txt = out.join("summary.txt");
    fs::write(&txt, &text).map_err(|e| Error::io(&txt, e))?;
    let csv = out.join("summary.csv");
    fs::write(&csv, &table).map_err(|e| Error::io(&csv, e))?;
    artifacts.push(txt);
    artifacts.push(csv);
    Ok(CommandOutcome {
        exit_code: EXIT_OK,
        summary: text,
        artifacts,
    })
}
