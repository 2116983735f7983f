use std::path::Path as FsPath;

use super::analyze::input_series;
use super::{CommandOutcome, Context, EXIT_ANALYSIS, EXIT_OK};
use crate::data_io::{
    mark_failed, save_ensemble, write_bundle, BundleMetadata, Report, ReportBody, ResultBundle, FAILED_MARKER,
};
use crate::ensemble_builder::{boundary_correlation_check, detect_periodicity, intraday_profile, segment_series};
use crate::error::{Error, Result};

pub(super) fn run(ctx: &mut Context, config: &FsPath) -> Result<CommandOutcome> {
    let cfg = ctx.config(config)?;
    let input = cfg
        .input
        .as_ref()
        .filter(|i| i.series.is_some())
        .ok_or_else(|| Error::rejected("build-ensemble needs `input.series` in the config"))?;
    let a = &cfg.analysis;
    if a.fixed_period.is_none() && a.candidate_periods.is_empty() {
        return Err(Error::rejected(
            "`analysis`: give `candidate_periods` or a `fixed_period`",
        ));
    }
    let seed = ctx.seed(&cfg)?;
    let (series, gaps) = input_series(input)?;
    let dir = ctx.claim_output(cfg.output_dir.as_deref())?;

    let mut bundle = ResultBundle::new(cfg.clone(), BundleMetadata::current("build-ensemble", Some(seed)));
    if let Some(g) = gaps {
        bundle.push(Report::new("regularize", &[], ReportBody::Regularization(g)));
    }
    let period = match a.fixed_period {
        Some(p) => p,
        None => {
            let rep = detect_periodicity(&series, &a.candidate_periods, a.lag_samples, seed.seed)?;
            let best = rep.best_period;
            let scores: Vec<String> = rep
                .candidate_periods
                .iter()
                .zip(&rep.scores)
                .map(|(p, s)| format!("{p}: {s:.3}"))
                .collect();
            let line = format!("periodicity scores {{{}}}, null threshold {:.3}", scores.join(", "), rep.null_threshold);
            bundle.push(Report::new("detect_periodicity", &[("lag_samples", a.lag_samples as f64)], ReportBody::Periodicity(rep)));
            match best {
                Some(p) => p,
                None => {
                    let manifest = write_bundle(&bundle, &dir)?;
                    let msg = format!("no candidate period beats the null; {line}");
                    mark_failed(&dir, &msg)?;
                    return Ok(CommandOutcome {
                        exit_code: EXIT_ANALYSIS,
                        summary: format!("error: {msg}\nreport written to {}", dir.display()),
                        artifacts: vec![manifest, dir.join(FAILED_MARKER)],
                    });
                }
            }
        }
    };

    let ens = segment_series(&series, period, a.phase0)?;
    let files = save_ensemble(&ens, &dir)?;
    bundle.push(Report::new(
        "segment_series",
        &[("period", period as f64), ("phase0", a.phase0 as f64)],
        ReportBody::Ensemble {
            n_paths: ens.n_paths(),
            grid: ens.grid,
            process: None,
            files: files.clone(),
        },
    ));
    let lag = a.lag_samples as f64 * ens.grid.dt;
    let profile = intraday_profile(&ens, lag)?;
    bundle.push(Report::new("intraday_profile", &[("lag", lag)], ReportBody::Profile(profile)));
    let mut boundary_line = String::from("boundary check skipped (fewer than 3 runs)");
    if ens.n_paths() >= 3 {
        let b = boundary_correlation_check(&ens, &series)?;
        boundary_line = format!(
            "boundary return correlation {:.4} ± {:.4}, level correlation {:.4}",
            b.boundary_correlation, b.boundary_std_error, b.level_correlation
        );
        bundle.push(Report::new("boundary_correlation_check", &[("period", period as f64)], ReportBody::Boundary(b)));
    }
    let manifest = write_bundle(&bundle, &dir)?;

    let how = if a.fixed_period.is_some() { "fixed period" } else { "best_period" };
    let mut artifacts: Vec<_> = files.iter().map(|f| dir.join(f)).collect();
    artifacts.push(manifest);
    Ok(CommandOutcome {
        exit_code: EXIT_OK,
        summary: format!(
            "{how} = {period}: {} runs of {} samples\n{boundary_line}\nwritten to {}",
            ens.n_paths(),
            period,
            dir.display()
        ),
        artifacts,
    })
}
