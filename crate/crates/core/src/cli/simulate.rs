use std::path::Path as FsPath;

use super::{CommandOutcome, Context, EXIT_OK};
use crate::data_io::{save_ensemble, write_bundle, BundleMetadata, Report, ReportBody, ResultBundle};
use crate::error::{Error, Result};
use crate::process_sim::simulate_ensemble;

pub(super) fn run(ctx: &mut Context, config: &FsPath) -> Result<CommandOutcome> {
    let cfg = ctx.config(config)?;
    let (Some(spec), Some(grid)) = (cfg.process.clone(), cfg.grid) else {
        return Err(Error::rejected("simulate needs `process` and `grid` in the config"));
    };
    let seed = ctx.seed(&cfg)?;
    let dir = ctx.claim_output(cfg.output_dir.as_deref())?;

    let ens = simulate_ensemble(&spec, &grid, cfg.n_paths, seed.seed, cfg.substeps)?;
    let files = save_ensemble(&ens, &dir)?;
    let mut bundle = ResultBundle::new(cfg.clone(), BundleMetadata::current("simulate", Some(seed)));
    bundle.push(Report::new(
        "simulate",
        &[],
        ReportBody::Ensemble {
            n_paths: ens.n_paths(),
            grid,
            process: Some(spec.clone()),
            files: files.clone(),
        },
    ));
    let manifest = write_bundle(&bundle, &dir)?;

    let mut artifacts: Vec<_> = files.iter().map(|f| dir.join(f)).collect();
    artifacts.push(manifest);
    Ok(CommandOutcome {
        exit_code: EXIT_OK,
        summary: format!(
            "simulated N = {} paths of {} on grid t0 = {}, dt = {}, n_steps = {} with seed {} ({:?})\nwritten to {}",
            ens.n_paths(),
            spec.label(),
            grid.t0,
            grid.dt,
            grid.n_steps,
            seed.seed,
            seed.source,
            dir.display()
        ),
        artifacts,
    })
}
