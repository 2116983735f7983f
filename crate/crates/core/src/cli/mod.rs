//! Batch command-line front end: `simulate`, `analyze`, `build-ensemble`
//! and `report`.

mod analyze;
mod build;
mod report;
mod simulate;

use std::ffi::OsString;
use std::path::{Path as FsPath, PathBuf};

use clap::{Parser, Subcommand};

use crate::data_io::{
    load_config, mark_failed, prepare_output_dir, resolve_seed, RunConfig, SeedRecord, SEED_ENV,
};
use crate::error::{Error, ErrorClass, Result};

#[derive(Debug, Parser)]
#[command(name = "ensemblab", version, about = "Sliding-window versus ensemble averages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides the config and ENSEMBLAB_SEED).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Replace a non-empty output directory.
    #[arg(long, global = true)]
    pub overwrite: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an ensemble and store it as a bundle.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare sliding and ensemble estimators.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cut a long series into runs, detecting the period if needed.
    BuildEnsemble {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize a bundle as text plus plot-ready CSV.
    Report {
        /// Bundle directory.
        bundle: PathBuf,
    },
}

/// What a command did: exit code, printable summary, files written.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_ANALYSIS: i32 = 2;

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Input => EXIT_INPUT,
        ErrorClass::Analysis => EXIT_ANALYSIS,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            CommandOutcome {
                exit_code: code,
                summary: e.to_string(),
                artifacts: Vec::new(),
            }
        }
    }
}

pub fn run(cli: Cli) -> CommandOutcome {
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => return failure(&Error::rejected(format!("--threads: {e}")), None),
    };
    let mut ctx = Context {
        cli: &cli,
        out_dir: None,
    };
    let result = pool.install(|| match &cli.command {
        Command::Simulate { config } => simulate::run(&mut ctx, config),
        Command::Analyze { config } => analyze::run(&mut ctx, config),
        Command::BuildEnsemble { config } => build::run(&mut ctx, config),
        Command::Report { bundle } => report::run(&mut ctx, bundle),
    });
    match result {
        Ok(outcome) => outcome,
        Err(e) => failure(&e, ctx.out_dir.as_deref()),
    }
}

fn failure(e: &Error, prepared: Option<&FsPath>) -> CommandOutcome {
    let mut artifacts = Vec::new();
    if let Some(dir) = prepared {
        if mark_failed(dir, &e.to_string()).is_ok() {
            artifacts.push(dir.join(crate::data_io::FAILED_MARKER));
        }
    }
    CommandOutcome {
        exit_code: exit_code(e),
        summary: format!("error: {e}"),
        artifacts,
    }
}

/// Per-invocation state; `out_dir` is set once the directory is ours, so
/// failures after that point leave a `.failed` marker.
pub(crate) struct Context<'a> {
    pub cli: &'a Cli,
    pub out_dir: Option<PathBuf>,
}

impl Context<'_> {
    pub fn config(&self, path: &FsPath) -> Result<RunConfig> {
        load_config(path)
    }

    pub fn seed(&self, cfg: &RunConfig) -> Result<SeedRecord> {
        let env = std::env::var(SEED_ENV).ok();
        resolve_seed(cfg.seed, self.cli.seed, env.as_deref())
    }

    /// Claims the output directory named by `--out` or the config.
    pub fn claim_output(&mut self, cfg_dir: Option<&FsPath>) -> Result<PathBuf> {
        let dir = self
            .cli
            .out
            .clone()
            .or_else(|| cfg_dir.map(FsPath::to_path_buf))
            .ok_or_else(|| Error::rejected("no output directory: pass --out or set `output_dir`"))?;
        prepare_output_dir(&dir, self.cli.overwrite)?;
        self.out_dir = Some(dir.clone());
        Ok(dir)
    }
}

/// Re-labels an error with the request that produced it, keeping its class.
pub(crate) fn in_request(request: &str, e: Error) -> Error {
    match e {
        Error::RejectedInput(m) => Error::RejectedInput(format!("{request}: {m}")),
        Error::InsufficientData(m) => Error::InsufficientData(format!("{request}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{request}: {m}")),
        other => other,
    }
}
