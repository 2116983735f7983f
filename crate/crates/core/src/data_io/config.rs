use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble_builder::ValueKind;
use crate::error::{Error, Result};
use crate::process_sim::{ProcessSpec, TimeGrid, DEFAULT_SUBSTEPS};

/// Environment variable that overrides the config seed.
pub const SEED_ENV: &str = "ENSEMBLAB_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<TimeGrid>,
    #[serde(default = "one")]
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default)]
    pub analysis: AnalysisRequest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Either a bundle written by `simulate` / `build-ensemble` or a raw
/// `(timestamp, value)` CSV series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<PathBuf>,
    #[serde(default = "level")]
    pub value_kind: ValueKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularize_dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    /// `⟨x(t, T)⟩`
    Mean,
    /// `⟨x²(t, T)⟩`
    Msf,
}

impl Moment {
    pub fn power(self) -> u32 {
        match self {
            Moment::Mean => 1,
            Moment::Msf => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Moment::Mean => "mean",
            Moment::Msf => "msf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisRequest {
    #[serde(default = "default_moments")]
    pub moments: Vec<Moment>,
    /// Increment lags `T`, in time units.
    #[serde(default)]
    pub lags: Vec<f64>,
    /// Sliding-window stride; defaults to the grid step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<f64>,
    /// Time range `[start, end]` for sliding windows; defaults to the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Strobe times for ensemble estimators; defaults to the grid start.
    #[serde(default)]
    pub base_times: Vec<f64>,
    /// Fixed bin count; Freedman–Diaconis when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_bins: Option<usize>,
    #[serde(default = "default_alpha")]
    pub ks_alpha: f64,
    /// Lags for the pair correlation from the first base time.
    #[serde(default)]
    pub correlation_lags: Vec<f64>,
    #[serde(default)]
    pub candidate_periods: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_period: Option<usize>,
    #[serde(default)]
    pub phase0: usize,
    /// Increment lag in samples for periodicity detection.
    #[serde(default = "one")]
    pub lag_samples: usize,
    /// Run the equal-time factorization check at the first base time.
    #[serde(default)]
    pub equal_time: bool,
}

impl Default for AnalysisRequest {
    fn default() -> Self {
        AnalysisRequest {
            moments: default_moments(),
            lags: Vec::new(),
            stride: None,
            window: None,
            base_times: Vec::new(),
            n_bins: None,
            ks_alpha: default_alpha(),
            correlation_lags: Vec::new(),
            candidate_periods: Vec::new(),
            fixed_period: None,
            phase0: 0,
            lag_samples: 1,
            equal_time: false,
        }
    }
}

fn one() -> usize {
    1
}
fn default_substeps() -> usize {
    DEFAULT_SUBSTEPS
}
fn level() -> ValueKind {
    ValueKind::Level
}
fn default_moments() -> Vec<Moment> {
    vec![Moment::Mean, Moment::Msf]
}
fn default_alpha() -> f64 {
    0.01
}

fn field_err(field: &str, e: Error) -> Error {
    let msg = match e {
        Error::RejectedInput(m) => m,
        other => other.to_string(),
    };
    Error::rejected(format!("`{field}`: {msg}"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Structural checks that do not need any input file.
    pub fn validate(&self) -> Result<()> {
        match (&self.process, &self.input) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(Error::rejected("exactly one of `process` and `input` must be given"));
            }
            _ => {}
        }
        if let Some(spec) = &self.process {
            spec.validate().map_err(|e| field_err("process", e))?;
            let grid = self
                .grid
                .ok_or_else(|| Error::rejected("`grid`: required when `process` is given"))?;
            grid.validate().map_err(|e| field_err("grid", e))?;
            if self.n_paths == 0 {
                return Err(Error::rejected("`n_paths`: must be at least 1"));
            }
            if self.substeps == 0 {
                return Err(Error::rejected("`substeps`: must be at least 1"));
            }
        }
        if let Some(input) = &self.input {
            if input.bundle.is_some() == input.series.is_some() {
                return Err(Error::rejected(
                    "`input`: exactly one of `bundle` and `series` must be given",
                ));
            }
            if let Some(dt) = input.regularize_dt {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(Error::rejected(format!("`input.regularize_dt`: must be > 0, got {dt}")));
                }
            }
        }
        let a = &self.analysis;
        if !(a.ks_alpha > 0.0 && a.ks_alpha < 1.0) {
            return Err(Error::rejected(format!(
                "`analysis.ks_alpha`: must lie in (0, 1), got {}",
                a.ks_alpha
            )));
        }
        if a.n_bins == Some(0) {
            return Err(Error::rejected("`analysis.n_bins`: must be at least 1"));
        }
        if a.lag_samples == 0 {
            return Err(Error::rejected("`analysis.lag_samples`: must be at least 1"));
        }
        if let Some(grid) = self.grid {
            self.check_against_grid(&grid)?;
        }
        Ok(())
    }

    /// Every requested time must sit on `grid`.
    pub fn check_against_grid(&self, grid: &TimeGrid) -> Result<()> {
        let a = &self.analysis;
        for &lag in &a.lags {
            grid.lag_steps(lag).map_err(|e| field_err("analysis.lags", e))?;
        }
        for &lag in &a.correlation_lags {
            grid.steps(lag).map_err(|e| field_err("analysis.correlation_lags", e))?;
        }
        if let Some(s) = a.stride {
            grid.lag_steps(s).map_err(|e| field_err("analysis.stride", e))?;
        }
        for &t in &a.base_times {
            grid.index_of(t).map_err(|e| field_err("analysis.base_times", e))?;
        }
        if let Some([lo, hi]) = a.window {
            let i0 = grid.index_of(lo).map_err(|e| field_err("analysis.window", e))?;
            let i1 = grid.index_of(hi).map_err(|e| field_err("analysis.window", e))?;
            if i1 <= i0 {
                return Err(Error::rejected(format!("`analysis.window`: empty range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Relative paths in the config are taken relative to `base`.
    pub fn resolve_paths(&mut self, base: &FsPath) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(input) = &mut self.input {
            input.bundle.as_mut().map(fix);
            input.series.as_mut().map(fix);
        }
        self.output_dir.as_mut().map(fix);
    }
}

/// Reads and validates a config file; relative paths resolve against the
/// file's directory.
pub fn load_config(path: &FsPath) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(dir) = path.parent() {
        cfg.resolve_paths(dir);
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Config,
    Environment,
    CommandLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub source: SeedSource,
}

/// Command line beats the environment, which beats the config file.
pub fn resolve_seed(config_seed: u64, cli_seed: Option<u64>, env_value: Option<&str>) -> Result<SeedRecord> {
    if let Some(seed) = cli_seed {
        return Ok(SeedRecord {
            seed,
            source: SeedSource::CommandLine,
        });
    }
    if let Some(raw) = env_value {
        let seed = raw
            .trim()
            .parse()
            .map_err(|_| Error::rejected(format!("{SEED_ENV}={raw:?} is not an unsigned integer")))?;
        return Ok(SeedRecord {
            seed,
            source: SeedSource::Environment,
        });
    }
    Ok(SeedRecord {
        seed: config_seed,
        source: SeedSource::Config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const WIENER: &str = r#"{
        "process": {"kind": "wiener", "params": {"sigma": 1.0}},
        "grid": {"t0": 0.0, "dt": 1.0, "n_steps": 100},
        "n_paths": 10,
        "seed": 7,
        "analysis": {"lags": [1, 2]}
    }"#;

    #[test]
    fn parses_and_validates() {
        let cfg = RunConfig::from_json(WIENER).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.substeps, DEFAULT_SUBSTEPS);
        assert_eq!(cfg.analysis.moments, vec![Moment::Mean, Moment::Msf]);
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn exactly_one_source() {
        let mut cfg = RunConfig::from_json(WIENER).unwrap();
        cfg.input = Some(InputSource {
            bundle: Some("x".into()),
            series: None,
            value_kind: ValueKind::Level,
            regularize_dt: None,
        });
        assert!(cfg.validate().unwrap_err().to_string().contains("exactly one"));
        cfg.process = None;
        cfg.grid = None;
        cfg.validate().unwrap();
        cfg.input = None;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bad_hurst_names_the_parameter_and_range() {
        let text = WIENER.replace(r#""kind": "wiener", "params": {"sigma": 1.0}"#, r#""kind": "fbm", "params": {"hurst": 1.5, "sigma": 1.0}"#);
        let err = RunConfig::from_json(&text).unwrap().validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("process") && msg.contains('H') && msg.contains("(0, 1)"), "{msg}");
    }

    #[test]
    fn off_grid_lag_is_rejected() {
        let text = WIENER.replace("[1, 2]", "[1.5]");
        let err = RunConfig::from_json(&text).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("analysis.lags"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let err = RunConfig::from_json("{\n\"seed\": 1,\n\"bogus\": 2\n}").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(1, None, None).unwrap().source, SeedSource::Config);
        let env = resolve_seed(1, None, Some("99")).unwrap();
        assert_eq!((env.seed, env.source), (99, SeedSource::Environment));
        assert_eq!(resolve_seed(1, Some(5), Some("99")).unwrap().seed, 5);
        assert!(resolve_seed(1, None, Some("abc")).is_err());
    }
}
