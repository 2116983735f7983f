use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::{Moment, RunConfig, SeedRecord};
use super::series::GapStats;
use crate::densities::{EmpiricalDensity, EqualTimeReport, KsResult, TwoPointReport};
use crate::ensemble_builder::{BoundaryReport, IntradayProfile, PeriodicityReport};
use crate::error::{Error, Result};
use crate::estimators::{CorrelationCurve, EstimatorReport, IncrementPairReport};
use crate::process_sim::io::{fmt_f64, read_binary, read_csv, write_binary, write_csv};
use crate::process_sim::{PathEnsemble, ProcessSpec, TimeGrid};

pub const MANIFEST: &str = "manifest.json";
pub const FAILED_MARKER: &str = ".failed";
pub const ENSEMBLE_BINARY: &str = "ensemble.ensb";
pub const ENSEMBLE_CSV: &str = "paths.csv";
pub const BUNDLE_FORMAT: u64 = 1;
const REPORT_DIR: &str = "reports";

/// `Some(x)` for finite `x`.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// One line of a sliding-versus-ensemble comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub moment: Moment,
    pub lag: f64,
    /// `sliding` (first path), `sliding_pooled` (all paths) or `ensemble`.
    pub variant: String,
    /// Strobe time for ensemble rows.
    pub t: Option<f64>,
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub autocorr_lag1: f64,
    /// Joint-SE distance from the reference sliding row.
    pub z_vs_sliding: Option<f64>,
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
    pub ks_passes: Option<bool>,
    pub disagrees: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    /// Rows farther apart than this many joint SE are flagged.
    pub disagreement_z: f64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        let optb = |x: Option<bool>| x.map(|b| b.to_string()).unwrap_or_default();
        let mut out = String::from(
            "moment,lag,variant,t,estimate,std_error,n_samples,autocorr_lag1,z_vs_sliding,ks_statistic,ks_p_value,ks_passes,disagrees\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.moment.name(),
                fmt_f64(r.lag),
                r.variant,
                opt(r.t),
                fmt_f64(r.estimate),
                fmt_f64(r.std_error),
                r.n_samples,
                fmt_f64(r.autocorr_lag1),
                opt(r.z_vs_sliding),
                opt(r.ks_statistic),
                opt(r.ks_p_value),
                optb(r.ks_passes),
                optb(r.disagrees),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "snake_case")]
pub enum ReportBody {
    Ensemble {
        n_paths: usize,
        grid: TimeGrid,
        process: Option<ProcessSpec>,
        files: Vec<String>,
    },
    Estimator(EstimatorReport),
    Comparison(ComparisonTable),
    Density(EmpiricalDensity),
    Ks(KsResult),
    Curve(CorrelationCurve),
    IncrementPair(IncrementPairReport),
    Scalar { value: f64 },
    Periodicity(PeriodicityReport),
    Boundary(BoundaryReport),
    Profile(IntradayProfile),
    EqualTime(EqualTimeReport),
    TwoPoint(TwoPointReport),
    Regularization(GapStats),
}

impl ReportBody {
    pub fn kind(&self) -> &'static str {
        match self {
            ReportBody::Ensemble { .. } => "ensemble",
            ReportBody::Estimator(_) => "estimator",
            ReportBody::Comparison(_) => "comparison",
            ReportBody::Density(_) => "density",
            ReportBody::Ks(_) => "ks",
            ReportBody::Curve(_) => "curve",
            ReportBody::IncrementPair(_) => "increment_pair",
            ReportBody::Scalar { .. } => "scalar",
            ReportBody::Periodicity(_) => "periodicity",
            ReportBody::Boundary(_) => "boundary",
            ReportBody::Profile(_) => "profile",
            ReportBody::EqualTime(_) => "equal_time",
            ReportBody::TwoPoint(_) => "two_point",
            ReportBody::Regularization(_) => "regularization",
        }
    }

    /// Plot-ready table, for the bodies that have one.
    pub fn to_csv(&self) -> Option<String> {
        match self {
            ReportBody::Comparison(t) => Some(t.to_csv()),
            ReportBody::Density(d) => Some(d.to_csv()),
            ReportBody::Curve(c) => Some(c.to_csv()),
            ReportBody::Profile(p) => Some(p.to_csv()),
            ReportBody::TwoPoint(t) => Some(t.joint.to_csv()),
            ReportBody::Periodicity(p) => {
                let mut out = String::from("period,score\n");
                for (c, s) in p.candidate_periods.iter().zip(&p.scores) {
                    out.push_str(&format!("{c},{}\n", fmt_f64(*s)));
                }
                Some(out)
            }
            ReportBody::Boundary(b) => {
                let mut out = String::from("lag,correlation,std_error\n");
                for d in &b.decay {
                    out.push_str(&format!("{},{},{}\n", d.lag, fmt_f64(d.correlation), fmt_f64(d.std_error)));
                }
                Some(out)
            }
            _ => None,
        }
    }
}

impl From<EmpiricalDensity> for ReportBody {
    fn from(mut d: EmpiricalDensity) -> Self {
        // raw samples are a cache for KS and are not persisted
        d.samples = None;
        ReportBody::Density(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub operation: String,
    pub params: BTreeMap<String, f64>,
    pub body: ReportBody,
}

impl Report {
    pub fn new(operation: impl Into<String>, params: &[(&str, f64)], body: impl Into<ReportBody>) -> Self {
        Report {
            operation: operation.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            body: body.into(),
        }
    }

    /// `operation(k=v, …)`
    pub fn key(&self) -> String {
        if self.params.is_empty() {
            return self.operation.clone();
        }
        let p: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}({})", self.operation, p.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMetadata {
    /// Version of the writing program.
    pub version: String,
    pub command: String,
    pub seed: Option<SeedRecord>,
}

impl BundleMetadata {
    pub fn current(command: &str, seed: Option<SeedRecord>) -> Self {
        BundleMetadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub config: RunConfig,
    pub metadata: BundleMetadata,
    pub reports: Vec<Report>,
    /// Warnings raised while loading; never persisted.
    #[serde(skip)]
    pub load_notes: Vec<String>,
}

impl ResultBundle {
    pub fn new(config: RunConfig, metadata: BundleMetadata) -> Self {
        ResultBundle {
            config,
            metadata,
            reports: Vec::new(),
            load_notes: Vec::new(),
        }
    }

    pub fn push(&mut self, report: Report) {
        self.reports.push(report);
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn checksum_of(bundle_value: &Value) -> String {
    format!("sha256:{}", sha256_hex(bundle_value.to_string().as_bytes()))
}

fn integrity(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Integrity {
        field: field.into(),
        message: message.into(),
    }
}

/// Creates `dir`, refusing to reuse a non-empty directory unless `overwrite`.
pub fn prepare_output_dir(dir: &FsPath, overwrite: bool) -> Result<()> {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(Error::rejected(format!("{} exists and is not a directory", dir.display())));
        }
        let non_empty = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?.next().is_some();
        if non_empty {
            if !overwrite {
                return Err(Error::rejected(format!(
                    "output directory {} is not empty (use --overwrite to replace it)",
                    dir.display()
                )));
            }
            fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Leaves a `.failed` marker holding `message` in `dir`.
pub fn mark_failed(dir: &FsPath, message: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join(FAILED_MARKER);
    fs::write(&p, format!("{message}\n")).map_err(|e| Error::io(&p, e))
}

/// Writes CSV artifacts and the manifest into an existing directory.
pub fn write_bundle(bundle: &ResultBundle, dir: &FsPath) -> Result<PathBuf> {
    let value = serde_json::to_value(bundle).map_err(|e| integrity("bundle", e.to_string()))?;
    // catch non-finite numbers and other lossy values before they hit disk
    for (i, r) in bundle.reports.iter().enumerate() {
        let back: Option<Report> = serde_json::to_value(r).ok().and_then(|v| serde_json::from_value(v).ok());
        if back.as_ref() != Some(r) {
            return Err(integrity(
                format!("reports[{i}]"),
                format!("{} does not survive serialization (non-finite value?)", r.key()),
            ));
        }
    }

    let mut artifacts = Vec::new();
    let report_dir = dir.join(REPORT_DIR);
    for (i, r) in bundle.reports.iter().enumerate() {
        if let Some(csv) = r.body.to_csv() {
            fs::create_dir_all(&report_dir).map_err(|e| Error::io(&report_dir, e))?;
            let name = format!("{REPORT_DIR}/{i:03}_{}.csv", r.operation);
            let p = dir.join(&name);
            fs::write(&p, csv).map_err(|e| Error::io(&p, e))?;
            artifacts.push(name);
        }
    }

    let manifest = serde_json::json!({
        "format": BUNDLE_FORMAT,
        "checksum": checksum_of(&value),
        "artifacts": artifacts,
        "bundle": value,
    });
    let path = dir.join(MANIFEST);
    let tmp = dir.join(format!("{MANIFEST}.tmp"));
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&tmp, text + "\n").map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    let marker = dir.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    Ok(path)
}

pub fn save_bundle(bundle: &ResultBundle, dir: &FsPath, overwrite: bool) -> Result<PathBuf> {
    prepare_output_dir(dir, overwrite)?;
    write_bundle(bundle, dir)
}

pub fn load_bundle(dir: &FsPath) -> Result<ResultBundle> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Value = serde_json::from_str(&text).map_err(|e| integrity("manifest", e.to_string()))?;
    let get = |field: &str| manifest.get(field).ok_or_else(|| integrity(field, "missing"));

    let format = get("format")?
        .as_u64()
        .ok_or_else(|| integrity("format", "not an unsigned integer"))?;
    if format != BUNDLE_FORMAT {
        return Err(integrity("format", format!("unsupported bundle format {format}")));
    }
    let checksum = get("checksum")?
        .as_str()
        .ok_or_else(|| integrity("checksum", "not a string"))?;
    let body = get("bundle")?;
    if !body.is_object() {
        return Err(integrity("bundle", "not an object"));
    }
    let part = |field: &str| -> Result<Value> {
        body.get(field)
            .cloned()
            .ok_or_else(|| integrity(format!("bundle.{field}"), "missing"))
    };
    let config: RunConfig =
        serde_json::from_value(part("config")?).map_err(|e| integrity("bundle.config", e.to_string()))?;
    let metadata: BundleMetadata =
        serde_json::from_value(part("metadata")?).map_err(|e| integrity("bundle.metadata", e.to_string()))?;
    let raw_reports = part("reports")?;
    let raw_reports = raw_reports
        .as_array()
        .ok_or_else(|| integrity("bundle.reports", "not an array"))?;
    let mut reports = Vec::with_capacity(raw_reports.len());
    for (i, r) in raw_reports.iter().enumerate() {
        reports.push(
            serde_json::from_value(r.clone()).map_err(|e| integrity(format!("bundle.reports[{i}]"), e.to_string()))?,
        );
    }
    if checksum_of(body) != checksum {
        return Err(integrity("checksum", "manifest contents do not match the recorded checksum"));
    }

    let mut load_notes = Vec::new();
    let ours = env!("CARGO_PKG_VERSION");
    if metadata.version != ours {
        load_notes.push(format!(
            "bundle written by version {} but read by version {ours}",
            metadata.version
        ));
    }
    Ok(ResultBundle {
        config,
        metadata,
        reports,
        load_notes,
    })
}

/// Writes the binary and CSV forms of `ensemble` into `dir`.
pub fn save_ensemble(ensemble: &PathEnsemble, dir: &FsPath) -> Result<Vec<String>> {
    let bin = dir.join(ENSEMBLE_BINARY);
    let f = fs::File::create(&bin).map_err(|e| Error::io(&bin, e))?;
    write_binary(ensemble, BufWriter::new(f))?;
    let csv = dir.join(ENSEMBLE_CSV);
    let f = fs::File::create(&csv).map_err(|e| Error::io(&csv, e))?;
    write_csv(ensemble, BufWriter::new(f))?;
    Ok(vec![ENSEMBLE_BINARY.to_string(), ENSEMBLE_CSV.to_string()])
}

/// Reads the ensemble stored in a bundle directory, preferring the binary form.
pub fn load_ensemble(dir: &FsPath) -> Result<PathEnsemble> {
    let bin = dir.join(ENSEMBLE_BINARY);
    if bin.exists() {
        let f = fs::File::open(&bin).map_err(|e| Error::io(&bin, e))?;
        return read_binary(BufReader::new(f));
    }
    let csv = dir.join(ENSEMBLE_CSV);
    let f = fs::File::open(&csv).map_err(|e| Error::io(&csv, e))?;
    read_csv(BufReader::new(f))
}
