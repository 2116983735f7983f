//! Configuration, series ingestion, regularization and result persistence.

mod bundle;
mod config;
mod series;

pub use bundle::{
    finite, load_bundle, load_ensemble, mark_failed, prepare_output_dir, save_bundle, save_ensemble,
    write_bundle, BundleMetadata, ComparisonRow, ComparisonTable, Report, ReportBody, ResultBundle,
    BUNDLE_FORMAT, ENSEMBLE_BINARY, ENSEMBLE_CSV, FAILED_MARKER, MANIFEST,
};
pub use config::{
    load_config, resolve_seed, AnalysisRequest, InputSource, Moment, RunConfig, SeedRecord, SeedSource, SEED_ENV,
};
pub use series::{load_series, read_series, regularize, GapStats};
