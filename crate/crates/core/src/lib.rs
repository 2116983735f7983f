//! Monte Carlo laboratory contrasting sliding-window time averages with
//! strobed ensemble averages.
//!
//! The crate simulates processes with known analytic structure (Wiener,
//! fractional Brownian motion, drift-free Itô diffusions, Ornstein–Uhlenbeck),
//! computes both kinds of average over them, and reports when the two agree.
//! It can also cut a single long periodic series into day-like runs and treat
//! those runs as an ensemble.
//!
//! Module map:
//!
//! - [`process_sim`]: time grids, process specifications, path and ensemble
//!   generation, CSV/binary ensemble persistence.
//! - [`estimators`]: sliding and ensemble moments, increment correlations,
//!   pair correlation, ergodicity and convergence-rate diagnostics.
//! - [`densities`]: empirical densities, two-sample KS, joint increment
//!   histograms and the equal-time factorization check.
//! - [`ensemble_builder`]: return conversion, segmentation, periodicity
//!   detection, boundary diagnostics and intraday profiles.
//! - [`data_io`]: run configuration, series ingestion, regularization and
//!   result bundles.
//! - [`cli`]: the batch command-line front end.

pub mod cli;
pub mod data_io;
pub mod densities;
pub mod ensemble_builder;
pub mod error;
pub mod estimators;
pub mod process_sim;
pub mod stats;

pub use error::{Error, ErrorClass, Result};
pub use process_sim::{Path, PathEnsemble, ProcessSpec, SeedTag, TimeGrid};
