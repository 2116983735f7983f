//! Empirical densities from sliding windows and from ensembles, and the
//! comparisons between them.

mod equal_time;
mod histogram;
mod joint;
mod ks;

pub use equal_time::{equal_time_factorization_check, BinPairCovariance, EqualTimeReport};
pub use histogram::{
    ensemble_increment_histogram, one_point_histogram, pooled_sliding_increment_histogram,
    sliding_increment_histogram, BinEdges, DensityLabel, EmpiricalDensity, MAX_BINS,
    MAX_RETAINED_SAMPLES, OVERFLOW_TOLERANCE,
};
pub use joint::{
    two_point_increment_histogram, FactorizationTest, JointDensity2D, TwoPointReport,
    FACTORIZATION_LEVEL, FACTORIZATION_RESAMPLES,
};
pub use ks::{ks_critical_value, ks_distance, ks_two_sample, kolmogorov_survival, KsMethod, KsResult};
