//! C ABI for `ensemblab`.
//!
//! Every fallible entry point returns an [`EnsStatus`]; on failure the
//! message is available from [`ens_last_error`] on the same thread.
//! Ensembles live behind the opaque [`EnsEnsemble`] handle and must be
//! released with [`ens_ensemble_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ensemblab::densities::ks_two_sample;
use ensemblab::error::{Error, ErrorClass};
use ensemblab::estimators::{
    ensemble_moment, ensemble_sliding_moment, ergodicity_diagnostic, increment_autocorrelation, pair_correlation,
    sliding_increment_mean, sliding_msf, volatility_correlation, CorrelationCurve, CorrelationKind, EstimatorReport,
};
use ensemblab::process_sim::io::{read_binary, write_binary, write_csv};
use ensemblab::process_sim::{fbm_covariance, simulate_ensemble, Path, PathEnsemble, ProcessSpec, SeedTag, TimeGrid};

/// Result codes. `1` and `2` match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsStatus {
    Ok = 0,
    /// Malformed or out-of-range arguments.
    InvalidInput = 1,
    /// Valid input the analysis could not handle (too little data,
    /// numerical failure).
    AnalysisError = 2,
    NullPointer = 3,
    /// A caller-provided buffer is too short.
    BufferTooSmall = 4,
    /// Internal panic caught at the boundary.
    Panic = 5,
}

/// Point estimate with its naive standard error.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnsEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub autocorr_lag1: f64,
}

impl From<&EstimatorReport> for EnsEstimate {
    fn from(r: &EstimatorReport) -> Self {
        EnsEstimate {
            estimate: r.estimate,
            std_error: r.std_error,
            n_samples: r.n_samples,
            autocorr_lag1: r.autocorr_lag1,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnsKsResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub alpha: f64,
    /// Non-zero when the samples are compatible at level `alpha`.
    pub passes: bool,
    pub n_a: usize,
    pub n_b: usize,
}

/// Opaque ensemble handle.
pub struct EnsEnsemble(PathEnsemble);

struct Failure(EnsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Input => EnsStatus::InvalidInput,
            ErrorClass::Analysis => EnsStatus::AnalysisError,
        };
        Failure(code, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(EnsStatus::NullPointer, format!("`{what}` is NULL"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(EnsStatus::InvalidInput, msg.into())
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EnsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EnsStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_last_error(&msg);
            code
        }
        Err(_) => {
            set_last_error("internal panic");
            EnsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{what}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn ens_arg<'a>(p: *const EnsEnsemble) -> Result<&'a PathEnsemble, Failure> {
    p.as_ref().map(|e| &e.0).ok_or_else(|| null("ensemble"))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn boxed(e: PathEnsemble) -> *mut EnsEnsemble {
    Box::into_raw(Box::new(EnsEnsemble(e)))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ens_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ens_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Simulates `n_paths` paths of the process described by `spec_json`
/// (`{"kind": ..., "params": {...}}`) on the grid `t0 + k·dt`,
/// `k = 0..=n_steps`.
///
/// # Safety
/// `spec_json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ens_ensemble_simulate(
    spec_json: *const c_char,
    t0: f64,
    dt: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    substeps: usize,
    out: *mut *mut EnsEnsemble,
) -> EnsStatus {
    guard(|| {
        let text = str_arg(spec_json, "spec_json")?;
        let spec: ProcessSpec =
            serde_json::from_str(text).map_err(|e| invalid(format!("process spec: {e}")))?;
        let grid = TimeGrid::new(t0, dt, n_steps)?;
        let ens = simulate_ensemble(&spec, &grid, n_paths, seed, substeps)?;
        write_out(out, boxed(ens), "out")
    })
}

/// Builds an ensemble from caller data: `n_paths` rows of `n_points` values,
/// row-major.
///
/// # Safety
/// `values` must point to `n_paths * n_points` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ens_ensemble_from_values(
    values: *const f64,
    n_paths: usize,
    n_points: usize,
    t0: f64,
    dt: f64,
    out: *mut *mut EnsEnsemble,
) -> EnsStatus {
    guard(|| {
        if n_points < 2 {
            return Err(invalid("each path needs at least 2 points"));
        }
        let len = n_paths
            .checked_mul(n_points)
            .ok_or_else(|| invalid("n_paths * n_points overflows"))?;
        let data = slice_arg(values, len, "values")?;
        let grid = TimeGrid::new(t0, dt, n_points - 1)?;
        let paths = data
            .chunks(n_points)
            .enumerate()
            .map(|(index, row)| {
                let tag = SeedTag::Segment {
                    index,
                    start: index * n_points,
                    base: 0.0,
                };
                Path::new(grid, row.to_vec(), tag)
            })
            .collect::<Result<Vec<_>, _>>()?;
        write_out(out, boxed(PathEnsemble::new(grid, paths)?), "out")
    })
}

/// Reads an ensemble in the `ENSB1` binary layout.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ens_ensemble_read_binary(path: *const c_char, out: *mut *mut EnsEnsemble) -> EnsStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        let f = File::open(p).map_err(|e| Failure::from(Error::io(p, e)))?;
        let ens = read_binary(BufReader::new(f))?;
        write_out(out, boxed(ens), "out")
    })
}

/// Writes the ensemble in the `ENSB1` binary layout.
///
/// # Safety
/// `ensemble` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ens_ensemble_write_binary(ensemble: *const EnsEnsemble, path: *const c_char) -> EnsStatus {
    guard(|| {
        let ens = ens_arg(ensemble)?;
        let p = str_arg(path, "path")?;
        let f = File::create(p).map_err(|e| Failure::from(Error::io(p, e)))?;
        write_binary(ens, BufWriter::new(f))?;
        Ok(())
    })
}

/// Writes the ensemble as CSV (`path_id,t,x`).
///
/// # Safety
/// As [`ens_ensemble_write_binary`].
#[no_mangle]
pub unsafe extern "C" fn ens_ensemble_write_csv(ensemble: *const EnsEnsemble, path: *const c_char) -> EnsStatus {
    guard(|| {
        let ens = ens_arg(ensemble)?;
        let p = str_arg(path, "path")?;
        let f = File::create(p).map_err(|e| Failure::from(Error::io(p, e)))?;
        write_csv(ens, BufWriter::new(f))?;
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `ensemble` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ens_ensemble_free(ensemble: *mut EnsEnsemble) {
    if !ensemble.is_null() {
        drop(Box::from_raw(ensemble));
    }
}

/// Number of paths; 0 for NULL.
///
/// # Safety
/// `ensemble` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ens_ensemble_n_paths(ensemble: *const EnsEnsemble) -> usize {
    ensemble.as_ref().map_or(0, |e| e.0.n_paths())
}

/// Points per path (`n_steps + 1`); 0 for NULL.
///
/// # Safety
/// `ensemble` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ens_ensemble_n_points(ensemble: *const EnsEnsemble) -> usize {
    ensemble.as_ref().map_or(0, |e| e.0.grid.n_points())
}

/// Grid start and step.
///
/// # Safety
/// `ensemble` must come from this library; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ens_ensemble_grid(ensemble: *const EnsEnsemble, t0: *mut f64, dt: *mut f64) -> EnsStatus {
    guard(|| {
        let ens = ens_arg(ensemble)?;
        write_out(t0, ens.grid.t0, "t0")?;
        write_out(dt, ens.grid.dt, "dt")
    })
}

/// Copies path `index` into `out[0..n_points]`.
///
/// # Safety
/// `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ens_ensemble_path_values(
    ensemble: *const EnsEnsemble,
    index: usize,
    out: *mut f64,
    len: usize,
) -> EnsStatus {
    guard(|| {
        let ens = ens_arg(ensemble)?;
        let path = ens
            .paths
            .get(index)
            .ok_or_else(|| invalid(format!("path index {index} out of range ({} paths)", ens.n_paths())))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len < path.values.len() {
            return Err(Failure(
                EnsStatus::BufferTooSmall,
                format!("buffer holds {len} values, path has {}", path.values.len()),
            ));
        }
        ptr::copy_nonoverlapping(path.values.as_ptr(), out, path.values.len());
        Ok(())
    })
}

/// `⟨x(t, lag)^power⟩` across paths, `power` 1 or 2.
///
/// # Safety
/// `ensemble` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ens_ensemble_moment(
    ensemble: *const EnsEnsemble,
    t: f64,
    lag: f64,
    power: u32,
    out: *mut EnsEstimate,
) -> EnsStatus {
    guard(|| {
        let r = ensemble_moment(ens_arg(ensemble)?, t, lag, power)?;
        write_out(out, EnsEstimate::from(&r), "out")
    })
}

/// Sliding time average of `x(t, lag)^power` along path `index`.
///
/// # Safety
/// `ensemble` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ens_sliding_moment(
    ensemble: *const EnsEnsemble,
    index: usize,
    lag: f64,
    stride: f64,
    power: u32,
    out: *mut EnsEstimate,
) -> EnsStatus {
    guard(|| {
        let ens = ens_arg(ensemble)?;
        let path = ens
            .paths
            .get(index)
            .ok_or_else(|| invalid(format!("path index {index} out of range")))?;
        let r = match power {
            1 => sliding_increment_mean(path, lag, stride)?,
            2 => sliding_msf(path, lag, stride)?,
            p => return Err(invalid(format!("power must be 1 or 2, got {p}"))),
        };
        write_out(out, EnsEstimate::from(&r), "out")
    })
}

/// Per-path sliding averages over `[t_start, t_end]`, averaged across paths.
///
/// # Safety
/// `ensemble` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ens_ensemble_sliding_moment(
    ensemble: *const EnsEnsemble,
    lag: f64,
    stride: f64,
    power: u32,
    t_start: f64,
    t_end: f64,
    out: *mut EnsEstimate,
) -> EnsStatus {
    guard(|| {
        let r = ensemble_sliding_moment(ens_arg(ensemble)?, lag, stride, power, t_start, t_end)?;
        write_out(out, EnsEstimate::from(&r), "out")
    })
}

/// Correlation of backward and forward increments around `t`. Either output
/// may be NULL.
///
/// # Safety
/// `ensemble` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn ens_increment_autocorrelation(
    ensemble: *const EnsEnsemble,
    t: f64,
    lag: f64,
    raw: *mut EnsEstimate,
    normalized: *mut EnsEstimate,
) -> EnsStatus {
    guard(|| {
        let r = increment_autocorrelation(ens_arg(ensemble)?, t, lag)?;
        if !raw.is_null() {
            raw.write(EnsEstimate::from(&r.raw));
        }
        if !normalized.is_null() {
            normalized.write(EnsEstimate::from(&r.normalized));
        }
        Ok(())
    })
}

/// Correlation of backward and forward squared increments around `t`.
/// Either output may be NULL.
///
/// # Safety
/// `ensemble` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn ens_volatility_correlation(
    ensemble: *const EnsEnsemble,
    t: f64,
    lag: f64,
    raw: *mut EnsEstimate,
    normalized: *mut EnsEstimate,
) -> EnsStatus {
    guard(|| {
        let r = volatility_correlation(ens_arg(ensemble)?, t, lag)?;
        if !raw.is_null() {
            raw.write(EnsEstimate::from(&r.raw));
        }
        if !normalized.is_null() {
            normalized.write(EnsEstimate::from(&r.normalized));
        }
        Ok(())
    })
}

/// `R(lag) = ⟨x(t) x(t + lag)⟩` (mean-subtracted) for each of `n_lags`
/// lags. `std_errors` may be NULL.
///
/// # Safety
/// `lags`, `values` and (if given) `std_errors` must hold `n_lags` doubles.
#[no_mangle]
pub unsafe extern "C" fn ens_pair_correlation(
    ensemble: *const EnsEnsemble,
    base_t: f64,
    lags: *const f64,
    n_lags: usize,
    values: *mut f64,
    std_errors: *mut f64,
) -> EnsStatus {
    guard(|| {
        let lags = slice_arg(lags, n_lags, "lags")?;
        if values.is_null() {
            return Err(null("values"));
        }
        let c = pair_correlation(ens_arg(ensemble)?, base_t, lags)?;
        ptr::copy_nonoverlapping(c.values.as_ptr(), values, c.values.len());
        if !std_errors.is_null() {
            ptr::copy_nonoverlapping(c.std_errors.as_ptr(), std_errors, c.std_errors.len());
        }
        Ok(())
    })
}

/// `(1/T) ∫ R(s) ds` over a pair-correlation curve (trapezoid rule).
///
/// # Safety
/// `lags` and `values` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ens_ergodicity_diagnostic(
    lags: *const f64,
    values: *const f64,
    n: usize,
    out: *mut f64,
) -> EnsStatus {
    guard(|| {
        let curve = CorrelationCurve {
            lags: slice_arg(lags, n, "lags")?.to_vec(),
            values: slice_arg(values, n, "values")?.to_vec(),
            kind: CorrelationKind::PairCorrelation,
            std_errors: Vec::new(),
        };
        write_out(out, ergodicity_diagnostic(&curve)?, "out")
    })
}

/// fBm covariance `σ²/2 (s^2H + t^2H − |t − s|^2H)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ens_fbm_covariance(s: f64, t: f64, hurst: f64, sigma: f64, out: *mut f64) -> EnsStatus {
    guard(|| write_out(out, fbm_covariance(s, t, hurst, sigma)?, "out"))
}

/// Two-sample Kolmogorov–Smirnov test.
///
/// # Safety
/// `a` and `b` must hold `n_a` and `n_b` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ens_ks_two_sample(
    a: *const f64,
    n_a: usize,
    b: *const f64,
    n_b: usize,
    alpha: f64,
    out: *mut EnsKsResult,
) -> EnsStatus {
    guard(|| {
        let r = ks_two_sample(slice_arg(a, n_a, "a")?, slice_arg(b, n_b, "b")?, alpha)?;
        let res = EnsKsResult {
            statistic: r.statistic,
            critical_value: r.critical_value,
            p_value: r.p_value,
            alpha: r.alpha,
            passes: r.passes,
            n_a: r.n_a,
            n_b: r.n_b,
        };
        write_out(out, res, "out")
    })
}
