use std::ffi::{CStr, CString};
use std::ptr;

use ensemblab_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = ens_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn simulate(spec: &str, n_steps: usize, n_paths: usize, seed: u64) -> *mut EnsEnsemble {
    let mut h = ptr::null_mut();
    let s = unsafe { ens_ensemble_simulate(c(spec).as_ptr(), 0.0, 1.0, n_steps, n_paths, seed, 1, &mut h) };
    assert_eq!(s, EnsStatus::Ok, "{}", last_error());
    h
}

const WIENER: &str = r#"{"kind":"wiener","params":{"sigma":1.0}}"#;

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(ens_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn simulate_and_estimate() {
    let h = simulate(WIENER, 4, 20_000, 3);
    unsafe {
        assert_eq!(ens_ensemble_n_paths(h), 20_000);
        assert_eq!(ens_ensemble_n_points(h), 5);
        let mut e = EnsEstimate::default();
        assert_eq!(ens_ensemble_moment(h, 1.0, 2.0, 2, &mut e), EnsStatus::Ok);
        assert_eq!(e.n_samples, 20_000);
        assert!(((e.estimate - 2.0) / e.std_error).abs() < 4.0, "{e:?}");

        let mut s = EnsEstimate::default();
        assert_eq!(ens_sliding_moment(h, 0, 1.0, 1.0, 2, &mut s), EnsStatus::Ok);
        assert_eq!(s.n_samples, 4);

        let mut raw = EnsEstimate::default();
        assert_eq!(
            ens_increment_autocorrelation(h, 2.0, 1.0, &mut raw, ptr::null_mut()),
            EnsStatus::Ok
        );
        assert!((raw.estimate / raw.std_error).abs() < 4.0);

        let mut buf = [0.0; 5];
        assert_eq!(ens_ensemble_path_values(h, 7, buf.as_mut_ptr(), 5), EnsStatus::Ok);
        assert_eq!(buf[0], 0.0);
        assert_eq!(ens_ensemble_path_values(h, 7, buf.as_mut_ptr(), 4), EnsStatus::BufferTooSmall);
        assert_eq!(ens_ensemble_path_values(h, 20_000, buf.as_mut_ptr(), 5), EnsStatus::InvalidInput);
        ens_ensemble_free(h);
    }
}

#[test]
fn rejected_parameters_report_the_reason() {
    let mut h = ptr::null_mut();
    let spec = c(r#"{"kind":"fbm","params":{"hurst":1.5,"sigma":1.0}}"#);
    let s = unsafe { ens_ensemble_simulate(spec.as_ptr(), 0.0, 1.0, 4, 10, 0, 1, &mut h) };
    assert_eq!(s, EnsStatus::InvalidInput);
    assert!(h.is_null());
    assert!(last_error().contains("1.5"), "{}", last_error());

    let bad = c("not json");
    let s = unsafe { ens_ensemble_simulate(bad.as_ptr(), 0.0, 1.0, 4, 10, 0, 1, &mut h) };
    assert_eq!(s, EnsStatus::InvalidInput);
    assert!(last_error().contains("process spec"));
}

#[test]
fn null_pointers_are_caught() {
    unsafe {
        let mut e = EnsEstimate::default();
        assert_eq!(ens_ensemble_moment(ptr::null(), 0.0, 1.0, 2, &mut e), EnsStatus::NullPointer);
        assert!(last_error().contains("ensemble"));
        let mut h = ptr::null_mut();
        assert_eq!(
            ens_ensemble_simulate(ptr::null(), 0.0, 1.0, 4, 10, 0, 1, &mut h),
            EnsStatus::NullPointer
        );
        let wiener = c(WIENER);
        assert_eq!(
            ens_ensemble_simulate(wiener.as_ptr(), 0.0, 1.0, 4, 10, 0, 1, ptr::null_mut()),
            EnsStatus::NullPointer
        );
        assert_eq!(ens_ensemble_n_paths(ptr::null()), 0);
        ens_ensemble_free(ptr::null_mut());
    }
}

#[test]
fn successful_call_clears_last_error() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(ens_fbm_covariance(1.0, 1.0, 2.0, 1.0, &mut out), EnsStatus::InvalidInput);
        assert!(!ens_last_error().is_null());
        assert_eq!(ens_fbm_covariance(1.0, 2.0, 0.5, 1.0, &mut out), EnsStatus::Ok);
        assert!(ens_last_error().is_null());
        assert!((out - 1.0).abs() < 1e-12);
    }
}

#[test]
fn insufficient_data_maps_to_analysis_error() {
    let h = simulate(WIENER, 2, 1, 0);
    unsafe {
        let mut e = EnsEstimate::default();
        let s = ens_ensemble_sliding_moment(h, 2.0, 1.0, 2, 0.0, 1.0, &mut e);
        assert_eq!(s, EnsStatus::AnalysisError, "{}", last_error());
        ens_ensemble_free(h);
    }
}

#[test]
fn from_values_and_binary_round_trip() {
    let values = [0.0, 1.0, 3.0, 0.0, -1.0, -1.5];
    let dir = tempfile::tempdir().unwrap();
    let file = c(dir.path().join("e.ensb").to_str().unwrap());
    let csv = c(dir.path().join("e.csv").to_str().unwrap());
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(ens_ensemble_from_values(values.as_ptr(), 2, 3, 0.0, 0.5, &mut h), EnsStatus::Ok);
        assert_eq!(ens_ensemble_write_binary(h, file.as_ptr()), EnsStatus::Ok);
        assert_eq!(ens_ensemble_write_csv(h, csv.as_ptr()), EnsStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ens_ensemble_read_binary(file.as_ptr(), &mut back), EnsStatus::Ok);
        let (mut t0, mut dt) = (f64::NAN, f64::NAN);
        assert_eq!(ens_ensemble_grid(back, &mut t0, &mut dt), EnsStatus::Ok);
        assert_eq!((t0, dt), (0.0, 0.5));
        let mut row = [0.0; 3];
        assert_eq!(ens_ensemble_path_values(back, 1, row.as_mut_ptr(), 3), EnsStatus::Ok);
        assert_eq!(row, [0.0, -1.0, -1.5]);
        ens_ensemble_free(h);
        ens_ensemble_free(back);

        let missing = c(dir.path().join("nope.ensb").to_str().unwrap());
        let mut h2 = ptr::null_mut();
        assert_eq!(ens_ensemble_read_binary(missing.as_ptr(), &mut h2), EnsStatus::InvalidInput);
    }
    let text = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert!(text.starts_with("path_id,t,x\n"));
}

#[test]
fn pair_correlation_and_diagnostic() {
    let spec = r#"{"kind":"ornstein_uhlenbeck","params":{"theta":1.0,"sigma":1.4142135623730951,"stationary_start":true}}"#;
    let mut h = ptr::null_mut();
    let s = unsafe { ens_ensemble_simulate(c(spec).as_ptr(), 0.0, 0.5, 4, 20_000, 9, 10, &mut h) };
    if s != EnsStatus::Ok {
        panic!("{}", last_error());
    }
    let lags = [0.0, 0.5, 1.0, 1.5, 2.0];
    let mut vals = [0.0; 5];
    let mut ses = [0.0; 5];
    unsafe {
        assert_eq!(
            ens_pair_correlation(h, 0.0, lags.as_ptr(), 5, vals.as_mut_ptr(), ses.as_mut_ptr()),
            EnsStatus::Ok
        );
        for (l, (v, se)) in lags.iter().zip(vals.iter().zip(&ses)) {
            assert!((v - (-l).exp()).abs() < 5.0 * se, "lag {l}: {v} ± {se}");
        }
        let mut d = 0.0;
        assert_eq!(ens_ergodicity_diagnostic(lags.as_ptr(), vals.as_ptr(), 5, &mut d), EnsStatus::Ok);
        assert!(d > 0.3 && d < 0.55, "{d}");
        ens_ensemble_free(h);
    }
}

#[test]
fn ks_two_sample_through_the_abi() {
    let a: Vec<f64> = (0..200).map(f64::from).collect();
    let b: Vec<f64> = (100..300).map(f64::from).collect();
    let mut r = EnsKsResult::default();
    unsafe {
        assert_eq!(ens_ks_two_sample(a.as_ptr(), 200, b.as_ptr(), 200, 0.01, &mut r), EnsStatus::Ok);
    }
    assert!((r.statistic - 0.5).abs() < 1e-12);
    assert!(!r.passes);
    assert_eq!((r.n_a, r.n_b), (200, 200));
    unsafe {
        assert_eq!(ens_ks_two_sample(a.as_ptr(), 200, b.as_ptr(), 200, 1.5, &mut r), EnsStatus::InvalidInput);
    }
}
