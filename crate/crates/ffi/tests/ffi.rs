use std::ffi::{CStr, CString};
use std::ptr;

use losocv::data::{save_study_csv, StudyCollection};
use losocv::sim::{simulate_collection, SimConfig};
use losocv_ffi::*;

fn last_error() -> String {
    let raw = losocv_last_error_message();
    assert!(!raw.is_null());
    let msg = unsafe { CStr::from_ptr(raw) }.to_string_lossy().into_owned();
    unsafe { losocv_string_free(raw) };
    msg
}

fn small_config(replicates: usize) -> CString {
    CString::new(format!(
        r#"{{"replicates": {replicates}, "jobs": 1,
            "sim": {{"n_per_trial": 60, "n_covariates": 6, "n_correlated": 3, "n_noise": 6}}}}"#
    ))
    .unwrap()
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(losocv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn experiment_round_trip() {
    let json = small_config(2);
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { losocv_config_from_json(json.as_ptr(), &mut cfg) }, LosocvStatus::Ok);
    let mut results = ptr::null_mut();
    assert_eq!(unsafe { losocv_experiment_run(cfg, &mut results) }, LosocvStatus::Ok);

    let mut rows = 0;
    assert_eq!(unsafe { losocv_results_row_count(results, &mut rows) }, LosocvStatus::Ok);
    // 2 replicates x (2 schemes x (4 folds + aggregate) + 1 truth aggregate), one metric.
    let loso_rows = 2 * (4 + 1);
    let kfold_rows = 2 * (4 + 1);
    assert_eq!(rows, loso_rows + kfold_rows + 2);

    let mut text = ptr::null_mut();
    assert_eq!(unsafe { losocv_results_to_csv(results, &mut text) }, LosocvStatus::Ok);
    let csv = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_owned();
    unsafe { losocv_string_free(text) };
    assert!(csv.starts_with("replicate,"));
    assert_eq!(csv.lines().count(), rows + 1);

    let dir = tempfile::tempdir().unwrap();
    let csv_path = CString::new(dir.path().join("r.csv").to_str().unwrap()).unwrap();
    let svg_path = CString::new(dir.path().join("b.svg").to_str().unwrap()).unwrap();
    let metric = CString::new("gen_r2").unwrap();
    assert_eq!(unsafe { losocv_results_write_csv(results, csv_path.as_ptr()) }, LosocvStatus::Ok);
    assert_eq!(std::fs::read_to_string(dir.path().join("r.csv")).unwrap(), csv);
    assert_eq!(
        unsafe { losocv_results_write_boxplot(results, metric.as_ptr(), svg_path.as_ptr()) },
        LosocvStatus::Ok
    );
    assert!(std::fs::read_to_string(dir.path().join("b.svg")).unwrap().starts_with("<svg"));

    let absent = CString::new("auc").unwrap();
    assert_ne!(
        unsafe { losocv_results_write_boxplot(results, absent.as_ptr(), svg_path.as_ptr()) },
        LosocvStatus::Ok
    );
    assert!(last_error().contains("auc"));

    unsafe {
        losocv_results_free(results);
        losocv_config_free(cfg);
    }
}

#[test]
fn config_errors_are_reported() {
    let bad = CString::new(r#"{"replicates": 0, "bogus": 1}"#).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { losocv_config_from_json(bad.as_ptr(), &mut cfg) }, LosocvStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("bogus"));

    let zero = CString::new(r#"{"replicates": 0}"#).unwrap();
    assert_eq!(unsafe { losocv_config_from_json(zero.as_ptr(), &mut cfg) }, LosocvStatus::Config);
    assert!(last_error().contains("replicates"));

    let mut results = ptr::null_mut();
    assert_eq!(unsafe { losocv_experiment_run(ptr::null(), &mut results) }, LosocvStatus::NullPointer);
    assert!(results.is_null());
}

#[test]
fn null_and_utf8_inputs() {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { losocv_config_from_json(ptr::null(), &mut cfg) }, LosocvStatus::NullPointer);
    let invalid = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { losocv_config_from_json(invalid.as_ptr().cast(), &mut cfg) },
        LosocvStatus::InvalidUtf8
    );
    let mut rows = 0;
    assert_eq!(unsafe { losocv_results_row_count(ptr::null(), &mut rows) }, LosocvStatus::NullPointer);
    unsafe {
        losocv_results_free(ptr::null_mut());
        losocv_config_free(ptr::null_mut());
        losocv_studies_free(ptr::null_mut());
        losocv_string_free(ptr::null_mut());
    }
}

#[test]
fn studies_load_and_shape() {
    let study = simulate_collection(&SimConfig {
        n_per_trial: 20,
        n_covariates: 4,
        n_correlated: 2,
        n_noise: 3,
        ..SimConfig::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("studies.csv");
    save_study_csv(&StudyCollection::new(study.legacy.studies().to_vec()), &path).unwrap();

    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut studies = ptr::null_mut();
    assert_eq!(unsafe { losocv_studies_load(c_path.as_ptr(), &mut studies) }, LosocvStatus::Ok);
    let (mut k, mut n, mut p) = (0, 0, 0);
    assert_eq!(unsafe { losocv_studies_shape(studies, &mut k, &mut n, &mut p) }, LosocvStatus::Ok);
    assert_eq!((k, n, p), (4, 80, 7));
    unsafe { losocv_studies_free(studies) };

    let missing = CString::new(dir.path().join("nope.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { losocv_studies_load(missing.as_ptr(), &mut studies) }, LosocvStatus::Io);
}

#[test]
fn metric_functions() {
    let scores = [0.1, 0.4, 0.35, 0.8];
    let truths = [0.0, 0.0, 1.0, 1.0];
    let mut v = 0.0;
    assert_eq!(unsafe { losocv_auc(scores.as_ptr(), truths.as_ptr(), 4, &mut v) }, LosocvStatus::Ok);
    assert_eq!(v, 0.75);

    let one_class = [1.0; 4];
    assert_eq!(
        unsafe { losocv_auc(scores.as_ptr(), one_class.as_ptr(), 4, &mut v) },
        LosocvStatus::Undefined
    );

    let mut t = 0.0;
    assert_eq!(
        unsafe { losocv_calibration_threshold(scores.as_ptr(), 4, 0.5, &mut t) },
        LosocvStatus::Ok
    );
    assert!((t - 0.375).abs() < 1e-12);
    assert_eq!(
        unsafe { losocv_calibration_threshold(scores.as_ptr(), 4, 1.5, &mut t) },
        LosocvStatus::Config
    );

    let (mut o1, mut o0, mut d) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { losocv_delta_orr(scores.as_ptr(), truths.as_ptr(), 4, 0.375, &mut o1, &mut o0, &mut d) },
        LosocvStatus::Ok
    );
    assert_eq!((o1, o0, d), (0.5, 0.5, 0.0));

    let y = [1.0, 2.0, 3.0];
    let pred = [1.0, 2.0, 3.0];
    assert_eq!(
        unsafe { losocv_generalized_r2(pred.as_ptr(), y.as_ptr(), 3, &mut v) },
        LosocvStatus::Ok
    );
    assert_eq!(v, 1.0);
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/losocv.h")).unwrap();
    for name in ["losocv_experiment_run", "losocv_results_free", "LosocvStatus", "LOSOCV_STATUS_OK"] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
