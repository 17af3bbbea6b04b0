//! C ABI over the losocv harness.
//!
//! Every fallible function returns a [`LosocvStatus`]; on failure the message
//! is kept per thread and can be fetched with [`losocv_last_error_message`].
//! Handles are opaque, created by `*_new`/`*_load`/`*_run` functions and
//! released with the matching `*_free`. Strings returned to the caller are
//! released with [`losocv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use losocv::data::{load_study_csv, StudyCollection};
use losocv::error::Error;
use losocv::experiment::{self, ExperimentConfig, ResultTable};
use losocv::metrics::{self, MetricValue};
use losocv::plot;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LosocvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Data = 4,
    Model = 5,
    Io = 6,
    /// The metric is undefined for the input; the reason is the last error message.
    Undefined = 7,
    Panic = 8,
}

/// Opaque set of studies loaded from a CSV file.
pub struct LosocvStudies(StudyCollection);

/// Opaque experiment configuration.
pub struct LosocvConfig(ExperimentConfig);

/// Opaque table of experiment results.
pub struct LosocvResults(ResultTable);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> LosocvStatus {
    match err.root() {
        Error::Config(_) | Error::Json(_) => LosocvStatus::Config,
        Error::Model(_) => LosocvStatus::Model,
        Error::Io { .. } => LosocvStatus::Io,
        _ => LosocvStatus::Data,
    }
}

fn fail(err: Error) -> LosocvStatus {
    set_error(err.to_string());
    status_of(&err)
}

/// Runs `body`, converting panics to [`LosocvStatus::Panic`].
fn guard(body: impl FnOnce() -> Result<(), LosocvStatus>) -> LosocvStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => LosocvStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            LosocvStatus::Panic
        }
    }
}

fn null_check<T>(p: *const T, name: &str) -> Result<(), LosocvStatus> {
    if p.is_null() {
        set_error(format!("`{name}` is null"));
        return Err(LosocvStatus::NullPointer);
    }
    Ok(())
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, name: &str) -> Result<&'a str, LosocvStatus> {
    null_check(s, name)?;
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(format!("`{name}` is not valid UTF-8"));
        LosocvStatus::InvalidUtf8
    })
}

/// # Safety
/// `p` must be null or point to `n` readable values.
unsafe fn read_slice<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], LosocvStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    null_check(p, name)?;
    Ok(std::slice::from_raw_parts(p, n))
}

fn metric_out(value: MetricValue, out: *mut f64) -> Result<(), LosocvStatus> {
    match value {
        MetricValue::Value(v) => {
            // SAFETY: callers check `out` for null before computing the metric.
            unsafe { *out = v };
            Ok(())
        }
        MetricValue::Missing(reason) => {
            set_error(reason);
            Err(LosocvStatus::Undefined)
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn losocv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Free with [`losocv_string_free`].
#[no_mangle]
pub extern "C" fn losocv_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |m| m.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn losocv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load and validate a multi-study CSV (`study_id,outcome,<features...>`).
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn losocv_studies_load(path: *const c_char, out: *mut *mut LosocvStudies) -> LosocvStatus {
    guard(|| {
        null_check(out, "out")?;
        let path = PathBuf::from(read_str(path, "path")?);
        let collection = load_study_csv(&path, None).map_err(fail)?;
        collection.ensure_valid().map_err(fail)?;
        *out = Box::into_raw(Box::new(LosocvStudies(collection)));
        Ok(())
    })
}

/// # Safety
/// `studies` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn losocv_studies_shape(
    studies: *const LosocvStudies,
    n_studies: *mut usize,
    n_samples: *mut usize,
    n_features: *mut usize,
) -> LosocvStatus {
    guard(|| {
        null_check(studies, "studies")?;
        null_check(n_studies, "n_studies")?;
        null_check(n_samples, "n_samples")?;
        null_check(n_features, "n_features")?;
        let c = &(*studies).0;
        *n_studies = c.len();
        *n_samples = c.total_samples();
        *n_features = c.feature_names().len();
        Ok(())
    })
}

/// # Safety
/// `studies` must be null or a handle from [`losocv_studies_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn losocv_studies_free(studies: *mut LosocvStudies) {
    if !studies.is_null() {
        drop(Box::from_raw(studies));
    }
}

/// Parse a JSON experiment configuration; `{}` gives the defaults.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn losocv_config_from_json(json: *const c_char, out: *mut *mut LosocvConfig) -> LosocvStatus {
    guard(|| {
        null_check(out, "out")?;
        let cfg = ExperimentConfig::from_json(read_str(json, "json")?).map_err(fail)?;
        cfg.effective().validate().map_err(fail)?;
        *out = Box::into_raw(Box::new(LosocvConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle from [`losocv_config_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn losocv_config_free(config: *mut LosocvConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Run the experiment described by `config` (simulation, sweep or external mode).
///
/// # Safety
/// `config` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn losocv_experiment_run(config: *const LosocvConfig, out: *mut *mut LosocvResults) -> LosocvStatus {
    guard(|| {
        null_check(config, "config")?;
        null_check(out, "out")?;
        let table = experiment::run(&(*config).0).map_err(fail)?;
        *out = Box::into_raw(Box::new(LosocvResults(table)));
        Ok(())
    })
}

/// # Safety
/// `results` must be a live handle and `rows` writable.
#[no_mangle]
pub unsafe extern "C" fn losocv_results_row_count(results: *const LosocvResults, rows: *mut usize) -> LosocvStatus {
    guard(|| {
        null_check(results, "results")?;
        null_check(rows, "rows")?;
        *rows = (*results).0.rows.len();
        Ok(())
    })
}

/// Render the results as CSV text. Free the string with [`losocv_string_free`].
///
/// # Safety
/// `results` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn losocv_results_to_csv(results: *const LosocvResults, out: *mut *mut c_char) -> LosocvStatus {
    guard(|| {
        null_check(results, "results")?;
        null_check(out, "out")?;
        let mut buf = Vec::new();
        experiment::write_csv(&(*results).0, &mut buf).map_err(fail)?;
        *out = CString::new(buf).map_err(|_| fail(Error::data("CSV contains NUL")))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `results` must be a live handle and `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn losocv_results_write_csv(results: *const LosocvResults, path: *const c_char) -> LosocvStatus {
    guard(|| {
        null_check(results, "results")?;
        let path = PathBuf::from(read_str(path, "path")?);
        experiment::emit_csv(&(*results).0, &path).map_err(fail)
    })
}

/// Box plot of one metric's aggregate rows, written as SVG.
///
/// # Safety
/// `results` must be a live handle; `metric` and `path` valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn losocv_results_write_boxplot(
    results: *const LosocvResults,
    metric: *const c_char,
    path: *const c_char,
) -> LosocvStatus {
    guard(|| {
        null_check(results, "results")?;
        let metric = read_str(metric, "metric")?;
        let path = PathBuf::from(read_str(path, "path")?);
        plot::emit_svg_boxplot(&(*results).0, metric, &path).map_err(fail)
    })
}

/// Line chart of one metric across sweep values, written as SVG.
///
/// # Safety
/// `results` must be a live handle; `metric` and `path` valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn losocv_results_write_linechart(
    results: *const LosocvResults,
    metric: *const c_char,
    path: *const c_char,
) -> LosocvStatus {
    guard(|| {
        null_check(results, "results")?;
        let metric = read_str(metric, "metric")?;
        let path = PathBuf::from(read_str(path, "path")?);
        plot::emit_svg_linechart(&(*results).0, metric, &path).map_err(fail)
    })
}

/// # Safety
/// `results` must be null or a handle from [`losocv_experiment_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn losocv_results_free(results: *mut LosocvResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Area under the ROC curve with ties counted as one half.
///
/// # Safety
/// `scores` and `truths` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn losocv_auc(scores: *const f64, truths: *const f64, n: usize, out: *mut f64) -> LosocvStatus {
    guard(|| {
        null_check(out, "out")?;
        let (s, t) = (read_slice(scores, n, "scores")?, read_slice(truths, n, "truths")?);
        metric_out(metrics::auc(s, t), out)
    })
}

/// Out-of-sample R² against the mean of `truths`.
///
/// # Safety
/// `scores` and `truths` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn losocv_generalized_r2(scores: *const f64, truths: *const f64, n: usize, out: *mut f64) -> LosocvStatus {
    guard(|| {
        null_check(out, "out")?;
        let (s, t) = (read_slice(scores, n, "scores")?, read_slice(truths, n, "truths")?);
        metric_out(metrics::generalized_r2(s, t), out)
    })
}

/// Score threshold that classifies `target_prevalence` of `scores` as positive.
///
/// # Safety
/// `scores` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn losocv_calibration_threshold(
    scores: *const f64,
    n: usize,
    target_prevalence: f64,
    out: *mut f64,
) -> LosocvStatus {
    guard(|| {
        null_check(out, "out")?;
        let s = read_slice(scores, n, "scores")?;
        *out = metrics::calibration_threshold(s, target_prevalence).map_err(fail)?;
        Ok(())
    })
}

/// Response rates among samples scoring at or above `threshold` (`orr1`) and below it (`orr0`), and their difference.
///
/// # Safety
/// `scores` and `truths` must point to `n` readable values; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn losocv_delta_orr(
    scores: *const f64,
    truths: *const f64,
    n: usize,
    threshold: f64,
    orr1: *mut f64,
    orr0: *mut f64,
    delta: *mut f64,
) -> LosocvStatus {
    guard(|| {
        null_check(orr1, "orr1")?;
        null_check(orr0, "orr0")?;
        null_check(delta, "delta")?;
        let (s, t) = (read_slice(scores, n, "scores")?, read_slice(truths, n, "truths")?);
        let split = metrics::delta_orr(s, t, threshold);
        metric_out(split.orr1, orr1)?;
        metric_out(split.orr0, orr0)?;
        metric_out(split.delta, delta)
    })
}
