//! C ABI for the `survbenim` crate.
//!
//! All functions follow the same conventions:
//! - objects are passed as opaque handles created by `*_new`/`*_fit`
//!   constructors and released with the matching `*_free` function;
//! - fallible functions return [`SvbnStatus`]; constructors return a
//!   null pointer on failure;
//! - after any failure, `svbn_last_error` returns a message describing
//!   it (valid until the next failing call on the same thread);
//! - strings returned by the library are released with
//!   `svbn_string_free`, never with `free`.
//!
//! The generated header lives at `include/survbenim.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use survbenim::explain::{
    fit_survbenim_local, fit_survbex, fit_survlime, fit_survnam, BlackBox, ExplainConfig,
};
use survbenim::forest::{fit_rsf, ForestConfig, RSFModel};
use survbenim::survival::{SurvivalDataset, SurvivalRecord};
use survbenim::synth::{gen_clustered_dataset, GeneratorConfig};

/// Result code of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvbnStatus {
    /// The call succeeded.
    SvbnOk = 0,
    /// A required pointer argument was null.
    SvbnNullPointer = 1,
    /// An argument was out of range or inconsistent.
    SvbnInvalidArgument = 2,
    /// A string argument was not valid UTF-8.
    SvbnUtf8Error = 3,
    /// The operation itself failed; see `svbn_last_error`.
    SvbnRuntimeError = 4,
    /// The supplied output buffer is too small.
    SvbnBufferTooSmall = 5,
    /// The library panicked internally; see `svbn_last_error`.
    SvbnPanic = 6,
}

/// Explanation method selector for `svbn_explain`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvbnMethod {
    /// Beran surrogate with per-feature neural importance functions.
    SvbnMethodBenim = 0,
    /// Weighted least-squares Cox surrogate.
    SvbnMethodSurvlime = 1,
    /// Beran surrogate with scalar per-feature importances.
    SvbnMethodSurvbex = 2,
    /// Additive-model surrogate on the cumulative hazard.
    SvbnMethodSurvnam = 3,
}

/// Opaque survival dataset handle.
pub struct SvbnDataset(SurvivalDataset);

/// Opaque random survival forest handle.
pub struct SvbnForest(RSFModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn fail(status: SvbnStatus, msg: &str) -> SvbnStatus {
    set_error(msg);
    status
}

fn guard<F: FnOnce() -> SvbnStatus>(f: F) -> SvbnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SvbnStatus::SvbnPanic, "internal panic"),
    }
}

fn guard_ptr<T, F: FnOnce() -> Result<T, String>>(f: F) -> *mut T {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Box::into_raw(Box::new(v)),
        Ok(Err(msg)) => {
            set_error(&msg);
            ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            ptr::null_mut()
        }
    }
}

/// Message describing the most recent failure on this thread.
///
/// The pointer stays valid until the next failing call on the same
/// thread. Never pass it to `free`.
#[no_mangle]
pub extern "C" fn svbn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Build a dataset from row-major features plus per-record times and
/// event indicators (nonzero = event observed, zero = censored).
///
/// `features` holds `n_records * n_features` values; record `i` owns
/// `features[i*n_features .. (i+1)*n_features]`.
///
/// Returns null on failure.
///
/// # Safety
/// `features` must point to `n_records * n_features` readable doubles;
/// `times` and `events` must point to `n_records` readable elements.
#[no_mangle]
pub unsafe extern "C" fn svbn_dataset_new(
    features: *const f64,
    times: *const f64,
    events: *const u8,
    n_records: usize,
    n_features: usize,
) -> *mut SvbnDataset {
    guard_ptr(|| {
        if features.is_null() || times.is_null() || events.is_null() {
            return Err("null input array".into());
        }
        if n_records == 0 || n_features == 0 {
            return Err("n_records and n_features must be positive".into());
        }
        let xs = slice::from_raw_parts(features, n_records * n_features);
        let ts = slice::from_raw_parts(times, n_records);
        let es = slice::from_raw_parts(events, n_records);
        let records = (0..n_records)
            .map(|i| {
                SurvivalRecord::new(
                    xs[i * n_features..(i + 1) * n_features].to_vec(),
                    es[i] != 0,
                    ts[i],
                )
            })
            .collect();
        SurvivalDataset::new(records)
            .map(SvbnDataset)
            .map_err(|e| e.to_string())
    })
}

/// Generate one of the built-in clustered synthetic datasets
/// (`"2c5f"`, `"2c20f"`, `"5c10f"`, ...). Returns null on failure.
///
/// # Safety
/// `preset` must be a valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn svbn_dataset_generate(preset: *const c_char, seed: u64) -> *mut SvbnDataset {
    guard_ptr(|| {
        if preset.is_null() {
            return Err("null preset name".into());
        }
        let name = CStr::from_ptr(preset)
            .to_str()
            .map_err(|_| "preset name is not valid UTF-8".to_string())?;
        let cfg = GeneratorConfig::preset(name, seed).map_err(|e| e.to_string())?;
        let (ds, _) = gen_clustered_dataset(&cfg).map_err(|e| e.to_string())?;
        Ok(SvbnDataset(ds))
    })
}

/// Number of records in the dataset (0 if `dataset` is null).
#[no_mangle]
pub extern "C" fn svbn_dataset_len(dataset: *const SvbnDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    unsafe { (*dataset).0.len() }
}

/// Number of features per record (0 if `dataset` is null).
#[no_mangle]
pub extern "C" fn svbn_dataset_dim(dataset: *const SvbnDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    unsafe { (*dataset).0.dim() }
}

/// Release a dataset handle. Null is a no-op.
///
/// # Safety
/// `dataset` must be a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn svbn_dataset_free(dataset: *mut SvbnDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Fit a random survival forest on `dataset`.
///
/// Pass 0 for `n_trees`, `max_depth` or `min_leaf_events` to use the
/// defaults (100 trees, depth 8, 3 events per leaf). Returns null on
/// failure.
///
/// # Safety
/// `dataset` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn svbn_rsf_fit(
    dataset: *const SvbnDataset,
    n_trees: usize,
    max_depth: usize,
    min_leaf_events: usize,
    seed: u64,
) -> *mut SvbnForest {
    guard_ptr(|| {
        if dataset.is_null() {
            return Err("null dataset".into());
        }
        let mut cfg = ForestConfig::paper_default(seed);
        if n_trees > 0 {
            cfg.n_trees = n_trees;
        }
        if max_depth > 0 {
            cfg.max_depth = max_depth;
        }
        if min_leaf_events > 0 {
            cfg.min_leaf_events = min_leaf_events;
        }
        fit_rsf(&(*dataset).0, &cfg)
            .map(SvbnForest)
            .map_err(|e| e.to_string())
    })
}

/// Release a forest handle. Null is a no-op.
///
/// # Safety
/// `forest` must be a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn svbn_rsf_free(forest: *mut SvbnForest) {
    if !forest.is_null() {
        drop(Box::from_raw(forest));
    }
}

/// Expected survival time predicted by the forest for feature vector
/// `x` of length `n_features`, written to `out`.
///
/// # Safety
/// `forest` must be a live handle; `x` must point to `n_features`
/// readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn svbn_rsf_expected_time(
    forest: *const SvbnForest,
    x: *const f64,
    n_features: usize,
    out: *mut f64,
) -> SvbnStatus {
    guard(|| {
        if forest.is_null() || x.is_null() || out.is_null() {
            return fail(SvbnStatus::SvbnNullPointer, "null argument");
        }
        let xs = slice::from_raw_parts(x, n_features);
        match (*forest).0.expected_time(xs) {
            Ok(v) => {
                *out = v;
                SvbnStatus::SvbnOk
            }
            Err(e) => fail(SvbnStatus::SvbnRuntimeError, &e.to_string()),
        }
    })
}

/// Survival function predicted by the forest for `x`.
///
/// Writes up to `capacity` step points into `out_times`/`out_values`
/// and the true number of points into `out_len`. Call once with
/// `capacity == 0` (null buffers allowed) to query the length; a
/// second call with a large enough buffer fills it.
///
/// # Safety
/// `forest` must be a live handle; `x` must point to `n_features`
/// readable doubles; `out_times`/`out_values` must hold `capacity`
/// writable doubles; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn svbn_rsf_predict_sf(
    forest: *const SvbnForest,
    x: *const f64,
    n_features: usize,
    out_times: *mut f64,
    out_values: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> SvbnStatus {
    guard(|| {
        if forest.is_null() || x.is_null() || out_len.is_null() {
            return fail(SvbnStatus::SvbnNullPointer, "null argument");
        }
        let xs = slice::from_raw_parts(x, n_features);
        let sf = match (*forest).0.predict_sf(xs) {
            Ok(sf) => sf,
            Err(e) => return fail(SvbnStatus::SvbnRuntimeError, &e.to_string()),
        };
        let n = sf.times().len();
        *out_len = n;
        if capacity == 0 {
            return SvbnStatus::SvbnOk;
        }
        if out_times.is_null() || out_values.is_null() {
            return fail(SvbnStatus::SvbnNullPointer, "null output buffer");
        }
        if capacity < n {
            return fail(
                SvbnStatus::SvbnBufferTooSmall,
                "survival function needs a larger buffer",
            );
        }
        slice::from_raw_parts_mut(out_times, n).copy_from_slice(sf.times());
        slice::from_raw_parts_mut(out_values, n).copy_from_slice(sf.values());
        SvbnStatus::SvbnOk
    })
}

/// Serialize the forest to JSON. The returned string must be released
/// with `svbn_string_free`. Returns null on failure.
///
/// # Safety
/// `forest` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn svbn_rsf_to_json(forest: *const SvbnForest) -> *mut c_char {
    if forest.is_null() {
        set_error("null forest");
        return ptr::null_mut();
    }
    match catch_unwind(AssertUnwindSafe(|| (*forest).0.to_json_string())) {
        Ok(Ok(s)) => match CString::new(s) {
            Ok(c) => c.into_raw(),
            Err(_) => {
                set_error("serialized forest contains a nul byte");
                ptr::null_mut()
            }
        },
        Ok(Err(e)) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            ptr::null_mut()
        }
    }
}

/// Deserialize a forest previously produced by `svbn_rsf_to_json`.
/// Returns null on failure.
///
/// # Safety
/// `json` must be a valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn svbn_rsf_from_json(json: *const c_char) -> *mut SvbnForest {
    guard_ptr(|| {
        if json.is_null() {
            return Err("null json".into());
        }
        let s = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| "json is not valid UTF-8".to_string())?;
        RSFModel::from_json_str(s)
            .map(SvbnForest)
            .map_err(|e| e.to_string())
    })
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn svbn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Explain the forest's prediction at anchor `x` with the chosen
/// method and default hyperparameters.
///
/// Writes the raw per-feature importance vector (length `n_features`,
/// which must equal the dataset dimension) into `out_importance`.
/// Larger magnitude means more influence on the prediction; normalize
/// by the sum of absolute values to compare across anchors.
///
/// # Safety
/// `forest` and `dataset` must be live handles; `x` must point to
/// `n_features` readable doubles and `out_importance` to `n_features`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn svbn_explain(
    forest: *const SvbnForest,
    dataset: *const SvbnDataset,
    x: *const f64,
    n_features: usize,
    method: SvbnMethod,
    seed: u64,
    out_importance: *mut f64,
) -> SvbnStatus {
    guard(|| {
        if forest.is_null() || dataset.is_null() || x.is_null() || out_importance.is_null() {
            return fail(SvbnStatus::SvbnNullPointer, "null argument");
        }
        let ds = &(*dataset).0;
        if n_features != ds.dim() {
            return fail(
                SvbnStatus::SvbnInvalidArgument,
                "n_features does not match the dataset dimension",
            );
        }
        let xs = slice::from_raw_parts(x, n_features);
        let cfg = ExplainConfig {
            seed,
            ..Default::default()
        };
        let bb: &dyn BlackBox = &(*forest).0;
        let fit = match method {
            SvbnMethod::SvbnMethodBenim => fit_survbenim_local(bb, ds, xs, &cfg),
            SvbnMethod::SvbnMethodSurvlime => fit_survlime(bb, ds, xs, &cfg),
            SvbnMethod::SvbnMethodSurvbex => fit_survbex(bb, ds, xs, &cfg),
            SvbnMethod::SvbnMethodSurvnam => fit_survnam(bb, ds, xs, &cfg),
        };
        match fit {
            Ok(r) => {
                slice::from_raw_parts_mut(out_importance, n_features)
                    .copy_from_slice(&r.importance);
                SvbnStatus::SvbnOk
            }
            Err(e) => fail(SvbnStatus::SvbnRuntimeError, &e.to_string()),
        }
    })
}
