//! C ABI over trained kickrec models and a few metric helpers.
//!
//! Every fallible function returns a [`KrStatus`]; on failure a message is
//! available from [`kr_last_error`] on the same thread. Models are opaque
//! handles created by [`kr_model_load`] and released with [`kr_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use kickrec::domain::GeoPoint;
use kickrec::eval::auc;
use kickrec::features::{haversine_km, N_FEATURES};
use kickrec::models::TrainedModel;
use kickrec::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotFound = 3,
    Parse = 4,
    Dimension = 5,
    Internal = 6,
}

/// Opaque trained model.
pub struct KrModel {
    inner: TrainedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn fail(status: KrStatus, msg: impl Into<String>) -> KrStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> KrStatus {
    match e {
        Error::MissingInput(..) => KrStatus::NotFound,
        Error::Malformed { .. } | Error::Model(_) | Error::Invalid(_) => KrStatus::Parse,
        Error::Dimension { .. } => KrStatus::Dimension,
        _ => KrStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> KrStatus) -> KrStatus {
    std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
        .unwrap_or_else(|_| fail(KrStatus::Internal, "internal panic"))
}

/// Message of the last failed call on this thread; empty when none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn kr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Length of a full raw feature vector.
#[no_mangle]
pub extern "C" fn kr_feature_count() -> usize {
    N_FEATURES
}

/// Load a model file written by `kickrec train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kr_model_load(path: *const c_char, out: *mut *mut KrModel) -> KrStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(KrStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(p) = CStr::from_ptr(path).to_str() else {
            return fail(KrStatus::InvalidArgument, "path is not UTF-8");
        };
        match TrainedModel::load(Path::new(p)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(KrModel { inner }));
                KrStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Release a model; null is ignored.
///
/// # Safety
/// `model` must come from `kr_model_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kr_model_free(model: *mut KrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of feature columns the model reads.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kr_model_dim(model: *const KrModel, out: *mut usize) -> KrStatus {
    if model.is_null() || out.is_null() {
        return fail(KrStatus::NullPointer, "null argument");
    }
    *out = (*model).inner.dim();
    KrStatus::Ok
}

/// Probability that the pair is a backing. `features` holds `len` raw
/// values in the full column layout; NaN marks a masked value.
///
/// # Safety
/// `model` must be a live handle, `features` must point to `len` doubles
/// and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kr_model_predict_proba(
    model: *const KrModel,
    features: *const f64,
    len: usize,
    out: *mut f64,
) -> KrStatus {
    guard(|| {
        if model.is_null() || features.is_null() || out.is_null() {
            return fail(KrStatus::NullPointer, "null argument");
        }
        let raw = std::slice::from_raw_parts(features, len);
        let x: Vec<Option<f64>> = raw.iter().map(|v| (!v.is_nan()).then_some(*v)).collect();
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return fail(KrStatus::InvalidArgument, "features must be finite or NaN");
        }
        match (*model).inner.predict_proba(&x) {
            Ok(p) => {
                *out = p;
                KrStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Area under the ROC curve with tied scores counted as one half.
///
/// # Safety
/// `scores` and `labels` must point to `n` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kr_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> KrStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() || out.is_null() {
            return fail(KrStatus::NullPointer, "null argument");
        }
        let s = std::slice::from_raw_parts(scores, n);
        let l = std::slice::from_raw_parts(labels, n);
        if l.iter().any(|&v| v > 1) {
            return fail(KrStatus::InvalidArgument, "labels must be 0 or 1");
        }
        let pairs: Vec<(f64, u8)> = s.iter().copied().zip(l.iter().copied()).collect();
        match auc(&pairs) {
            Ok(v) => {
                *out = v;
                KrStatus::Ok
            }
            Err(e) => fail(KrStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Great-circle distance in kilometres between two points in degrees.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kr_haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64, out: *mut f64) -> KrStatus {
    if out.is_null() {
        return fail(KrStatus::NullPointer, "null argument");
    }
    let (a, b) = match (GeoPoint::new(lat1, lon1, ""), GeoPoint::new(lat2, lon2, "")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(KrStatus::InvalidArgument, e.to_string()),
    };
    *out = haversine_km(&a, &b);
    KrStatus::Ok
}
