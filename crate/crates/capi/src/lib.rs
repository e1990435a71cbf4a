//! C ABI over the core crate: parse instances, extract features, and
//! project feature vectors to (Z1, Z2).
//!
//! Conventions:
//! - Every fallible call returns a [`CvrpIsaStatus`]; out-parameters are
//!   written only on `Ok`.
//! - Objects come back as opaque handles that must be released with the
//!   matching `*_free`; `free(NULL)` is a no-op.
//! - On failure, a thread-local message is set; read it with
//!   [`cvrpisa_last_error`]. The pointer stays valid until the next failing
//!   call on the same thread.
//! - Returned strings are NUL-terminated UTF-8 owned by the handle (or, for
//!   `cvrpisa_last_error`, by the thread); callers must not free them.
//! - Panics never unwind across the boundary; they surface as
//!   `CVRP_ISA_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cvrp_isa::features::{extract_all, ExtractConfig};
use cvrp_isa::instance::{parse_instance, Instance};
use cvrp_isa::projection::{builtin_model, ProjectionModel};

/// Result of every fallible API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(non_camel_case_types, clippy::upper_case_acronyms)]
pub enum CvrpIsaStatus {
    /// Success.
    CVRP_ISA_STATUS_OK = 0,
    /// A required pointer argument was NULL.
    CVRP_ISA_STATUS_NULL_ARGUMENT = 1,
    /// A string argument was not valid UTF-8.
    CVRP_ISA_STATUS_UTF8 = 2,
    /// The instance text could not be parsed; see `cvrpisa_last_error`.
    CVRP_ISA_STATUS_PARSE = 3,
    /// The model JSON was rejected; see `cvrpisa_last_error`.
    CVRP_ISA_STATUS_MODEL = 4,
    /// Projection failed (missing or non-finite features); see
    /// `cvrpisa_last_error`.
    CVRP_ISA_STATUS_PROJECTION = 5,
    /// A name or index did not resolve.
    CVRP_ISA_STATUS_NOT_FOUND = 6,
    /// A slice length did not match what the model expects.
    CVRP_ISA_STATUS_LENGTH_MISMATCH = 7,
    /// An internal invariant failed (a bug; the library caught a panic).
    CVRP_ISA_STATUS_INTERNAL = 8,
}

use CvrpIsaStatus::*;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Message for the most recent failure on this thread; empty string if no
/// call has failed yet. Owned by the library — do not free.
#[no_mangle]
pub extern "C" fn cvrpisa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cvrpisa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Run `f` without letting a panic cross the ABI.
fn guarded(f: impl FnOnce() -> CvrpIsaStatus) -> CvrpIsaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            CVRP_ISA_STATUS_INTERNAL
        }
    }
}

/// # Safety
/// `ptr` must be NULL or a NUL-terminated string valid for reads.
unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, CvrpIsaStatus> {
    if ptr.is_null() {
        set_error("NULL string argument");
        return Err(CVRP_ISA_STATUS_NULL_ARGUMENT);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        CVRP_ISA_STATUS_UTF8
    })
}

fn out_arg<'a, T>(ptr: *mut T) -> Result<&'a mut T, CvrpIsaStatus> {
    if ptr.is_null() {
        set_error("NULL out-parameter");
        return Err(CVRP_ISA_STATUS_NULL_ARGUMENT);
    }
    Ok(unsafe { &mut *ptr })
}

fn handle_arg<'a, T>(ptr: *const T) -> Result<&'a T, CvrpIsaStatus> {
    if ptr.is_null() {
        set_error("NULL handle");
        return Err(CVRP_ISA_STATUS_NULL_ARGUMENT);
    }
    Ok(unsafe { &*ptr })
}

// ---------------------------------------------------------------- instance

/// Opaque parsed instance.
pub struct CvrpIsaInstance {
    inner: Instance,
}

/// Parse TSPLIB/CVRPLIB instance text into a handle.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_instance_parse(
    text: *const c_char,
    out: *mut *mut CvrpIsaInstance,
) -> CvrpIsaStatus {
    guarded(|| {
        let (text, out) = match (utf8_arg(text), out_arg(out)) {
            (Ok(t), Ok(o)) => (t, o),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match parse_instance(text) {
            Ok(inst) => {
                *out = Box::into_raw(Box::new(CvrpIsaInstance { inner: inst }));
                CVRP_ISA_STATUS_OK
            }
            Err(e) => {
                set_error(e.to_string());
                CVRP_ISA_STATUS_PARSE
            }
        }
    })
}

/// Release an instance handle. NULL is ignored.
///
/// # Safety
/// `h` must be NULL or a pointer from `cvrpisa_instance_parse`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_instance_free(h: *mut CvrpIsaInstance) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Total node count (customers + depot).
///
/// # Safety
/// `h` must be a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_instance_dimension(h: *const CvrpIsaInstance) -> usize {
    handle_arg(h).map_or(0, |h| h.inner.dimension)
}

/// Vehicle capacity.
///
/// # Safety
/// `h` must be a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_instance_capacity(h: *const CvrpIsaInstance) -> u64 {
    handle_arg(h).map_or(0, |h| h.inner.capacity)
}

// ---------------------------------------------------------------- features

/// Opaque extracted feature vector (name → value, insertion-ordered).
pub struct CvrpIsaFeatures {
    names: Vec<CString>,
    values: Vec<f64>,
}

/// Extract every feature of an instance with the default configuration.
/// Probing randomness is derived from `seed`.
///
/// # Safety
/// `h` must be a live instance handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_extract(
    h: *const CvrpIsaInstance,
    seed: u64,
    out: *mut *mut CvrpIsaFeatures,
) -> CvrpIsaStatus {
    guarded(|| {
        let (h, out) = match (handle_arg(h), out_arg(out)) {
            (Ok(h), Ok(o)) => (h, o),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let ex = extract_all(&h.inner, &ExtractConfig::default(), seed);
        let mut names = Vec::with_capacity(ex.features.len());
        let mut values = Vec::with_capacity(ex.features.len());
        for (name, value) in ex.features.iter() {
            // Feature names are ASCII identifiers; NUL cannot occur.
            names.push(CString::new(name).expect("feature name without NUL"));
            values.push(value);
        }
        *out = Box::into_raw(Box::new(CvrpIsaFeatures { names, values }));
        CVRP_ISA_STATUS_OK
    })
}

/// Release a features handle. NULL is ignored.
///
/// # Safety
/// `h` must be NULL or a pointer from `cvrpisa_extract`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_features_free(h: *mut CvrpIsaFeatures) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of features in the vector.
///
/// # Safety
/// `h` must be a live features handle.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_features_len(h: *const CvrpIsaFeatures) -> usize {
    handle_arg(h).map_or(0, |h| h.values.len())
}

/// Name of the feature at `index`; NULL when out of range. The pointer is
/// owned by the handle.
///
/// # Safety
/// `h` must be a live features handle.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_features_name(
    h: *const CvrpIsaFeatures,
    index: usize,
) -> *const c_char {
    match handle_arg(h) {
        Ok(h) => h.names.get(index).map_or(std::ptr::null(), |n| n.as_ptr()),
        Err(_) => std::ptr::null(),
    }
}

/// Look up a feature by name.
///
/// # Safety
/// `h` must be a live features handle; `name` a NUL-terminated string;
/// `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_features_get(
    h: *const CvrpIsaFeatures,
    name: *const c_char,
    value: *mut f64,
) -> CvrpIsaStatus {
    guarded(|| {
        let (h, name, value) = match (handle_arg(h), utf8_arg(name), out_arg(value)) {
            (Ok(h), Ok(n), Ok(v)) => (h, n, v),
            (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
        };
        match h.names.iter().position(|n| n.to_bytes() == name.as_bytes()) {
            Some(i) => {
                *value = h.values[i];
                CVRP_ISA_STATUS_OK
            }
            None => {
                set_error(format!("feature `{name}` not present"));
                CVRP_ISA_STATUS_NOT_FOUND
            }
        }
    })
}

// ---------------------------------------------------------------- model

/// Opaque projection model.
pub struct CvrpIsaModel {
    inner: ProjectionModel,
    names: Vec<CString>,
}

impl CvrpIsaModel {
    fn wrap(inner: ProjectionModel) -> *mut CvrpIsaModel {
        let names = inner
            .feature_names
            .iter()
            .map(|n| CString::new(n.as_str()).expect("feature name without NUL"))
            .collect();
        Box::into_raw(Box::new(CvrpIsaModel { inner, names }))
    }
}

/// The built-in reference model (23 features, identity normalization).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_model_builtin(out: *mut *mut CvrpIsaModel) -> CvrpIsaStatus {
    guarded(|| match out_arg(out) {
        Ok(o) => {
            *o = CvrpIsaModel::wrap(builtin_model());
            CVRP_ISA_STATUS_OK
        }
        Err(s) => s,
    })
}

/// Load a model from its JSON text (as written by the pipeline).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_model_from_json(
    json: *const c_char,
    out: *mut *mut CvrpIsaModel,
) -> CvrpIsaStatus {
    guarded(|| {
        let (json, out) = match (utf8_arg(json), out_arg(out)) {
            (Ok(j), Ok(o)) => (j, o),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match ProjectionModel::from_json(json) {
            Ok(model) => {
                *out = CvrpIsaModel::wrap(model);
                CVRP_ISA_STATUS_OK
            }
            Err(e) => {
                set_error(e.to_string());
                CVRP_ISA_STATUS_MODEL
            }
        }
    })
}

/// Release a model handle. NULL is ignored.
///
/// # Safety
/// `h` must be NULL or a pointer from a model constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_model_free(h: *mut CvrpIsaModel) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of features the model consumes.
///
/// # Safety
/// `h` must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_model_len(h: *const CvrpIsaModel) -> usize {
    handle_arg(h).map_or(0, |h| h.inner.d())
}

/// Name of the model feature at `index`; NULL when out of range. The
/// pointer is owned by the handle.
///
/// # Safety
/// `h` must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_model_feature_name(
    h: *const CvrpIsaModel,
    index: usize,
) -> *const c_char {
    match handle_arg(h) {
        Ok(h) => h.names.get(index).map_or(std::ptr::null(), |n| n.as_ptr()),
        Err(_) => std::ptr::null(),
    }
}

/// Project raw feature values ordered like the model's feature list.
///
/// # Safety
/// `h` must be a live model handle; `values` must point to `len` readable
/// doubles; `z1`/`z2` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_project_values(
    h: *const CvrpIsaModel,
    values: *const f64,
    len: usize,
    z1: *mut f64,
    z2: *mut f64,
) -> CvrpIsaStatus {
    guarded(|| {
        let (h, z1, z2) = match (handle_arg(h), out_arg(z1), out_arg(z2)) {
            (Ok(h), Ok(a), Ok(b)) => (h, a, b),
            (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
        };
        if values.is_null() {
            set_error("NULL values pointer");
            return CVRP_ISA_STATUS_NULL_ARGUMENT;
        }
        if len != h.inner.d() {
            set_error(format!("model expects {} values, got {len}", h.inner.d()));
            return CVRP_ISA_STATUS_LENGTH_MISMATCH;
        }
        let slice = std::slice::from_raw_parts(values, len);
        let z = h.inner.project_values(slice);
        *z1 = z[0];
        *z2 = z[1];
        CVRP_ISA_STATUS_OK
    })
}

/// Project an extracted feature vector. Fails listing every model feature
/// that is missing or non-finite.
///
/// # Safety
/// `model` and `features` must be live handles; `z1`/`z2` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cvrpisa_project_features(
    model: *const CvrpIsaModel,
    features: *const CvrpIsaFeatures,
    z1: *mut f64,
    z2: *mut f64,
) -> CvrpIsaStatus {
    guarded(|| {
        let (model, features, z1, z2) =
            match (handle_arg(model), handle_arg(features), out_arg(z1), out_arg(z2)) {
                (Ok(m), Ok(f), Ok(a), Ok(b)) => (m, f, a, b),
                (Err(s), _, _, _) | (_, Err(s), _, _) | (_, _, Err(s), _) | (_, _, _, Err(s)) => {
                    return s
                }
            };
        let lookup = |name: &str| {
            features
                .names
                .iter()
                .position(|n| n.to_bytes() == name.as_bytes())
                .map(|i| features.values[i])
        };
        match model.inner.project_with(lookup) {
            Ok(z) => {
                *z1 = z[0];
                *z2 = z[1];
                CVRP_ISA_STATUS_OK
            }
            Err(e) => {
                set_error(e.to_string());
                CVRP_ISA_STATUS_PROJECTION
            }
        }
    })
}
