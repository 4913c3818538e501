//! C ABI over the solver: opaque handles, integer status codes, and a
//! cbindgen-generated header (`include/minflow.h`).
//!
//! Conventions
//! - functions return [`MfStatus`]; out-parameters are written only on
//!   `MF_STATUS_OK`
//! - objects created here are freed with the matching `mf_*_free`; handles
//!   must not be used after freeing
//! - a handle is valid on exactly one thread at a time; distinct handles
//!   can be used concurrently

#![allow(clippy::needless_range_loop)]

use minflow::config::RunConfig;
use minflow::error::Error;
use minflow::experiments::{radius_estimate, run_solver};
use minflow::geom::{Point, SymMat};
use minflow::grid::{positivity_set, GridField};
use minflow::operator::eval_min_curvature;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

/// Status code of every C-ABI call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    ParseError = 3,
    ValidationError = 4,
    RuntimeError = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> MfStatus {
    match err {
        Error::Toml(_) | Error::Config(_) => MfStatus::ParseError,
        Error::ConfigInvariant(_) => MfStatus::ValidationError,
        _ => MfStatus::RuntimeError,
    }
}

/// Last error message of the current thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Opaque run configuration.
pub struct MfConfig {
    inner: RunConfig,
}

/// Opaque sampled scalar field.
pub struct MfField {
    inner: GridField,
}

/// Load and validate a TOML run configuration.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn mf_config_load(path: *const c_char, out: *mut *mut MfConfig) -> MfStatus {
    if path.is_null() || out.is_null() {
        return MfStatus::NullArgument;
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        set_error("path is not valid UTF-8".into());
        return MfStatus::InvalidArgument;
    };
    match minflow::config::load_config(Path::new(path)) {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(MfConfig { inner: cfg }));
            MfStatus::Ok
        }
        Err(e) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
    }
}

/// # Safety
/// `cfg` must come from [`mf_config_load`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mf_config_free(cfg: *mut MfConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run the configured solver to its final time and hand back the final
/// field.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mf_solve(cfg: *const MfConfig, out: *mut *mut MfField) -> MfStatus {
    if cfg.is_null() || out.is_null() {
        return MfStatus::NullArgument;
    }
    match run_solver(&(*cfg).inner) {
        Ok(snaps) => {
            let (_, field) = snaps
                .into_iter()
                .next_back()
                .expect("at least the initial state");
            *out = Box::into_raw(Box::new(MfField { inner: field }));
            MfStatus::Ok
        }
        Err(e) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
    }
}

/// # Safety
/// `field` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mf_field_free(field: *mut MfField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Node counts per axis (three entries; the third is 1 in 2D).
///
/// # Safety
/// `field` must be live; `dims` must point to at least three usize slots.
#[no_mangle]
pub unsafe extern "C" fn mf_field_dims(field: *const MfField, dims: *mut usize) -> MfStatus {
    if field.is_null() || dims.is_null() {
        return MfStatus::NullArgument;
    }
    let d = (*field).inner.spec.dims;
    for (i, v) in d.iter().enumerate() {
        *dims.add(i) = *v;
    }
    MfStatus::Ok
}

/// Grid spacing.
///
/// # Safety
/// `field` must be live; `spacing` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mf_field_spacing(field: *const MfField, spacing: *mut f64) -> MfStatus {
    if field.is_null() || spacing.is_null() {
        return MfStatus::NullArgument;
    }
    *spacing = (*field).inner.spec.spacing;
    MfStatus::Ok
}

/// Nodal value at an index triple.
///
/// # Safety
/// `field` must be live; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mf_field_value(
    field: *const MfField,
    i: usize,
    j: usize,
    k: usize,
    value: *mut f64,
) -> MfStatus {
    if field.is_null() || value.is_null() {
        return MfStatus::NullArgument;
    }
    let f = &(*field).inner;
    let d = f.spec.dims;
    if i >= d[0] || j >= d[1] || k >= d[2] {
        set_error(format!("index ({i}, {j}, {k}) outside dims {d:?}"));
        return MfStatus::InvalidArgument;
    }
    *value = f.value(i, j, k);
    MfStatus::Ok
}

/// Measure and volume-based radius of the positivity set.
///
/// # Safety
/// `field` must be live; out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mf_field_positivity(
    field: *const MfField,
    volume: *mut f64,
    radius: *mut f64,
) -> MfStatus {
    if field.is_null() || volume.is_null() || radius.is_null() {
        return MfStatus::NullArgument;
    }
    let mask = positivity_set(&(*field).inner);
    *volume = mask.volume();
    *radius = radius_estimate(&mask);
    MfStatus::Ok
}

/// Write the field as legacy VTK structured points.
///
/// # Safety
/// `field` must be live; `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mf_field_write_vtk(
    field: *const MfField,
    path: *const c_char,
) -> MfStatus {
    if field.is_null() || path.is_null() {
        return MfStatus::NullArgument;
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        set_error("path is not valid UTF-8".into());
        return MfStatus::InvalidArgument;
    };
    match minflow::io::write_field_vtk(&(*field).inner, "u", Path::new(path)) {
        Ok(()) => MfStatus::Ok,
        Err(e) => {
            set_error(e.to_string());
            MfStatus::RuntimeError
        }
    }
}

/// Evaluate the minimal-curvature operator at gradient `p` (length `dim`)
/// and symmetric Hessian `hess` (row-major, `dim * dim` entries). Writes
/// the operator value and, when `direction` is non-null, the minimizing
/// unit tangent (length `dim`).
///
/// # Safety
/// `p` and `hess` must point to `dim` and `dim * dim` readable doubles;
/// `value` must be valid; `direction`, when non-null, must have room for
/// `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_eval_min_curvature(
    dim: usize,
    p: *const f64,
    hess: *const f64,
    grad_threshold: f64,
    value: *mut f64,
    direction: *mut f64,
) -> MfStatus {
    if p.is_null() || hess.is_null() || value.is_null() {
        return MfStatus::NullArgument;
    }
    if dim != 2 && dim != 3 {
        set_error(format!("dimension {dim} not supported (2 or 3)"));
        return MfStatus::InvalidArgument;
    }
    if grad_threshold.is_nan() || grad_threshold <= 0.0 {
        set_error("grad_threshold must be positive".into());
        return MfStatus::InvalidArgument;
    }
    let mut pv = [0.0; 3];
    for (a, slot) in pv.iter_mut().enumerate().take(dim) {
        *slot = *p.add(a);
    }
    let mut m = [[0.0; 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            m[i][j] = *hess.add(i * dim + j);
        }
    }
    let r = eval_min_curvature(&Point(pv), &SymMat::new(dim, m), grad_threshold);
    *value = r.value;
    if !direction.is_null() {
        for a in 0..dim {
            *direction.add(a) = r.argmin_direction.0[a];
        }
    }
    MfStatus::Ok
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mf_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}
