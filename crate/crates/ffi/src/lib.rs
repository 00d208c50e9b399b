//! C interface to `hypercircle`.
//!
//! Objects are opaque handles created by `hc_*_new`/`hc_*_from_*` calls and
//! released with the matching `hc_*_free`. Every fallible call returns an
//! `HcStatus`; on failure `hc_last_error` describes the error of the calling
//! thread. Strings returned by the library are freed with `hc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hypercircle::data::AngleData;
use hypercircle::examples::{self, Example};
use hypercircle::layout::LayoutOptions;
use hypercircle::optimizer::{SolveError, SolveOptions};
use hypercircle::pipeline::{ingest, uniformize, InputKind, PipelineError, Uniformization};
use hypercircle::sphere::{realize_on_sphere, SphereError, SphereOptions, SphereRealization};
use hypercircle::validator::{check_bao_bonahon, check_schlenker, ValidatorOptions};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NotConverged = 3,
    NotRealized = 4,
    OutOfRange = 5,
    Panic = 6,
}

/// Kind of a JSON input document.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcInputKind {
    AngleData = 0,
    SpherePoints = 1,
    FlatConeSurface = 2,
}

/// Angle data, with the default doubling vertex of bundled sphere examples.
pub struct HcAngleData {
    data: AngleData,
    k_inf: Option<usize>,
}

/// A solved and laid-out surface.
pub struct HcUniformization {
    inner: Uniformization,
}

/// A pattern on the sphere realized by doubling.
pub struct HcSphere {
    inner: SphereRealization,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: HcStatus, msg: impl Into<String>) -> HcStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> HcStatus) -> HcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(HcStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, HcStatus> {
    if p.is_null() {
        return Err(fail(HcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(HcStatus::InvalidInput, format!("{what} is not UTF-8")))
}

fn pipeline_status(e: &PipelineError) -> HcStatus {
    if e.is_input_error() {
        HcStatus::InvalidInput
    } else {
        HcStatus::NotConverged
    }
}

fn sphere_status(e: &SphereError) -> HcStatus {
    match e {
        SphereError::NotRealized { .. } | SphereError::NotAdmissible { .. } | SphereError::Degenerate { .. } | SphereError::SymmetryResidualTooLarge { .. } => {
            HcStatus::NotRealized
        }
        SphereError::Solve(SolveError::MaxIterExceeded { .. } | SolveError::LineSearchFailure { .. }) => HcStatus::NotConverged,
        _ => HcStatus::InvalidInput,
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn hc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn out_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Builds angle data from a JSON document; `cover` (may be null) is a cover
/// spec lifting a sphere point set.
///
/// # Safety
/// `json` and `cover` must be null or nul-terminated strings; `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_angle_data_from_json(kind: HcInputKind, json: *const c_char, cover: *const c_char, out: *mut *mut HcAngleData) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return fail(HcStatus::NullPointer, "out is null");
        }
        let text = match str_arg(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let cover = if cover.is_null() {
            None
        } else {
            match str_arg(cover, "cover") {
                Ok(t) => Some(t),
                Err(s) => return s,
            }
        };
        let kind = match kind {
            HcInputKind::AngleData => InputKind::AngleData,
            HcInputKind::SpherePoints => InputKind::SpherePoints,
            HcInputKind::FlatConeSurface => InputKind::FlatConeSurface,
        };
        match ingest(kind, text, cover) {
            Ok(i) => {
                *out = Box::into_raw(Box::new(HcAngleData { data: i.data, k_inf: None }));
                HcStatus::Ok
            }
            Err(e) => fail(pipeline_status(&e), e.to_string()),
        }
    })
}

/// Loads a bundled example by name.
///
/// # Safety
/// `name` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_angle_data_example(name: *const c_char, out: *mut *mut HcAngleData) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return fail(HcStatus::NullPointer, "out is null");
        }
        let name = match str_arg(name, "name") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let h = match examples::by_name(name) {
            Some(Example::Surface(data)) => HcAngleData { data, k_inf: None },
            Some(Example::Sphere(s)) => match AngleData::uniform(s.complex, s.theta) {
                Ok(data) => HcAngleData { data, k_inf: Some(s.k_inf) },
                Err(e) => return fail(HcStatus::InvalidInput, e.to_string()),
            },
            None => return fail(HcStatus::InvalidInput, format!("unknown example {name:?}")),
        };
        *out = Box::into_raw(Box::new(h));
        HcStatus::Ok
    })
}

/// # Safety
/// `data` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn hc_angle_data_free(data: *mut HcAngleData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Cell counts and genus of the complex.
///
/// # Safety
/// `data` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn hc_angle_data_counts(data: *const HcAngleData, vertices: *mut usize, edges: *mut usize, faces: *mut usize, genus: *mut usize) -> HcStatus {
    guard(|| {
        let Some(d) = data.as_ref() else {
            return fail(HcStatus::NullPointer, "data is null");
        };
        let c = &d.data.complex;
        for (p, v) in [(vertices, c.n_vertices()), (edges, c.n_edges()), (faces, c.n_faces()), (genus, c.genus())] {
            if !p.is_null() {
                *p = v;
            }
        }
        HcStatus::Ok
    })
}

/// Checks the admissibility conditions; `passed` and `exhaustive` receive
/// 1 or 0. The JSON report is stored in `report` unless it is null.
///
/// # Safety
/// `data` must be a live handle and `passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_validate(data: *const HcAngleData, passed: *mut i32, exhaustive: *mut i32, report: *mut *mut c_char) -> HcStatus {
    guard(|| {
        let Some(d) = data.as_ref() else {
            return fail(HcStatus::NullPointer, "data is null");
        };
        if passed.is_null() {
            return fail(HcStatus::NullPointer, "passed is null");
        }
        let a = &d.data;
        let opts = ValidatorOptions::default();
        let r = if a.complex.genus() > 0 {
            check_schlenker(&a.complex, &a.theta, &a.cone, &opts)
        } else {
            check_bao_bonahon(&a.complex, &a.theta, &opts)
        };
        match r {
            Ok(r) => {
                *passed = i32::from(r.passed());
                if !exhaustive.is_null() {
                    *exhaustive = i32::from(r.coverage.is_exhaustive());
                }
                if !report.is_null() {
                    *report = out_string(serde_json_string(&r));
                }
                HcStatus::Ok
            }
            Err(e) => fail(HcStatus::InvalidInput, e.to_string()),
        }
    })
}

fn serde_json_string<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn solve_options(grad_tol: f64, max_iter: usize) -> SolveOptions {
    let d = SolveOptions::default();
    SolveOptions { grad_tol: if grad_tol > 0.0 { grad_tol } else { d.grad_tol }, max_iter: if max_iter > 0 { max_iter } else { d.max_iter }, ..d }
}

/// Solves and lays out the surface. Non-positive `grad_tol` and zero
/// `max_iter` select the defaults.
///
/// # Safety
/// `data` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_uniformize(data: *const HcAngleData, grad_tol: f64, max_iter: usize, out: *mut *mut HcUniformization) -> HcStatus {
    guard(|| {
        let Some(d) = data.as_ref() else {
            return fail(HcStatus::NullPointer, "data is null");
        };
        if out.is_null() {
            return fail(HcStatus::NullPointer, "out is null");
        }
        match uniformize(&d.data, &solve_options(grad_tol, max_iter), &LayoutOptions::default()) {
            Ok(u) => {
                *out = Box::into_raw(Box::new(HcUniformization { inner: u }));
                HcStatus::Ok
            }
            Err(e) => fail(pipeline_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `u` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn hc_uniformization_free(u: *mut HcUniformization) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

/// Solver statistics and the largest angle and cone residuals.
///
/// # Safety
/// `u` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn hc_uniformization_stats(u: *const HcUniformization, iterations: *mut usize, grad_norm: *mut f64, angle_residual: *mut f64, cone_residual: *mut f64) -> HcStatus {
    guard(|| {
        let Some(u) = u.as_ref() else {
            return fail(HcStatus::NullPointer, "handle is null");
        };
        let u = &u.inner;
        if !iterations.is_null() {
            *iterations = u.solution.iterations;
        }
        for (p, v) in [(grad_norm, u.solution.grad_norm), (angle_residual, u.residuals.angle), (cone_residual, u.residuals.cone)] {
            if !p.is_null() {
                *p = v;
            }
        }
        HcStatus::Ok
    })
}

/// Copies up to `len` vertex radii into `buf`; `count` receives the number
/// of vertices.
///
/// # Safety
/// `u` must be a live handle, `buf` valid for `len` doubles (or null with
/// `len` 0), `count` valid or null.
#[no_mangle]
pub unsafe extern "C" fn hc_uniformization_radii(u: *const HcUniformization, buf: *mut f64, len: usize, count: *mut usize) -> HcStatus {
    guard(|| {
        let Some(u) = u.as_ref() else {
            return fail(HcStatus::NullPointer, "handle is null");
        };
        let r = &u.inner.metric.radii;
        if !count.is_null() {
            *count = r.len();
        }
        if len > 0 {
            if buf.is_null() {
                return fail(HcStatus::NullPointer, "buf is null");
            }
            ptr::copy_nonoverlapping(r.as_ptr(), buf, len.min(r.len()));
        }
        HcStatus::Ok
    })
}

/// Number of Fuchsian generators.
///
/// # Safety
/// `u` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hc_uniformization_generator_count(u: *const HcUniformization) -> usize {
    u.as_ref().map_or(0, |u| u.inner.generators.len())
}

/// Generator `index` as the `SL(2,R)` matrix `[a, b, c, d]`.
///
/// # Safety
/// `u` must be a live handle and `matrix` valid for four doubles.
#[no_mangle]
pub unsafe extern "C" fn hc_uniformization_generator(u: *const HcUniformization, index: usize, matrix: *mut f64) -> HcStatus {
    guard(|| {
        let Some(u) = u.as_ref() else {
            return fail(HcStatus::NullPointer, "handle is null");
        };
        if matrix.is_null() {
            return fail(HcStatus::NullPointer, "matrix is null");
        }
        let Some(g) = u.inner.generators.get(index) else {
            return fail(HcStatus::OutOfRange, format!("generator {index} out of range"));
        };
        let m = g.matrix();
        for (k, v) in [m[0][0], m[0][1], m[1][0], m[1][1]].into_iter().enumerate() {
            *matrix.add(k) = v;
        }
        HcStatus::Ok
    })
}

/// Text report of generators, pairings, radii and lengths. Free the result
/// with `hc_string_free`.
///
/// # Safety
/// `u` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hc_uniformization_report(u: *const HcUniformization) -> *mut c_char {
    match u.as_ref() {
        Some(u) => out_string(u.inner.report()),
        None => {
            set_error("handle is null");
            ptr::null_mut()
        }
    }
}

/// Realizes sphere data by doubling across the link of `k_inf`; a negative
/// `k_inf` uses the example's default vertex.
///
/// # Safety
/// `data` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_sphere_realize(data: *const HcAngleData, k_inf: i64, fold_symmetry: i32, out: *mut *mut HcSphere) -> HcStatus {
    guard(|| {
        let Some(d) = data.as_ref() else {
            return fail(HcStatus::NullPointer, "data is null");
        };
        if out.is_null() {
            return fail(HcStatus::NullPointer, "out is null");
        }
        let k = match (usize::try_from(k_inf).ok(), d.k_inf) {
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return fail(HcStatus::InvalidInput, "no doubling vertex given"),
        };
        let opts = SphereOptions { fold_symmetry: fold_symmetry != 0, ..Default::default() };
        match realize_on_sphere(&d.data.complex, &d.data.theta, k, &opts) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(HcSphere { inner: r }));
                HcStatus::Ok
            }
            Err(e) => fail(sphere_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `s` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn hc_sphere_free(s: *mut HcSphere) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Largest re-measured angle residual and involution residual.
///
/// # Safety
/// `s` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn hc_sphere_residuals(s: *const HcSphere, theta: *mut f64, symmetry: *mut f64) -> HcStatus {
    guard(|| {
        let Some(s) = s.as_ref() else {
            return fail(HcStatus::NullPointer, "handle is null");
        };
        let r = &s.inner.residuals;
        for (p, v) in [(theta, r.theta), (symmetry, r.symmetry)] {
            if !p.is_null() {
                *p = v;
            }
        }
        HcStatus::Ok
    })
}

/// The spherical pattern as JSON. Free the result with `hc_string_free`.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hc_sphere_pattern_json(s: *const HcSphere) -> *mut c_char {
    match s.as_ref() {
        Some(s) => out_string(serde_json_string(&s.inner.pattern)),
        None => {
            set_error("handle is null");
            ptr::null_mut()
        }
    }
}
