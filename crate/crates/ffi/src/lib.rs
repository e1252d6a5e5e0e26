//! C ABI over `ocrs`.
//!
//! Every fallible call returns an [`OcrsStatus`]; on failure the message is
//! available from [`ocrs_last_error`] on the same thread. Handles are opaque
//! and owned by the caller until passed to their `_free` function. Strings
//! returned through `char **` must be released with [`ocrs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ocrs::applications::{evaluate_prophet, run_probing, run_probing_with_deadlines, ProphetInstance};
use ocrs::applications::{ProbingInstance, ProbingOptions, ProphetOptions};
use ocrs::base::FractionalPoint;
use ocrs::harness::{
    estimate_selectability, knapsack_deterministic_impossibility, parse_rational, SelectabilityOptions,
    SelectabilityReport,
};
use ocrs::schemes::Constraint;
use ocrs::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OcrsStatus {
    Ok = 0,
    /// A null pointer, bad UTF-8 or an out-of-range index.
    InvalidArgument = 1,
    /// Malformed or inconsistent instance data.
    InvalidInput = 2,
    NotAMatroid = 3,
    NotSubmodular = 4,
    TooLarge = 5,
    /// A point outside the scaled polytope.
    OutsidePolytope = 6,
    /// An LP with no feasible point or no finite optimum.
    Infeasible = 7,
    FeasibilityViolated = 8,
    BoundViolated = 9,
    Internal = 10,
    Panic = 11,
}

impl From<&Error> for OcrsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::GroundMismatch { .. } => OcrsStatus::InvalidInput,
            Error::NotAMatroid(_) => OcrsStatus::NotAMatroid,
            Error::NotSubmodular(_) => OcrsStatus::NotSubmodular,
            Error::TooLarge { .. } | Error::NotEnumerable(_) => OcrsStatus::TooLarge,
            Error::OutsidePolytope(_) => OcrsStatus::OutsidePolytope,
            Error::Infeasible | Error::Unbounded => OcrsStatus::Infeasible,
            Error::FeasibilityViolated(_) => OcrsStatus::FeasibilityViolated,
            Error::BoundViolated(_) => OcrsStatus::BoundViolated,
            Error::ChainRefinement { .. } | Error::Internal(_) => OcrsStatus::Internal,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(OcrsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(OcrsStatus::from(&e), e.to_string())
    }
}

fn bad_arg(msg: impl Into<String>) -> Failure {
    Failure(OcrsStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OcrsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            OcrsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            OcrsStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(bad_arg(format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| bad_arg(format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(bad_arg("output pointer is null"));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

fn parse_json(text: &str) -> Result<serde_json::Value, Failure> {
    serde_json::from_str(text).map_err(|e| Failure(OcrsStatus::InvalidInput, format!("invalid input: {e}")))
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string(v).map_err(|e| Failure(OcrsStatus::Internal, e.to_string()))
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn ocrs_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ocrs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ocrs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// A feasibility constraint: matroid, knapsack, matching or an intersection.
pub struct OcrsConstraint(Constraint);

/// Per-element selectability estimates.
pub struct OcrsSelectability(SelectabilityReport);

/// Parses a constraint from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ocrs_constraint_from_json(json: *const c_char, out: *mut *mut OcrsConstraint) -> OcrsStatus {
    guard(|| {
        let c = Constraint::from_value(&parse_json(read_str(json, "json")?)?)?;
        write_out(out, Box::into_raw(Box::new(OcrsConstraint(c))))
    })
}

/// Ground set size, or 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ocrs_constraint_ground_size(c: *const OcrsConstraint) -> usize {
    c.as_ref().map_or(0, |c| c.0.ground_size())
}

/// Whether the set `{elements[0], …, elements[len-1]}` is feasible. Writes
/// 1 or 0 to `out`.
///
/// # Safety
/// `elements` must point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ocrs_constraint_contains(
    c: *const OcrsConstraint,
    elements: *const usize,
    len: usize,
    out: *mut i32,
) -> OcrsStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| bad_arg("constraint is null"))?;
        let items = slice(elements, len)?;
        let n = c.0.ground_size();
        if let Some(&e) = items.iter().find(|&&e| e >= n) {
            return Err(bad_arg(format!("element {e} outside ground set of size {n}")));
        }
        let set = ocrs::base::ElementSet::from_indices(items.iter().copied());
        write_out(out, i32::from(c.0.contains(set)))
    })
}

/// # Safety
/// `c` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ocrs_constraint_free(c: *mut OcrsConstraint) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(bad_arg("array pointer is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Estimates `Pr[e selected | e active]` for every element under the
/// default scheme for `c` at scale `b`. `x` has `n` entries and must lie in
/// `b·P`. `workers` of 0 uses every core.
///
/// # Safety
/// `c` must be a live handle, `x` must point to `n` doubles and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn ocrs_verify_selectability(
    c: *const OcrsConstraint,
    x: *const f64,
    n: usize,
    b: f64,
    eps: f64,
    trials: u64,
    seed: u64,
    workers: usize,
    out: *mut *mut OcrsSelectability,
) -> OcrsStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| bad_arg("constraint is null"))?;
        let point = FractionalPoint::new(slice(x, n)?.to_vec())?;
        let spec = c.0.scheme(b, eps)?;
        let mut opts = SelectabilityOptions::new(trials, seed);
        opts.workers = (workers > 0).then_some(workers);
        let report = estimate_selectability(&spec, &point, &opts)?;
        write_out(out, Box::into_raw(Box::new(OcrsSelectability(report))))
    })
}

/// Number of elements in the report, or 0 for null.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ocrs_selectability_len(r: *const OcrsSelectability) -> usize {
    r.as_ref().map_or(0, |r| r.0.elements.len())
}

/// Estimate, 99% half-width and target bound for element `i`.
///
/// # Safety
/// `r` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ocrs_selectability_element(
    r: *const OcrsSelectability,
    i: usize,
    estimate: *mut f64,
    ci_halfwidth: *mut f64,
    bound: *mut f64,
) -> OcrsStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| bad_arg("report is null"))?;
        let e =
            r.0.elements
                .get(i)
                .ok_or_else(|| bad_arg(format!("element {i} out of range")))?;
        write_out(estimate, e.estimate)?;
        write_out(ci_halfwidth, e.ci_halfwidth)?;
        write_out(bound, e.bound)
    })
}

/// 1 if every element met its bound, else 0.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ocrs_selectability_pass(r: *const OcrsSelectability) -> i32 {
    r.as_ref().map_or(0, |r| i32::from(r.0.pass))
}

/// The full report as JSON.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ocrs_selectability_json(r: *const OcrsSelectability, out: *mut *mut c_char) -> OcrsStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| bad_arg("report is null"))?;
        write_out(out, into_c_string(to_json(&r.0)?))
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ocrs_selectability_free(r: *mut OcrsSelectability) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Evaluates the prophet pipeline on a JSON instance and writes the report
/// as JSON. Uses the default order policy and scale.
///
/// # Safety
/// `instance_json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ocrs_prophet_json(
    instance_json: *const c_char,
    trials: u64,
    seed: u64,
    out: *mut *mut c_char,
) -> OcrsStatus {
    guard(|| {
        let instance = ProphetInstance::from_json(read_str(instance_json, "instance_json")?)?;
        let (report, _) = evaluate_prophet(&instance, &ProphetOptions::new(trials, seed))?;
        write_out(out, into_c_string(to_json(&report)?))
    })
}

/// Runs stochastic probing on a JSON instance, with or without deadlines,
/// and writes the report as JSON.
///
/// # Safety
/// `instance_json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ocrs_probing_json(
    instance_json: *const c_char,
    trials: u64,
    seed: u64,
    out: *mut *mut c_char,
) -> OcrsStatus {
    guard(|| {
        let instance = ProbingInstance::from_json(read_str(instance_json, "instance_json")?)?;
        let opts = ProbingOptions::new(trials, seed);
        let (report, _) = if instance.deadlines.is_some() {
            run_probing_with_deadlines(&instance, &opts)?
        } else {
            run_probing(&instance, &opts)?
        };
        write_out(out, into_c_string(to_json(&report)?))
    })
}

/// Best worst-element selectability of any deterministic CRS on the knapsack
/// instance with `n - 1` items of size `1/n` and one of size 1, at scale `b`
/// given as a decimal or fraction string. Writes the exact value as a
/// fraction string.
///
/// # Safety
/// `b` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ocrs_knapsack_impossibility(n: usize, b: *const c_char, out: *mut *mut c_char) -> OcrsStatus {
    guard(|| {
        let b = parse_rational(read_str(b, "b")?)?;
        let r = knapsack_deterministic_impossibility(n, &b)?;
        write_out(out, into_c_string(r.value.to_string()))
    })
}
