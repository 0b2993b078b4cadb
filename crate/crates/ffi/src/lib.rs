//! C ABI over the curvereach verifier.
//!
//! Plans and verification results are opaque heap handles released with
//! their `*_free` function. Every call returns a [`CrStatus`]; on failure
//! [`cr_last_error`] describes the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use curvereach::cli_io::{CliError, PlanFile};
use curvereach::geometry::Angle;
use curvereach::kinematics::Configuration;
use curvereach::plan::GridPlan;
use curvereach::propagation::{
    iterative_border_expansion, query_configuration, storage_bits, ExpansionOptions, PropagationError,
    ReachabilityResult, Verdict,
};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Invariant = 4,
    Io = 5,
    OutsideMap = 6,
    Panic = 7,
}

/// Opaque plan handle.
pub struct CrPlan {
    plan: GridPlan,
}

/// Opaque verification result; keeps a copy of its plan for queries.
pub struct CrResult {
    plan: GridPlan,
    result: ReachabilityResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: CrStatus, msg: impl Into<String>) -> CrStatus {
    set_error(msg);
    status
}

fn from_cli(e: CliError) -> CrStatus {
    let status = match &e {
        CliError::Parse { .. } | CliError::Usage(_) => CrStatus::Parse,
        CliError::Invariant(_) => CrStatus::Invariant,
        CliError::Io(_) | CliError::MissingArtifact(_) => CrStatus::Io,
        CliError::Threshold { .. } | CliError::Propagation(_) => CrStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> CrStatus) -> CrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(CrStatus::Panic, "internal panic"),
    }
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, CrStatus> {
    if p.is_null() {
        return Err(fail(CrStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(CrStatus::InvalidArgument, "string is not valid UTF-8"))
}

/// Message of the last error on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn cr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Parses a plan from text in the plan-file format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cr_plan_parse(text: *const c_char, out: *mut *mut CrPlan) -> CrStatus {
    guard(|| {
        if out.is_null() {
            return fail(CrStatus::NullPointer, "null output pointer");
        }
        let text = match c_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match PlanFile::parse(text, "<memory>").and_then(|f| f.to_plan()) {
            Ok(plan) => {
                *out = Box::into_raw(Box::new(CrPlan { plan }));
                CrStatus::Ok
            }
            Err(e) => from_cli(e),
        }
    })
}

/// Reads a plan file from disk.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cr_plan_load(path: *const c_char, out: *mut *mut CrPlan) -> CrStatus {
    guard(|| {
        if out.is_null() {
            return fail(CrStatus::NullPointer, "null output pointer");
        }
        let path = match c_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match PlanFile::read(Path::new(path)).and_then(|f| f.to_plan()) {
            Ok(plan) => {
                *out = Box::into_raw(Box::new(CrPlan { plan }));
                CrStatus::Ok
            }
            Err(e) => from_cli(e),
        }
    })
}

/// Releases a plan; null is ignored.
///
/// # Safety
/// `plan` must come from `cr_plan_parse`/`cr_plan_load` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn cr_plan_free(plan: *mut CrPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Runs the border expansion at resolution `m`; `threads == 0` uses the
/// default pool.
///
/// # Safety
/// `plan` must be a live plan handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cr_verify(plan: *const CrPlan, m: usize, threads: usize, out: *mut *mut CrResult) -> CrStatus {
    guard(|| {
        if plan.is_null() || out.is_null() {
            return fail(CrStatus::NullPointer, "null argument");
        }
        let plan = &(*plan).plan;
        let options = ExpansionOptions { threads: (threads > 0).then_some(threads), ..Default::default() };
        match iterative_border_expansion(plan, m, options) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(CrResult { plan: plan.clone(), result }));
                CrStatus::Ok
            }
            Err(e) => fail(CrStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Releases a result; null is ignored.
///
/// # Safety
/// `result` must come from `cr_verify` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn cr_result_free(result: *mut CrResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Sweep count and number of marked bits of a result.
///
/// # Safety
/// `result` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cr_result_stats(
    result: *const CrResult,
    iterations: *mut usize,
    marked_bits: *mut u64,
) -> CrStatus {
    if result.is_null() || iterations.is_null() || marked_bits.is_null() {
        return fail(CrStatus::NullPointer, "null argument");
    }
    let r = &(*result).result;
    *iterations = r.iterations;
    *marked_bits = r.marked_bits;
    CrStatus::Ok
}

/// Classifies a world configuration (`theta` in radians). `reachable` is set
/// to 1 or 0.
///
/// # Safety
/// `result` must be a live handle and `reachable` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cr_query(result: *const CrResult, x: f64, y: f64, theta: f64, reachable: *mut i32) -> CrStatus {
    guard(|| {
        if result.is_null() || reachable.is_null() {
            return fail(CrStatus::NullPointer, "null argument");
        }
        if !(x.is_finite() && y.is_finite() && theta.is_finite()) {
            return fail(CrStatus::InvalidArgument, "non-finite configuration");
        }
        let r = &*result;
        match query_configuration(Configuration::new(x, y, Angle::new(theta)), &r.result, &r.plan) {
            Ok(o) => {
                *reachable = i32::from(o.verdict == Verdict::Reachable);
                CrStatus::Ok
            }
            Err(e @ PropagationError::OutsideMap { .. }) => fail(CrStatus::OutsideMap, e.to_string()),
            Err(e) => fail(CrStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Writes one `.crbm` file per interior border into an existing directory.
///
/// # Safety
/// `result` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cr_result_write_bitmaps(result: *const CrResult, dir: *const c_char) -> CrStatus {
    guard(|| {
        if result.is_null() {
            return fail(CrStatus::NullPointer, "null result");
        }
        let dir = match c_str(dir) {
            Ok(d) => Path::new(d),
            Err(s) => return s,
        };
        for (b, bm) in (*result).result.iter() {
            if let Err(e) = bm.write_crbm(&dir.join(b.file_name())) {
                return fail(CrStatus::Io, e.to_string());
            }
        }
        CrStatus::Ok
    })
}

/// Storage model: bits of the border encoding and of a dense 3-D grid for an
/// `n × n` map at resolution `m`. Fails if a count exceeds 64 bits.
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cr_storage_bits(n: u64, m: u64, border_bits: *mut u64, dense_bits: *mut u64) -> CrStatus {
    if border_bits.is_null() || dense_bits.is_null() {
        return fail(CrStatus::NullPointer, "null output pointer");
    }
    let (b, d) = storage_bits(n, m);
    match (u64::try_from(b), u64::try_from(d)) {
        (Ok(b), Ok(d)) => {
            *border_bits = b;
            *dense_bits = d;
            CrStatus::Ok
        }
        _ => fail(CrStatus::InvalidArgument, "bit count overflows 64 bits"),
    }
}
