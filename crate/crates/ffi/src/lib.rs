//! C interface. Systems and reports are opaque handles owned by the caller
//! and released with the matching `_free` function. Every fallible call
//! returns a [`CbdStatus`]; the message for the most recent failure on the
//! calling thread is available from [`cbd_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cbd::report::{read_system_json, run_analysis, AnalysisOptions, AnalysisReport};
use cbd::{chsh_profile, generate, signaling_profile, CyclicSystem, Error, GeneratorSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    SolverFailure = 3,
    Panic = 4,
}

/// Four context tables.
pub struct CbdSystem(CyclicSystem);

/// Result of [`cbd_analyze`].
pub struct CbdReport(AnalysisReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> CbdStatus {
    match err {
        Error::SolverFailure { .. } | Error::MalformedLp(_) => CbdStatus::SolverFailure,
        _ => CbdStatus::InvalidInput,
    }
}

fn guard<F: FnOnce() -> Result<(), (CbdStatus, String)>>(f: F) -> CbdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CbdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CbdStatus::Panic
        }
    }
}

fn fail(err: Error) -> (CbdStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (CbdStatus, String) {
    (CbdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (CbdStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (CbdStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cbd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a system from 16 probabilities: contexts (1,1), (1,2), (2,1),
/// (2,2), each as `p(+,+), p(+,-), p(-,+), p(-,-)`.
///
/// # Safety
/// `probs` must point to 16 doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cbd_system_from_tables(
    probs: *const f64,
    out: *mut *mut CbdSystem,
) -> CbdStatus {
    guard(|| {
        if probs.is_null() {
            return Err(null("probs"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let p = std::slice::from_raw_parts(probs, 16);
        let tables = std::array::from_fn(|k| std::array::from_fn(|c| p[4 * k + c]));
        let sys = CyclicSystem::from_tables(tables).map_err(fail)?;
        store(out, CbdSystem(sys));
        Ok(())
    })
}

/// Builds a system from a generator description such as
/// `{"kind":"random","seed":3}`.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cbd_system_generate(
    spec_json: *const c_char,
    out: *mut *mut CbdSystem,
) -> CbdStatus {
    guard(|| {
        let text = read_str(spec_json, "spec_json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec: GeneratorSpec = serde_json::from_str(text).map_err(|e| fail(e.into()))?;
        let sys = generate(&spec).map_err(fail)?;
        store(out, CbdSystem(sys));
        Ok(())
    })
}

/// Parses a system document (the `cbd generate` output format).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cbd_system_from_json(
    json: *const c_char,
    out: *mut *mut CbdSystem,
) -> CbdStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sys = read_system_json(text).map_err(fail)?;
        store(out, CbdSystem(sys));
        Ok(())
    })
}

/// # Safety
/// `system` must come from a `cbd_system_*` constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn cbd_system_free(system: *mut CbdSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Writes `Δ₀` and `s_max`.
///
/// # Safety
/// `system` must be a live handle; `delta0` and `s_max` writable.
#[no_mangle]
pub unsafe extern "C" fn cbd_system_measures(
    system: *const CbdSystem,
    delta0: *mut f64,
    s_max: *mut f64,
) -> CbdStatus {
    guard(|| {
        let sys = system.as_ref().ok_or_else(|| null("system"))?;
        if delta0.is_null() || s_max.is_null() {
            return Err(null("output"));
        }
        *delta0 = signaling_profile(&sys.0).delta0;
        *s_max = chsh_profile(&sys.0).s_max;
        Ok(())
    })
}

/// Runs the full analysis. `tol <= 0` selects the default tolerance.
///
/// # Safety
/// `system` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cbd_analyze(
    system: *const CbdSystem,
    tol: f64,
    include_witness: bool,
    out: *mut *mut CbdReport,
) -> CbdStatus {
    guard(|| {
        let sys = system.as_ref().ok_or_else(|| null("system"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut opts = AnalysisOptions {
            include_witness,
            ..AnalysisOptions::default()
        };
        if tol > 0.0 {
            opts.tol = tol;
        }
        let report = run_analysis(&sys.0, opts).map_err(|f| fail(f.error))?;
        store(out, CbdReport(report));
        Ok(())
    })
}

/// Numeric summary of a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CbdSummary {
    pub delta0: f64,
    pub delta_chsh: f64,
    pub s_max: f64,
    pub delta_min: f64,
    pub genuine: f64,
    pub bdk_satisfied: bool,
    pub jpd_exists: bool,
    pub degenerate_coupling: bool,
    pub consistent: bool,
}

/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cbd_report_summary(
    report: *const CbdReport,
    out: *mut CbdSummary,
) -> CbdStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = CbdSummary {
            delta0: r.signaling.delta0,
            delta_chsh: r.chsh.delta_chsh,
            s_max: r.chsh.s_max,
            delta_min: r.delta_min_lp,
            genuine: r.genuine,
            bdk_satisfied: r.bdk_satisfied,
            jpd_exists: r.jpd_exists,
            degenerate_coupling: r.degenerate_coupling,
            consistent: r.consistent,
        };
        Ok(())
    })
}

/// Report as JSON. Release the string with [`cbd_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cbd_report_json(
    report: *const CbdReport,
    out: *mut *mut c_char,
) -> CbdStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CString::new(r.0.to_json())
            .map_err(|_| (CbdStatus::InvalidInput, "report contains NUL".to_string()))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// # Safety
/// `report` must come from [`cbd_analyze`], or be null.
#[no_mangle]
pub unsafe extern "C" fn cbd_report_free(report: *mut CbdReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn cbd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
