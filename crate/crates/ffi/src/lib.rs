//! C ABI over the persuasion library.
//!
//! Every fallible call returns a [`PmStatus`]; on failure the message is kept
//! per thread and read with [`pm_last_error_message`]. Strings handed out by
//! the library are released with [`pm_string_free`], handles with their own
//! `_free` function. Rationals cross the boundary as `"p/q"` strings.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use clap::ValueEnum;
use persuasion::casebook::CaseReport;
use persuasion::cli::config::{self, Overrides, Scenario};
use persuasion::cli::{self, CaseArgs, CaseId, MethodArg};
use persuasion::error::Error;
use persuasion::measures::DiscreteMeasure;
use persuasion::policies::{greedy_mass, interval_measure};
use persuasion::rational::{self, Rational};
use serde::Deserialize;

/// Result of a library call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON or rational text.
    Parse = 3,
    /// Well-formed input outside the model's domain.
    InvalidInput = 4,
    /// The solver could not finish (size cap, tolerance, infeasibility).
    Solver = 5,
    /// A case ran to completion but some expectation failed.
    CaseFailed = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// Solver selection for [`pm_solve`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmMethod {
    /// LP for finite horizons, value iteration otherwise.
    Default = 0,
    Lp = 1,
    Interval = 2,
    Greedy = 3,
    ValueIter = 4,
}

/// Opaque finite measure on `[0, 1]`.
pub struct PmMeasure {
    inner: DiscreteMeasure,
}

/// Opaque loaded scenario.
pub struct PmScenario {
    inner: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Fail {
    status: PmStatus,
    message: String,
}

impl Fail {
    fn new(status: PmStatus, message: impl Into<String>) -> Self {
        Fail { status, message: message.into() }
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) => PmStatus::Parse,
            Error::HorizonTooLarge { .. } | Error::InfeasibleSpec(_) | Error::ToleranceUnachievable { .. } => {
                PmStatus::Solver
            }
            _ => PmStatus::InvalidInput,
        };
        Fail::new(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> PmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PmStatus::Ok,
        Ok(Err(fail)) => {
            set_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal error: {what}"));
            PmStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::new(PmStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::new(PmStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn rational_arg(p: *const c_char, what: &str) -> Result<Rational, Fail> {
    Ok(rational::parse(text(p, what)?)?)
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail::new(PmStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::new(PmStatus::NullPointer, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul in generated text").into_raw()
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `[["p","w"], …]` into a measure handle.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_measure_from_json(json: *const c_char, out: *mut *mut PmMeasure) -> PmStatus {
    guard(|| {
        let inner: DiscreteMeasure = serde_json::from_str(text(json, "json")?)
            .map_err(|e| Fail::new(PmStatus::Parse, e.to_string()))?;
        put(out, Box::into_raw(Box::new(PmMeasure { inner })))
    })
}

/// Canonical JSON of a measure; free the result with [`pm_string_free`].
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_measure_to_json(m: *const PmMeasure, out: *mut *mut c_char) -> PmStatus {
    guard(|| {
        let m = handle(m, "measure")?;
        let s = serde_json::to_string(&m.inner).map_err(|e| Fail::new(PmStatus::Parse, e.to_string()))?;
        put(out, owned_string(s))
    })
}

/// # Safety
/// `m` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn pm_measure_free(m: *mut PmMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Total mass as a rational string.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_measure_total_mass(m: *const PmMeasure, out: *mut *mut c_char) -> PmStatus {
    guard(|| {
        let m = handle(m, "measure")?;
        put(out, owned_string(rational::format(&m.inner.total_mass())))
    })
}

/// Barycenter as a rational string; fails on the zero measure.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_measure_barycenter(m: *const PmMeasure, out: *mut *mut c_char) -> PmStatus {
    guard(|| {
        let m = handle(m, "measure")?;
        put(out, owned_string(rational::format(&m.inner.barycenter()?)))
    })
}

/// Mass of the largest sub-measure with barycenter at least `threshold`.
///
/// # Safety
/// `m` must be a live handle; `threshold` a nul-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pm_greedy_mass(
    m: *const PmMeasure,
    threshold: *const c_char,
    out: *mut *mut c_char,
) -> PmStatus {
    guard(|| {
        let m = handle(m, "measure")?;
        let l = rational_arg(threshold, "threshold")?;
        put(out, owned_string(rational::format(&greedy_mass(&m.inner, &l)?)))
    })
}

/// Interval sub-measure of the given mass with barycenter `threshold`, as a new handle.
///
/// # Safety
/// `m` must be a live handle; `threshold` and `mass` nul-terminated strings; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pm_interval_measure(
    m: *const PmMeasure,
    threshold: *const c_char,
    mass: *const c_char,
    out: *mut *mut PmMeasure,
) -> PmStatus {
    guard(|| {
        let m = handle(m, "measure")?;
        let l = rational_arg(threshold, "threshold")?;
        let beta = rational_arg(mass, "mass")?;
        let inner = interval_measure(&m.inner, &l, &beta)?;
        put(out, Box::into_raw(Box::new(PmMeasure { inner })))
    })
}

/// Builds a scenario from the text of a scenario file.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_scenario_load(json: *const c_char, out: *mut *mut PmScenario) -> PmStatus {
    guard(|| {
        let body = text(json, "json")?;
        let inner = config::load_str(body, "<scenario>", &Overrides::default())
            .map_err(|e| Fail::new(PmStatus::Parse, e.to_string()))?;
        put(out, Box::into_raw(Box::new(PmScenario { inner })))
    })
}

/// # Safety
/// `s` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn pm_scenario_free(s: *mut PmScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Solves a scenario and writes the result JSON, the same document `persuade solve` prints.
///
/// # Safety
/// `s` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_solve(s: *const PmScenario, method: PmMethod, out_json: *mut *mut c_char) -> PmStatus {
    guard(|| {
        let s = handle(s, "scenario")?;
        let method = match method {
            PmMethod::Default => None,
            PmMethod::Lp => Some(MethodArg::Lp),
            PmMethod::Interval => Some(MethodArg::Interval),
            PmMethod::Greedy => Some(MethodArg::Greedy),
            PmMethod::ValueIter => Some(MethodArg::ValueIter),
        };
        let res = cli::solve_scenario(&s.inner, method)?;
        put(out_json, owned_string(cli::solve_report(&s.inner, &res, 12)?))
    })
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseParams {
    w2: Option<String>,
    l: Option<String>,
    q: Option<String>,
    atoms: Option<usize>,
    delta: Option<String>,
    eps: Option<String>,
    seed: Option<u64>,
    trials: Option<usize>,
}

fn opt_rational(v: &Option<String>) -> Result<Option<Rational>, Fail> {
    v.as_deref().map(rational::parse).transpose().map_err(Fail::from)
}

fn case_args(id: &str, params: &CaseParams) -> Result<CaseArgs, Fail> {
    let id = CaseId::from_str(id, false).map_err(|_| Fail::new(PmStatus::InvalidInput, format!("unknown case {id:?}")))?;
    Ok(CaseArgs {
        id,
        w2: opt_rational(&params.w2)?,
        l: opt_rational(&params.l)?,
        q: opt_rational(&params.q)?,
        atoms: params.atoms,
        delta: opt_rational(&params.delta)?,
        eps: opt_rational(&params.eps)?,
        seed: params.seed.unwrap_or(1),
        trials: params.trials.unwrap_or(100),
        out: None,
    })
}

/// Runs a worked case (`counterexample`, `example1`, `example1-cutoffs`,
/// `example2`, `prop1`, `lemmas`). `params_json` is an optional object such as
/// `{"w2": "4/5"}`. The report is written even when the case fails, in which
/// case the status is `CaseFailed`.
///
/// # Safety
/// `case_id` must be a nul-terminated string, `params_json` null or one;
/// `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_case_run(
    case_id: *const c_char,
    params_json: *const c_char,
    out_json: *mut *mut c_char,
) -> PmStatus {
    guard(|| {
        let id = text(case_id, "case id")?;
        let params: CaseParams = if params_json.is_null() {
            CaseParams::default()
        } else {
            serde_json::from_str(text(params_json, "params")?).map_err(|e| Fail::new(PmStatus::Parse, e.to_string()))?
        };
        let report: CaseReport = cli::run_case(&case_args(id, &params)?)?;
        let body = persuasion::cli::output::to_json(&report)?;
        put(out_json, owned_string(body))?;
        if report.pass {
            Ok(())
        } else {
            Err(Fail::new(PmStatus::CaseFailed, format!("case {} did not meet its expectations", report.case_id)))
        }
    })
}
