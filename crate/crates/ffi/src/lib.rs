//! C ABI over the `sscn` library.
//!
//! Scenarios and results are opaque handles created by `sscn_*` functions and
//! released with the matching `*_free`. Every fallible call returns an
//! [`SscnStatus`]; on failure a message is kept per thread and can be copied
//! out with [`sscn_last_error_message`]. Strings going out are copied into
//! caller buffers, so the library never hands over memory the caller must
//! free.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sscn::solution::SolveResult;
use sscn::{generate_scenario, run_baseline, run_solver, BaselineKind, Error, Scenario, ScenarioConfig, SolverParams};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SscnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    Parse = 4,
    InvalidArgument = 5,
    Infeasible = 6,
    TooLarge = 7,
    Io = 8,
    OutOfRange = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Values accepted by the `kind` argument of [`sscn_baseline`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SscnBaseline {
    Rpd = 0,
    Mpk = 1,
}

pub struct SscnScenario(Scenario);

pub struct SscnResult(SolveResult);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> SscnStatus {
    match err {
        Error::InvalidConfig(_) => SscnStatus::InvalidConfig,
        Error::Parse { .. } => SscnStatus::Parse,
        Error::Io(_) => SscnStatus::Io,
        Error::SparseTopology { .. }
        | Error::InfeasiblePair { .. }
        | Error::InfeasibleUser { .. }
        | Error::UnstableQueue { .. } => SscnStatus::Infeasible,
        Error::TooLarge { .. } => SscnStatus::TooLarge,
        Error::InvalidArgument(_)
        | Error::NonPositiveDistance(_)
        | Error::NotAPermutation(_)
        | Error::NotEligible { .. }
        | Error::InvalidPairing(_)
        | Error::MissingPairSolution { .. } => SscnStatus::InvalidArgument,
    }
}

struct Failure(SscnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Run `f`, recording the message of any error or panic.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SscnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SscnStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            SscnStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SscnStatus::NullPointer, format!("{what} is null"))
}

/// `None` for a null pointer.
unsafe fn opt_str<'a>(s: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if s.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(s)
        .to_str()
        .map(Some)
        .map_err(|_| Failure(SscnStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn req_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    opt_str(s, what)?.ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Copy `text` plus a NUL into `buf`. `*out_len` (if given) receives the
/// required size including the NUL. A null `buf` only queries the size.
unsafe fn copy_out(text: &str, buf: *mut c_char, cap: usize, out_len: *mut usize) -> Result<(), Failure> {
    let needed = text.len() + 1;
    if !out_len.is_null() {
        out_len.write(needed);
    }
    if buf.is_null() {
        return Ok(());
    }
    if cap < needed {
        return Err(Failure(SscnStatus::BufferTooSmall, format!("buffer holds {cap} bytes, {needed} needed")));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
    buf.add(text.len()).write(0);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sscn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes; `out_len` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sscn_last_error_message(buf: *mut c_char, cap: usize, out_len: *mut usize) -> SscnStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match copy_out(&msg, buf, cap, out_len) {
        Ok(()) => SscnStatus::Ok,
        Err(Failure(s, _)) => s,
    }
}

/// Draw a scenario. `config_toml` may be null for the default configuration.
///
/// # Safety
/// `config_toml` must be null or a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sscn_scenario_generate(config_toml: *const c_char, out: *mut *mut SscnScenario) -> SscnStatus {
    guard(|| {
        let cfg = match opt_str(config_toml, "config_toml")? {
            Some(t) => ScenarioConfig::from_toml_str(t)?,
            None => ScenarioConfig::default(),
        };
        let scn = generate_scenario(&cfg)?;
        put(out, Box::into_raw(Box::new(SscnScenario(scn))), "out")
    })
}

/// Load a scenario previously exported with [`sscn_scenario_to_json`].
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sscn_scenario_from_json(json: *const c_char, out: *mut *mut SscnScenario) -> SscnStatus {
    guard(|| {
        let scn = Scenario::from_json(req_str(json, "json")?)?;
        put(out, Box::into_raw(Box::new(SscnScenario(scn))), "out")
    })
}

/// # Safety
/// `scn` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sscn_scenario_free(scn: *mut SscnScenario) {
    if !scn.is_null() {
        drop(Box::from_raw(scn));
    }
}

/// Number of users, 0 for a null handle.
///
/// # Safety
/// `scn` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sscn_scenario_num_users(scn: *const SscnScenario) -> usize {
    scn.as_ref().map_or(0, |s| s.0.num_users())
}

/// Number of KBs, 0 for a null handle.
///
/// # Safety
/// `scn` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sscn_scenario_num_kbs(scn: *const SscnScenario) -> usize {
    scn.as_ref().map_or(0, |s| s.0.num_kbs())
}

/// # Safety
/// `scn` must be a live handle; `buf`/`out_len` as for [`sscn_last_error_message`].
#[no_mangle]
pub unsafe extern "C" fn sscn_scenario_to_json(
    scn: *const SscnScenario,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> SscnStatus {
    guard(|| copy_out(&handle(scn, "scn")?.0.to_json(), buf, cap, out_len))
}

/// Run the dual solver. `solver_toml` may be null for default parameters.
///
/// # Safety
/// `scn` must be a live handle, `solver_toml` null or NUL-terminated, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sscn_solve(
    scn: *const SscnScenario,
    solver_toml: *const c_char,
    out: *mut *mut SscnResult,
) -> SscnStatus {
    guard(|| {
        let scn = handle(scn, "scn")?;
        let params = match opt_str(solver_toml, "solver_toml")? {
            Some(t) => SolverParams::from_toml_str(t)?,
            None => SolverParams::default(),
        };
        let res = run_solver(&scn.0, &params)?;
        put(out, Box::into_raw(Box::new(SscnResult(res))), "out")
    })
}

/// Run a comparison scheme; `kind` is an [`SscnBaseline`] value.
///
/// # Safety
/// `scn` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sscn_baseline(
    scn: *const SscnScenario,
    kind: u32,
    seed: u64,
    out: *mut *mut SscnResult,
) -> SscnStatus {
    guard(|| {
        let scn = handle(scn, "scn")?;
        let kind = match kind {
            k if k == SscnBaseline::Rpd as u32 => BaselineKind::Rpd,
            k if k == SscnBaseline::Mpk as u32 => BaselineKind::Mpk,
            k => return Err(Failure(SscnStatus::InvalidArgument, format!("unknown baseline kind {k}"))),
        };
        let res = run_baseline(&scn.0, kind, seed)?;
        put(out, Box::into_raw(Box::new(SscnResult(res))), "out")
    })
}

/// # Safety
/// `res` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sscn_result_free(res: *mut SscnResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Network SST, NaN for a null handle.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sscn_result_sst(res: *const SscnResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.0.sst)
}

/// Mean SST over matched directed links, NaN for a null handle.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sscn_result_mean_link_sst(res: *const SscnResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.0.mean_link_sst())
}

/// Mean queuing delay over matched directed links (inf if one is unstable).
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sscn_result_mean_link_delay(res: *const SscnResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.0.mean_link_delay())
}

/// Number of matched directed links.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sscn_result_num_links(res: *const SscnResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.links.len())
}

/// 1 when the result has no structural, delay or SST violations, else 0.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sscn_result_is_feasible(res: *const SscnResult) -> i32 {
    res.as_ref().map_or(0, |r| i32::from(r.0.report.is_feasible()))
}

unsafe fn user_field<T>(
    res: *const SscnResult,
    user: usize,
    out: *mut T,
    get: impl FnOnce(&SolveResult, usize) -> T,
) -> SscnStatus {
    guard(|| {
        let r = &handle(res, "res")?.0;
        if user >= r.powers.len() {
            return Err(Failure(SscnStatus::OutOfRange, format!("user {user} out of range 0..{}", r.powers.len())));
        }
        put(out, get(r, user), "out")
    })
}

/// Partner of `user`, or -1 when unpaired.
///
/// # Safety
/// `res` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sscn_result_partner(res: *const SscnResult, user: usize, out: *mut i64) -> SscnStatus {
    user_field(res, user, out, |r, u| r.pairing.partner(u).map_or(-1, |v| v as i64))
}

/// Transmit power of `user` in watts.
///
/// # Safety
/// `res` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sscn_result_power(res: *const SscnResult, user: usize, out: *mut f64) -> SscnStatus {
    user_field(res, user, out, |r, u| r.powers[u])
}

/// Cache of `user` as a bit mask (bit k set when KB k is cached).
///
/// # Safety
/// `res` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sscn_result_cache_bits(res: *const SscnResult, user: usize, out: *mut u64) -> SscnStatus {
    user_field(res, user, out, |r, u| r.caches[u].kbs.bits())
}

/// # Safety
/// `res` must be a live handle; `buf`/`out_len` as for [`sscn_last_error_message`].
#[no_mangle]
pub unsafe extern "C" fn sscn_result_to_json(
    res: *const SscnResult,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> SscnStatus {
    guard(|| copy_out(&handle(res, "res")?.0.to_json(), buf, cap, out_len))
}
