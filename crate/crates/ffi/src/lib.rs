//! C ABI for the sensor2edge simulator.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns an
//! [`S2eStatus`]; on failure `s2e_last_error_message` describes the
//! problem on the calling thread. Outputs are written through pointer
//! arguments only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sensor2edge::fiveg::{symbol_bandwidth, NumerologyConfig};
use sensor2edge::report::{Mode, ReportBundle};
use sensor2edge::safety::safety_distance;
use sensor2edge::scenario::{load_scenario, sweep, RunResult, RunStats, Scenario};
use sensor2edge::time::SimDuration;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum S2eStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// The scenario text failed validation.
    Invalid = 3,
    Io = 4,
    /// The simulation could not run (e.g. no seeds).
    Simulation = 5,
    /// The requested statistic has no samples.
    Empty = 6,
    OutOfRange = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

/// A parsed, validated scenario.
pub struct S2eScenario {
    scenario: Scenario,
    text: String,
}

/// Results of one run or a merged sweep.
pub struct S2eRunResult {
    runs: Vec<RunResult>,
    merged: RunStats,
    text: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), (S2eStatus, String)>>(f: F) -> S2eStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => S2eStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            S2eStatus::Internal
        }
    }
}

fn null(what: &str) -> (S2eStatus, String) {
    (S2eStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (S2eStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (S2eStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (S2eStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

fn parse(text: &str) -> Result<Box<S2eScenario>, (S2eStatus, String)> {
    match load_scenario(text) {
        Ok(scenario) => Ok(Box::new(S2eScenario {
            scenario,
            text: text.to_string(),
        })),
        Err(e) => Err((S2eStatus::Invalid, e.to_string())),
    }
}

/// Parses and validates scenario text. On failure the diagnostics, one per
/// line with `line:column`, are available from `s2e_last_error_message`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out_scenario` must be writable.
#[no_mangle]
pub unsafe extern "C" fn s2e_scenario_load(
    text: *const c_char,
    out_scenario: *mut *mut S2eScenario,
) -> S2eStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        let text = str_arg(text, "text")?;
        *slot = Box::into_raw(parse(text)?);
        Ok(())
    })
}

/// Reads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_scenario` must be writable.
#[no_mangle]
pub unsafe extern "C" fn s2e_scenario_load_file(
    path: *const c_char,
    out_scenario: *mut *mut S2eScenario,
) -> S2eStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        let path = str_arg(path, "path")?;
        let text =
            std::fs::read_to_string(path).map_err(|e| (S2eStatus::Io, format!("{path}: {e}")))?;
        *slot = Box::into_raw(parse(&text)?);
        Ok(())
    })
}

/// The built-in testbed scenario.
///
/// # Safety
/// `out_scenario` must be writable.
#[no_mangle]
pub unsafe extern "C" fn s2e_scenario_default(out_scenario: *mut *mut S2eScenario) -> S2eStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        *slot = Box::into_raw(parse(sensor2edge::scenario::DEFAULT_SCENARIO)?);
        Ok(())
    })
}

/// Overrides the number of capture sequences. Reports still echo the
/// text the scenario was loaded from.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn s2e_scenario_set_sequences(
    scenario: *mut S2eScenario,
    sequences: u32,
) -> S2eStatus {
    guard(|| {
        let s = out(scenario, "scenario")?;
        if sequences == 0 {
            return Err((S2eStatus::OutOfRange, "sequences must be at least 1".into()));
        }
        s.scenario.source.sequences = sequences;
        Ok(())
    })
}

/// Sum of the configured per-hop budgets, in microseconds.
///
/// # Safety
/// `scenario` must be a live handle; `out_us` must be writable.
#[no_mangle]
pub unsafe extern "C" fn s2e_scenario_worst_case_us(
    scenario: *const S2eScenario,
    out_us: *mut u64,
) -> S2eStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        *out(out_us, "out_us")? = s.scenario.worst_case().0;
        Ok(())
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must come from a load function and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn s2e_scenario_free(scenario: *mut S2eScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

fn simulate(
    s: &S2eScenario,
    seeds: &[u64],
    parallel: usize,
) -> Result<Box<S2eRunResult>, (S2eStatus, String)> {
    let w =
        sweep(&s.scenario, seeds, parallel).map_err(|e| (S2eStatus::Simulation, e.to_string()))?;
    Ok(Box::new(S2eRunResult {
        runs: w.runs,
        merged: w.merged,
        text: s.text.clone(),
    }))
}

/// Simulates one seed.
///
/// # Safety
/// `scenario` must be a live handle; `out_result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn s2e_run(
    scenario: *const S2eScenario,
    seed: u64,
    out_result: *mut *mut S2eRunResult,
) -> S2eStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let slot = out(out_result, "out_result")?;
        *slot = Box::into_raw(simulate(s, &[seed], 1)?);
        Ok(())
    })
}

/// Simulates every seed in `seeds[0..count]` on `parallel` threads and
/// merges the statistics.
///
/// # Safety
/// `seeds` must point to `count` readable values; other pointers as for
/// `s2e_run`.
#[no_mangle]
pub unsafe extern "C" fn s2e_sweep(
    scenario: *const S2eScenario,
    seeds: *const u64,
    count: usize,
    parallel: usize,
    out_result: *mut *mut S2eRunResult,
) -> S2eStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let slot = out(out_result, "out_result")?;
        if count == 0 {
            return Err((
                S2eStatus::OutOfRange,
                "at least one seed is required".into(),
            ));
        }
        if seeds.is_null() {
            return Err(null("seeds"));
        }
        let seeds = std::slice::from_raw_parts(seeds, count);
        *slot = Box::into_raw(simulate(s, seeds, parallel.max(1))?);
        Ok(())
    })
}

/// Releases a result. Null is ignored.
///
/// # Safety
/// `result` must come from `s2e_run`/`s2e_sweep` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn s2e_result_free(result: *mut S2eRunResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

unsafe fn with_result<T>(
    result: *const S2eRunResult,
    dst: *mut T,
    f: impl FnOnce(&S2eRunResult) -> Result<T, (S2eStatus, String)>,
) -> S2eStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let slot = out(dst, "output")?;
        *slot = f(r)?;
        Ok(())
    })
}

fn empty() -> (S2eStatus, String) {
    (S2eStatus::Empty, "no end-to-end samples".into())
}

/// Number of toggles raised by the source.
///
/// # Safety
/// `result` must be a live handle; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn s2e_result_toggles(
    result: *const S2eRunResult,
    out_count: *mut u64,
) -> S2eStatus {
    with_result(result, out_count, |r| Ok(r.merged.toggles))
}

/// Number of toggles that reached the actuator.
///
/// # Safety
/// As for `s2e_result_toggles`.
#[no_mangle]
pub unsafe extern "C" fn s2e_result_samples(
    result: *const S2eRunResult,
    out_count: *mut u64,
) -> S2eStatus {
    with_result(result, out_count, |r| Ok(r.merged.samples()))
}

/// Number of toggles lost on the wireless link.
///
/// # Safety
/// As for `s2e_result_toggles`.
#[no_mangle]
pub unsafe extern "C" fn s2e_result_losses(
    result: *const S2eRunResult,
    out_count: *mut u64,
) -> S2eStatus {
    with_result(result, out_count, |r| Ok(r.merged.losses))
}

/// Mean end-to-end latency in microseconds.
///
/// # Safety
/// As for `s2e_result_toggles`.
#[no_mangle]
pub unsafe extern "C" fn s2e_result_mean_us(
    result: *const S2eRunResult,
    out_mean: *mut f64,
) -> S2eStatus {
    with_result(result, out_mean, |r| {
        r.merged.end_to_end().mean().ok_or_else(empty)
    })
}

/// Largest end-to-end latency in microseconds.
///
/// # Safety
/// As for `s2e_result_toggles`.
#[no_mangle]
pub unsafe extern "C" fn s2e_result_max_us(
    result: *const S2eRunResult,
    out_max: *mut u64,
) -> S2eStatus {
    with_result(result, out_max, |r| {
        r.merged.end_to_end().max().map(|d| d.0).ok_or_else(empty)
    })
}

/// End-to-end percentile `p` (0..=100), at histogram resolution.
///
/// # Safety
/// As for `s2e_result_toggles`.
#[no_mangle]
pub unsafe extern "C" fn s2e_result_percentile_us(
    result: *const S2eRunResult,
    p: f64,
    out_value: *mut u64,
) -> S2eStatus {
    with_result(result, out_value, |r| {
        let e2e = r.merged.end_to_end();
        if e2e.count() == 0 {
            return Err(empty());
        }
        e2e.percentile(p)
            .map(|d| d.0)
            .map_err(|e| (S2eStatus::OutOfRange, e.to_string()))
    })
}

/// Full JSON report. `generated_at_unix` is stored verbatim; pass 0 for
/// reproducible output. Release the string with `s2e_string_free`.
///
/// # Safety
/// `result` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn s2e_result_report_json(
    result: *const S2eRunResult,
    generated_at_unix: u64,
    out_json: *mut *mut c_char,
) -> S2eStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let slot = out(out_json, "out_json")?;
        let mode = if r.runs.len() == 1 {
            Mode::Run
        } else {
            Mode::Sweep
        };
        let json =
            ReportBundle::build(&r.text, &r.runs, &r.merged, mode, generated_at_unix).to_json();
        *slot = CString::new(json)
            .map_err(|e| (S2eStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn s2e_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn s2e_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Bandwidth of one OFDM symbol (12 subcarriers) in kHz.
///
/// # Safety
/// `out_khz` must be writable.
#[no_mangle]
pub unsafe extern "C" fn s2e_symbol_bandwidth_khz(scs_khz: u32, out_khz: *mut u32) -> S2eStatus {
    guard(|| {
        let slot = out(out_khz, "out_khz")?;
        let n =
            NumerologyConfig::new(scs_khz).map_err(|e| (S2eStatus::OutOfRange, e.to_string()))?;
        *slot = symbol_bandwidth(&n).map_err(|e| (S2eStatus::OutOfRange, e.to_string()))?;
        Ok(())
    })
}

/// Minimum safety distance for a response time and approach speed. Either
/// output pointer may be null.
///
/// # Safety
/// Non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn s2e_safety_distance_m(
    sfrt_us: u64,
    speed_m_s: f64,
    out_meters: *mut f64,
    out_presented: *mut f64,
) -> S2eStatus {
    guard(|| {
        if !(speed_m_s.is_finite() && speed_m_s > 0.0) {
            return Err((
                S2eStatus::OutOfRange,
                format!("approach speed {speed_m_s} must be positive"),
            ));
        }
        let d = safety_distance(SimDuration(sfrt_us), speed_m_s);
        if let Some(m) = out_meters.as_mut() {
            *m = d.meters;
        }
        if let Some(p) = out_presented.as_mut() {
            *p = d.presented_m;
        }
        Ok(())
    })
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn s2e_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
