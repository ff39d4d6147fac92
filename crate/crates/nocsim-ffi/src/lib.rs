//! C ABI for the simulator: opaque handles, integer status codes, and
//! caller-freed UTF-8 strings. A handle wraps one scenario; `nocsim_run`
//! executes it to completion (rebuilding the engine each call, so reseeding
//! and re-running the same handle is cheap and deterministic), after which
//! the metric getters read from the stored report.
//!
//! Conventions: every fallible call returns a `NOCSIM_*` status code and
//! writes results through out-pointers; on failure a thread-local message is
//! set, readable via `nocsim_last_error_message`. Strings returned through
//! `char**` belong to the caller and must be released with
//! `nocsim_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nocsim::config::{ConfigError, ScenarioConfig};
use nocsim::metrics::MetricsReport;
use nocsim::sim::{Engine, SimError};

/// Success.
pub const NOCSIM_OK: i32 = 0;
/// A required pointer argument was null.
pub const NOCSIM_ERR_NULL: i32 = -1;
/// The scenario failed parsing or validation.
pub const NOCSIM_ERR_VALIDATION: i32 = -2;
/// The run tripped the no-progress watchdog.
pub const NOCSIM_ERR_WATCHDOG: i32 = -3;
/// A file could not be read.
pub const NOCSIM_ERR_IO: i32 = -4;
/// The call is not valid in the handle's current state (e.g. reading
/// metrics before a run, or an internal failure captured at the boundary).
pub const NOCSIM_ERR_STATE: i32 = -5;

/// One configured scenario and, after `nocsim_run`, its metrics.
pub struct NocSim {
    cfg: ScenarioConfig,
    report: Option<MetricsReport>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl std::fmt::Display) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).ok();
    });
}

fn config_code(e: &ConfigError) -> i32 {
    match e {
        ConfigError::Io { .. } => NOCSIM_ERR_IO,
        _ => NOCSIM_ERR_VALIDATION,
    }
}

fn null_check<T>(ptr: *const T, what: &str) -> Option<i32> {
    if ptr.is_null() {
        set_error(format!("{what} is null"));
        Some(NOCSIM_ERR_NULL)
    } else {
        None
    }
}

/// Builds a handle from validated scenario config text.
fn new_from_config(cfg: ScenarioConfig) -> Result<*mut NocSim, i32> {
    if let Err(e) = cfg.validate() {
        let code = config_code(&e);
        set_error(e);
        return Err(code);
    }
    Ok(Box::into_raw(Box::new(NocSim { cfg, report: None })))
}

/// Parses scenario config text into a new handle, or returns null (see
/// `nocsim_last_error_message`). Relative trace paths resolve against the
/// current directory.
///
/// # Safety
/// `text` must point to a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nocsim_new_from_str(text: *const c_char) -> *mut NocSim {
    if null_check(text, "config text").is_some() {
        return std::ptr::null_mut();
    }
    let Ok(text) = CStr::from_ptr(text).to_str() else {
        set_error("config text is not valid UTF-8");
        return std::ptr::null_mut();
    };
    match ScenarioConfig::parse(text, std::path::Path::new(".")) {
        Ok(cfg) => new_from_config(cfg).unwrap_or(std::ptr::null_mut()),
        Err(e) => {
            set_error(e);
            std::ptr::null_mut()
        }
    }
}

/// Loads a scenario config file into a new handle, or returns null (see
/// `nocsim_last_error_message`).
///
/// # Safety
/// `path` must point to a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nocsim_new_from_file(path: *const c_char) -> *mut NocSim {
    if null_check(path, "config path").is_some() {
        return std::ptr::null_mut();
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        set_error("config path is not valid UTF-8");
        return std::ptr::null_mut();
    };
    match ScenarioConfig::load(std::path::Path::new(path)) {
        Ok(cfg) => new_from_config(cfg).unwrap_or(std::ptr::null_mut()),
        Err(e) => {
            set_error(e);
            std::ptr::null_mut()
        }
    }
}

/// Overrides the scenario's RNG seed; takes effect at the next `nocsim_run`.
///
/// # Safety
/// `sim` must be a live handle from a `nocsim_new_*` call.
#[no_mangle]
pub unsafe extern "C" fn nocsim_set_seed(sim: *mut NocSim, seed: u64) -> i32 {
    if let Some(code) = null_check(sim, "handle") {
        return code;
    }
    (*sim).cfg.seed = seed;
    NOCSIM_OK
}

/// Runs the scenario to completion and stores its metrics on the handle,
/// replacing any previous run's.
///
/// # Safety
/// `sim` must be a live handle from a `nocsim_new_*` call.
#[no_mangle]
pub unsafe extern "C" fn nocsim_run(sim: *mut NocSim) -> i32 {
    if let Some(code) = null_check(sim, "handle") {
        return code;
    }
    let handle = &mut *sim;
    let outcome = catch_unwind(AssertUnwindSafe(|| -> Result<MetricsReport, SimError> {
        let mut eng = Engine::new(handle.cfg.clone())?;
        eng.run()?;
        Ok(eng.report())
    }));
    match outcome {
        Ok(Ok(report)) => {
            handle.report = Some(report);
            NOCSIM_OK
        }
        Ok(Err(SimError::Validation(e))) => {
            let code = config_code(&e);
            set_error(e);
            code
        }
        Ok(Err(e @ SimError::Watchdog { .. })) => {
            set_error(e);
            NOCSIM_ERR_WATCHDOG
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal failure: {msg}"));
            NOCSIM_ERR_STATE
        }
    }
}

fn report_of<'a>(sim: *const NocSim) -> Result<&'a MetricsReport, i32> {
    match unsafe { sim.as_ref() } {
        None => {
            set_error("handle is null");
            Err(NOCSIM_ERR_NULL)
        }
        Some(h) => h.report.as_ref().ok_or_else(|| {
            set_error("scenario has not been run yet");
            NOCSIM_ERR_STATE
        }),
    }
}

fn read_count(sim: *const NocSim, out: *mut u64, pick: fn(&MetricsReport) -> u64) -> i32 {
    if let Some(code) = null_check(out, "out pointer") {
        return code;
    }
    match report_of(sim) {
        Ok(r) => {
            unsafe { *out = pick(r) };
            NOCSIM_OK
        }
        Err(code) => code,
    }
}

fn read_metric(sim: *const NocSim, out: *mut f64, pick: fn(&MetricsReport) -> f64) -> i32 {
    if let Some(code) = null_check(out, "out pointer") {
        return code;
    }
    match report_of(sim) {
        Ok(r) => {
            unsafe { *out = pick(r) };
            NOCSIM_OK
        }
        Err(code) => code,
    }
}

/// Packets created inside the measurement window.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nocsim_injected(sim: *const NocSim, out: *mut u64) -> i32 {
    read_count(sim, out, |r| r.injected)
}

/// Measured packets delivered to their destination.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nocsim_delivered(sim: *const NocSim, out: *mut u64) -> i32 {
    read_count(sim, out, |r| r.delivered)
}

/// Measured packets lost to faulty links.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nocsim_dropped(sim: *const NocSim, out: *mut u64) -> i32 {
    read_count(sim, out, |r| r.dropped)
}

/// Average packet latency in cycles over delivered measured packets.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nocsim_apl(sim: *const NocSim, out: *mut f64) -> i32 {
    read_metric(sim, out, |r| r.apl)
}

/// Ejected flits per node per cycle inside the window.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nocsim_throughput(sim: *const NocSim, out: *mut f64) -> i32 {
    read_metric(sim, out, |r| r.throughput)
}

/// Total energy charged to window activity.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nocsim_energy(sim: *const NocSim, out: *mut f64) -> i32 {
    read_metric(sim, out, |r| r.energy)
}

/// Power-latency product.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nocsim_plp(sim: *const NocSim, out: *mut f64) -> i32 {
    read_metric(sim, out, |r| r.plp)
}

/// Dropped / injected; 0 when nothing was injected.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nocsim_drop_ratio(sim: *const NocSim, out: *mut f64) -> i32 {
    read_metric(sim, out, |r| r.drop_ratio())
}

/// Copies the run's metrics as a two-line CSV (header, row) into `*out`.
/// The string belongs to the caller: release it with `nocsim_string_free`.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nocsim_metrics_csv(sim: *const NocSim, out: *mut *mut c_char) -> i32 {
    if let Some(code) = null_check(out, "out pointer") {
        return code;
    }
    match report_of(sim) {
        Ok(r) => {
            let text = format!("{}\n{}\n", MetricsReport::csv_header(), r.csv_row());
            let Ok(owned) = CString::new(text) else {
                set_error("metrics contained an interior NUL");
                return NOCSIM_ERR_STATE;
            };
            *out = owned.into_raw();
            NOCSIM_OK
        }
        Err(code) => code,
    }
}

/// Returns the most recent failure message on this thread as a caller-owned
/// string (release with `nocsim_string_free`), or null if none was recorded.
#[no_mangle]
pub extern "C" fn nocsim_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must have come from this library and not been freed already.
#[no_mangle]
pub unsafe extern "C" fn nocsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a handle. Null is a no-op.
///
/// # Safety
/// `sim` must have come from a `nocsim_new_*` call and not been freed already.
#[no_mangle]
pub unsafe extern "C" fn nocsim_free(sim: *mut NocSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn nocsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
