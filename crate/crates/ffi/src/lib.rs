//! C interface to `phgas`.
//!
//! Objects are opaque heap handles created by `*_from_json` / `phgas_simulate`
//! and released with the matching `*_free`. Every fallible call returns a
//! [`PhgasStatus`]; on failure the message is available from
//! [`phgas_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use phgas::app::{parse_network, parse_scenario, write_timeseries, Scenario};
use phgas::network::GlobalSystem;
use phgas::timeloop::{simulate, steady_solution, TimeSeries};
use phgas::{Error, ModelKind, NetworkSpec};

/// Result codes. `Ok` is zero; everything else is an error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhgasStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed or inconsistent input file.
    Parse = 3,
    /// Bad topology, parameter or option.
    Invalid = 4,
    /// Newton failure or a state the model cannot represent.
    Solver = 5,
    Io = 6,
    OutOfRange = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

/// Keep the compressor models declared in the network file.
pub const PHGAS_MODEL_DECLARED: i32 = -1;
/// Replace every compressor by a junction.
pub const PHGAS_MODEL_NONE: i32 = 0;
pub const PHGAS_MODEL_FC_AV: i32 = 1;
pub const PHGAS_MODEL_FC_AM: i32 = 2;
pub const PHGAS_MODEL_FP_AV: i32 = 3;
pub const PHGAS_MODEL_FP_AM: i32 = 4;

/// Parsed network description.
pub struct PhgasNetwork(NetworkSpec);

/// Parsed scenario, bound to the network it was checked against.
pub struct PhgasScenario(Scenario);

/// Simulation output: one row per record, columns as in the CSV output.
pub struct PhgasTimeSeries {
    series: TimeSeries,
    names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> PhgasStatus {
    match e {
        Error::Syntax { .. } | Error::Semantic(_) | Error::UnknownUnit(_) => PhgasStatus::Parse,
        Error::Io(_) => PhgasStatus::Io,
        Error::InvalidParameter(_) | Error::Config(_) | Error::Topology(_) => PhgasStatus::Invalid,
        _ => PhgasStatus::Solver,
    }
}

/// Runs `f`, recording any error or panic for `phgas_last_error_message`.
fn guard(f: impl FnOnce() -> Result<(), (PhgasStatus, String)>) -> PhgasStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PhgasStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error: panic caught at the C boundary");
            PhgasStatus::Internal
        }
    }
}

fn lib(e: Error) -> (PhgasStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PhgasStatus, String) {
    (PhgasStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, (PhgasStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (PhgasStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PhgasStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

fn model_override(spec: &NetworkSpec, model: i32) -> Result<NetworkSpec, (PhgasStatus, String)> {
    let spec = spec.clone();
    match model {
        PHGAS_MODEL_DECLARED => Ok(spec),
        PHGAS_MODEL_NONE => Ok(spec.without_compressors()),
        1..=4 => Ok(spec.with_model(ModelKind::ALL[(model - 1) as usize])),
        _ => Err((PhgasStatus::Invalid, format!("unknown model code {model}"))),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn phgas_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn phgas_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Isothermal sound speed `c = √(z Rs T)` in m/s.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn phgas_sound_speed(
    specific_gas_constant: f64,
    temperature: f64,
    compressibility: f64,
    out: *mut f64,
) -> PhgasStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = phgas::gas::sound_speed(specific_gas_constant, temperature, compressibility).map_err(lib)?;
        Ok(())
    })
}

/// Parses a network document. On success `*out` owns a new handle.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn phgas_network_from_json(json: *const c_char, out: *mut *mut PhgasNetwork) -> PhgasStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let spec = parse_network(text(json, "json")?).map_err(lib)?;
        *out = Box::into_raw(Box::new(PhgasNetwork(spec)));
        Ok(())
    })
}

/// # Safety
/// `network` must be null or a handle from `phgas_network_from_json` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn phgas_network_free(network: *mut PhgasNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// Parses a scenario document and checks it against `network`.
///
/// # Safety
/// Pointers must be null or valid as described for the other constructors.
#[no_mangle]
pub unsafe extern "C" fn phgas_scenario_from_json(
    network: *const PhgasNetwork,
    json: *const c_char,
    out: *mut *mut PhgasScenario,
) -> PhgasStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let net = handle(network, "network")?;
        let scn = parse_scenario(text(json, "json")?, &net.0).map_err(lib)?;
        *out = Box::into_raw(Box::new(PhgasScenario(scn)));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn phgas_scenario_free(scenario: *mut PhgasScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

fn prepare(
    net: &PhgasNetwork,
    scn: &PhgasScenario,
    model: i32,
    cells: u32,
) -> Result<(GlobalSystem, phgas::schedule::InputSchedule), (PhgasStatus, String)> {
    let mut spec = model_override(&net.0, model)?;
    if cells > 0 {
        spec = spec.with_cells(cells as usize);
    }
    let system = GlobalSystem::assemble(&spec).map_err(lib)?;
    let schedule = scn.0.schedule(&system).map_err(lib)?;
    Ok((system, schedule))
}

fn wrap(series: TimeSeries) -> *mut PhgasTimeSeries {
    let names = series
        .column_names()
        .into_iter()
        .map(|n| CString::new(n).unwrap_or_default())
        .collect();
    Box::into_raw(Box::new(PhgasTimeSeries { series, names }))
}

/// Runs the transient simulation.
///
/// `model` is one of the `PHGAS_MODEL_*` codes, `cells` overrides the cells
/// per pipe when positive and `dt` overrides the scenario step when positive.
///
/// # Safety
/// Handles must be live; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn phgas_simulate(
    network: *const PhgasNetwork,
    scenario: *const PhgasScenario,
    model: i32,
    cells: u32,
    dt: f64,
    out: *mut *mut PhgasTimeSeries,
) -> PhgasStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let scn = handle(scenario, "scenario")?;
        let (system, schedule) = prepare(handle(network, "network")?, scn, model, cells)?;
        let mut cfg = scn.0.solver_config();
        if dt > 0.0 {
            cfg.dt = dt;
        }
        let sim = simulate(&system, &schedule, &cfg).map_err(lib)?;
        *out = wrap(sim.series);
        Ok(())
    })
}

/// Solves the steady state for the inputs at t = 0 (a one-row series).
///
/// # Safety
/// As for [`phgas_simulate`].
#[no_mangle]
pub unsafe extern "C" fn phgas_steady(
    network: *const PhgasNetwork,
    scenario: *const PhgasScenario,
    model: i32,
    cells: u32,
    out: *mut *mut PhgasTimeSeries,
) -> PhgasStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let scn = handle(scenario, "scenario")?;
        let (system, schedule) = prepare(handle(network, "network")?, scn, model, cells)?;
        let (_, sample, _) = steady_solution(&system, &schedule, &scn.0.solver_config()).map_err(lib)?;
        let mut series = TimeSeries::new(system.pipe_ids(), system.compressor_ids());
        series.samples.push(sample);
        *out = wrap(series);
        Ok(())
    })
}

/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn phgas_timeseries_free(series: *mut PhgasTimeSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of records. Returns 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn phgas_timeseries_rows(series: *const PhgasTimeSeries) -> usize {
    series.as_ref().map_or(0, |s| s.series.len())
}

/// Number of columns, time included. Returns 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn phgas_timeseries_cols(series: *const PhgasTimeSeries) -> usize {
    series.as_ref().map_or(0, |s| s.names.len())
}

/// Column name, owned by the handle, or null when out of range.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn phgas_timeseries_column_name(series: *const PhgasTimeSeries, col: usize) -> *const c_char {
    series
        .as_ref()
        .and_then(|s| s.names.get(col))
        .map_or(ptr::null(), |n| n.as_ptr())
}

/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn phgas_timeseries_value(
    series: *const PhgasTimeSeries,
    row: usize,
    col: usize,
    out: *mut f64,
) -> PhgasStatus {
    guard(|| {
        let s = handle(series, "series")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if row >= s.series.len() || col >= s.names.len() {
            return Err((
                PhgasStatus::OutOfRange,
                format!("({row}, {col}) outside {}×{}", s.series.len(), s.names.len()),
            ));
        }
        *out = s.series.row(row)[col];
        Ok(())
    })
}

/// Writes the series as CSV to `path`.
///
/// # Safety
/// `series` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn phgas_timeseries_write_csv(
    series: *const PhgasTimeSeries,
    path: *const c_char,
) -> PhgasStatus {
    guard(|| {
        let s = handle(series, "series")?;
        let path = text(path, "path")?;
        let file = std::fs::File::create(path).map_err(|e| lib(e.into()))?;
        write_timeseries(&s.series, file).map_err(lib)?;
        Ok(())
    })
}
