//! C interface to the heatgrid simulator.
//!
//! Objects are opaque handles created by `hg_*_load`/`hg_run` and released
//! with the matching `*_free`. Every fallible call returns an [`HgStatus`];
//! on failure [`hg_last_error_message`] describes the error on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use heatgrid::center::{hp_cop, Variant};
use heatgrid::cli::kpi_inputs;
use heatgrid::kpi::{annuity_factor, emissions, EnergyLedger};
use heatgrid::loads::annual_heat_demand;
use heatgrid::scenario::{Month, Scenario};
use heatgrid::sim::Model;
use heatgrid::Error;

/// Result codes. Values 2 to 5 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HgStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or an out-of-range enum value.
    InvalidArgument = 1,
    /// Scenario, file or parameter error.
    Schema = 2,
    Validation = 3,
    NonConvergence = 4,
    NonFinite = 5,
    /// A panic was caught at the boundary.
    Internal = 6,
}

/// A loaded, validated scenario.
pub struct HgScenario {
    scenario: Scenario,
}

/// One simulated month.
pub struct HgRun {
    ledger: EnergyLedger,
    emissions_t: f64,
    steps: usize,
}

/// Energy totals of a run [kWh].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HgLedger {
    pub fuel_ng: f64,
    pub fuel_bm: f64,
    pub fuel_h2: f64,
    pub heat_chp: f64,
    pub heat_boiler: f64,
    pub heat_hp: f64,
    pub heat_hp_covered: f64,
    pub heat_delivered: f64,
    pub network_loss: f64,
    pub elec_gen: f64,
    pub elec_cons: f64,
    pub elec_sold: f64,
    pub elec_bought: f64,
}

impl From<&EnergyLedger> for HgLedger {
    fn from(l: &EnergyLedger) -> Self {
        Self {
            fuel_ng: l.fuel_ng,
            fuel_bm: l.fuel_bm,
            fuel_h2: l.fuel_h2,
            heat_chp: l.heat_chp,
            heat_boiler: l.heat_boiler,
            heat_hp: l.heat_hp,
            heat_hp_covered: l.heat_hp_covered,
            heat_delivered: l.heat_delivered,
            network_loss: l.network_loss,
            elec_gen: l.elec_gen,
            elec_cons: l.elec_cons,
            elec_sold: l.elec_sold,
            elec_bought: l.elec_bought,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul removed")));
}

fn status_of(err: &Error) -> HgStatus {
    match err.exit_code() {
        3 => HgStatus::Validation,
        4 => HgStatus::NonConvergence,
        5 => HgStatus::NonFinite,
        _ => HgStatus::Schema,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (HgStatus, String)>) -> HgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HgStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HgStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (HgStatus, String) {
    (status_of(&e), e.to_string())
}

fn arg_err(msg: &str) -> (HgStatus, String) {
    (HgStatus::InvalidArgument, msg.to_string())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn hg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_scenario_load(path: *const c_char, out: *mut *mut HgScenario) -> HgStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return Err(arg_err("null argument"));
        }
        let path = unsafe { CStr::from_ptr(path) }.to_str().map_err(|_| arg_err("path is not UTF-8"))?;
        let scenario = Scenario::load(Path::new(path)).map_err(lib_err)?;
        unsafe { *out = Box::into_raw(Box::new(HgScenario { scenario })) };
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from [`hg_scenario_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hg_scenario_free(scenario: *mut HgScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Number of building records.
///
/// # Safety
/// `scenario` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hg_scenario_building_count(scenario: *const HgScenario) -> usize {
    unsafe { scenario.as_ref() }.map_or(0, |s| s.scenario.buildings.records.len())
}

/// Limits runs to the first `days` days of the month; 0 restores full months.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hg_scenario_set_days(scenario: *mut HgScenario, days: u32) -> HgStatus {
    guard(|| {
        let s = unsafe { scenario.as_mut() }.ok_or_else(|| arg_err("null scenario"))?;
        s.scenario.run.days = (days > 0).then_some(days);
        Ok(())
    })
}

/// Simulates `variant` (1 to 4) over `month` (1 to 12).
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_run(scenario: *const HgScenario, variant: u32, month: u32, out: *mut *mut HgRun) -> HgStatus {
    guard(|| {
        let s = unsafe { scenario.as_ref() }.ok_or_else(|| arg_err("null scenario"))?;
        if out.is_null() {
            return Err(arg_err("null output"));
        }
        let variant = *Variant::ALL
            .get((variant as usize).wrapping_sub(1))
            .ok_or_else(|| arg_err("variant must be 1 to 4"))?;
        let month = *Month::ALL
            .get((month as usize).wrapping_sub(1))
            .ok_or_else(|| arg_err("month must be 1 to 12"))?;
        let (factors, _) = kpi_inputs(&s.scenario).map_err(lib_err)?;
        let model = Model::prepare(&s.scenario).map_err(lib_err)?;
        let run = model.run_month(variant, month).map_err(lib_err)?;
        let handle = HgRun {
            emissions_t: emissions(&run.ledger, &factors),
            ledger: run.ledger,
            steps: run.stats.steps,
        };
        unsafe { *out = Box::into_raw(Box::new(handle)) };
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`hg_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hg_run_free(run: *mut HgRun) {
    if !run.is_null() {
        drop(unsafe { Box::from_raw(run) });
    }
}

/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_run_ledger(run: *const HgRun, out: *mut HgLedger) -> HgStatus {
    guard(|| {
        let r = unsafe { run.as_ref() }.ok_or_else(|| arg_err("null run"))?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| arg_err("null output"))?;
        *out = HgLedger::from(&r.ledger);
        Ok(())
    })
}

/// CO2 equivalent of the run [t] with the scenario's emission factors.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_run_emissions(run: *const HgRun, out: *mut f64) -> HgStatus {
    guard(|| {
        let r = unsafe { run.as_ref() }.ok_or_else(|| arg_err("null run"))?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| arg_err("null output"))?;
        *out = r.emissions_t;
        Ok(())
    })
}

/// Macro steps taken, spin-up included.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hg_run_steps(run: *const HgRun) -> usize {
    unsafe { run.as_ref() }.map_or(0, |r| r.steps)
}

/// Annual space-heating demand [kWh/a] from design power density [W/m2],
/// area [m2], simultaneity factor and full-load hours.
#[no_mangle]
pub extern "C" fn hg_annual_heat_demand(q_h: f64, area: f64, g: f64, full_load_hours: f64) -> f64 {
    annual_heat_demand(q_h, area, g, full_load_hours)
}

/// Capital recovery factor for discount factor `q` over `lifetime` years;
/// NaN outside q > 1, lifetime >= 1.
#[no_mangle]
pub extern "C" fn hg_annuity_factor(q: f64, lifetime: u32) -> f64 {
    if q > 1.0 && lifetime >= 1 {
        annuity_factor(q, lifetime)
    } else {
        f64::NAN
    }
}

/// Heat-pump COP for source and sink temperatures [degC].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_hp_cop(t_source: f64, t_sink: f64, carnot_eta: f64, out: *mut f64) -> HgStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| arg_err("null output"))?;
        *out = hp_cop(t_source, t_sink, carnot_eta).map_err(lib_err)?;
        Ok(())
    })
}
