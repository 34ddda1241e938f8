//! C ABI over `robinv-core`.
//!
//! Problems and solved curves are opaque heap handles released with their
//! `_free` function. Every call returns a [`RobinvStatus`]; on failure a
//! description is available from [`robinv_last_error`] on the same thread.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use nalgebra::{DMatrix, DVector};
use robinv_core::constraints::{ConsumptionBand, ExposureSet};
use robinv_core::detsolve::{solve_curves, SolutionCurves, TimeGrid};
use robinv_core::market::{AmbiguityProfile, MarketModel};
use robinv_core::strategy::{optimal_distortion, optimal_exposure};
use robinv_core::{Error, RobustProblem};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobinvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    SolverFailure = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobinvExposure {
    Full = 0,
    Orthant = 1,
    Box = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobinvCurve {
    Time = 0,
    Robust = 1,
    Neutral = 2,
    Ignorant = 3,
}

/// Market and preference inputs. `drift` has `assets` entries, `volatility`
/// is row-major `assets × factors`, `eta` has `factors` entries.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RobinvMarket {
    pub assets: usize,
    pub factors: usize,
    pub horizon: f64,
    pub rate: f64,
    pub discount: f64,
    pub drift: *const f64,
    pub volatility: *const f64,
    pub risk_aversion: f64,
    pub bequest_weight: f64,
    pub initial_wealth: f64,
    pub eta: *const f64,
}

/// Exposure set and consumption band. Box bounds (length `factors`) are read
/// only for `Box`; an infinite `consumption_ceiling` means no ceiling.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RobinvConstraints {
    pub exposure: RobinvExposure,
    pub box_lower: *const f64,
    pub box_upper: *const f64,
    pub consumption_floor: f64,
    pub consumption_ceiling: f64,
}

pub struct RobinvProblem(RobustProblem);

pub struct RobinvCurves(SolutionCurves);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_for(err: &Error) -> RobinvStatus {
    match err.exit_code() {
        2 => RobinvStatus::InvalidInput,
        _ => RobinvStatus::SolverFailure,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RobinvStatus, String)>) -> RobinvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RobinvStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RobinvStatus::Panic
        }
    }
}

fn fail(err: Error) -> (RobinvStatus, String) {
    (status_for(&err), err.to_string())
}

fn null(what: &str) -> (RobinvStatus, String) {
    (RobinvStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (RobinvStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn write_out(out: *mut f64, len: usize, values: &[f64]) -> Result<(), (RobinvStatus, String)> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < values.len() {
        return Err((
            RobinvStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", values.len()),
        ));
    }
    // SAFETY: caller guarantees `out` points to `len` writable doubles.
    unsafe { ptr::copy_nonoverlapping(values.as_ptr(), out, values.len()) };
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn robinv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds and validates a problem.
///
/// # Safety
/// `market` and `constraints` must point to valid structs whose array
/// pointers hold the documented number of doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn robinv_problem_new(
    market: *const RobinvMarket,
    constraints: *const RobinvConstraints,
    out: *mut *mut RobinvProblem,
) -> RobinvStatus {
    guard(|| {
        if market.is_null() || constraints.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let m = &*market;
        let c = &*constraints;
        let drift = read(m.drift, m.assets, "drift")?;
        let vol = read(m.volatility, m.assets * m.factors, "volatility")?;
        let eta = read(m.eta, m.factors, "eta")?;
        let model = MarketModel {
            horizon: m.horizon,
            rate: m.rate.into(),
            discount: m.discount.into(),
            drift: DVector::from_column_slice(drift),
            volatility: DMatrix::from_row_slice(m.assets, m.factors, vol),
            risk_aversion: m.risk_aversion,
            bequest_weight: m.bequest_weight,
            initial_wealth: m.initial_wealth,
        };
        let exposure = match c.exposure {
            RobinvExposure::Full => ExposureSet::FullSpace,
            RobinvExposure::Orthant => ExposureSet::NonnegativeOrthant,
            RobinvExposure::Box => ExposureSet::boxed(
                read(c.box_lower, m.factors, "box_lower")?.to_vec(),
                read(c.box_upper, m.factors, "box_upper")?.to_vec(),
            ),
        };
        let ceiling = (c.consumption_ceiling != f64::INFINITY).then_some(c.consumption_ceiling);
        let band = ConsumptionBand::new(c.consumption_floor, ceiling);
        let problem = RobustProblem::new(model, AmbiguityProfile::new(eta.to_vec()), exposure, band).map_err(fail)?;
        *out = Box::into_raw(Box::new(RobinvProblem(problem)));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`robinv_problem_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn robinv_problem_free(problem: *mut RobinvProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Writes the `factors` entries of the market price of risk.
///
/// # Safety
/// `problem` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn robinv_market_price_of_risk(
    problem: *const RobinvProblem,
    out: *mut f64,
    len: usize,
) -> RobinvStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        write_out(out, len, p.0.theta(0.0).as_slice())
    })
}

/// Solves the three value curves on `steps` uniform steps.
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn robinv_solve(
    problem: *const RobinvProblem,
    steps: usize,
    out: *mut *mut RobinvCurves,
) -> RobinvStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = TimeGrid::new(p.0.horizon(), steps).map_err(fail)?;
        let curves = solve_curves(&p.0, &grid).map_err(fail)?;
        *out = Box::into_raw(Box::new(RobinvCurves(curves)));
        Ok(())
    })
}

/// Number of grid nodes (`steps + 1`), or 0 for a null handle.
///
/// # Safety
/// `curves` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn robinv_curves_len(curves: *const RobinvCurves) -> usize {
    curves.as_ref().map_or(0, |c| c.0.grid.len())
}

/// Copies one curve (or the time nodes) into `out`.
///
/// # Safety
/// `curves` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn robinv_curves_copy(
    curves: *const RobinvCurves,
    which: RobinvCurve,
    out: *mut f64,
    len: usize,
) -> RobinvStatus {
    guard(|| {
        let c = &curves.as_ref().ok_or_else(|| null("curves"))?.0;
        match which {
            RobinvCurve::Time => write_out(out, len, &c.grid.nodes()),
            RobinvCurve::Robust => write_out(out, len, &c.y),
            RobinvCurve::Neutral => write_out(out, len, &c.y0),
            RobinvCurve::Ignorant => write_out(out, len, &c.ytilde),
        }
    })
}

/// # Safety
/// `curves` must come from [`robinv_solve`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn robinv_curves_free(curves: *mut RobinvCurves) {
    if !curves.is_null() {
        drop(Box::from_raw(curves));
    }
}

unsafe fn strategy_vector(
    problem: *const RobinvProblem,
    y: f64,
    out: *mut f64,
    len: usize,
    distortion: bool,
) -> RobinvStatus {
    guard(|| {
        let p = &problem.as_ref().ok_or_else(|| null("problem"))?.0;
        if !(y > 0.0) {
            return Err((
                RobinvStatus::InvalidInput,
                format!("value level must be positive, got {y}"),
            ));
        }
        let theta = p.theta(0.0);
        let z = DVector::zeros(theta.len());
        let v = if distortion {
            optimal_distortion(&theta, p.eta(), p.gamma(), p.scaled_set(), y, &z)
        } else {
            optimal_exposure(&theta, p.eta(), p.gamma(), p.scaled_set(), y, &z)
        };
        write_out(out, len, v.as_slice())
    })
}

/// Robust optimal exposure at value level `y` (deterministic case).
///
/// # Safety
/// `problem` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn robinv_optimal_exposure(
    problem: *const RobinvProblem,
    y: f64,
    out: *mut f64,
    len: usize,
) -> RobinvStatus {
    strategy_vector(problem, y, out, len, false)
}

/// Worst-case distortion at value level `y` (deterministic case).
///
/// # Safety
/// `problem` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn robinv_optimal_distortion(
    problem: *const RobinvProblem,
    y: f64,
    out: *mut f64,
    len: usize,
) -> RobinvStatus {
    strategy_vector(problem, y, out, len, true)
}
