//! C ABI for robagg.
//!
//! Every fallible function returns a [`RobaggStatus`]; on failure the message
//! is available from [`robagg_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use robagg::closed_form::{k_ignorance_dictator, l1_optimal, l2_adversarial};
use robagg::error::Error;
use robagg::oracle::brute_force_max_regret;
use robagg::solver::solve_l2_nonadversarial;
use robagg::{Aggregator, LossKind, Params};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RobaggStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Resource = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RobaggLoss {
    L1 = 0,
    L2 = 1,
}

impl From<RobaggLoss> for LossKind {
    fn from(l: RobaggLoss) -> Self {
        match l {
            RobaggLoss::L1 => LossKind::L1,
            RobaggLoss::L2 => LossKind::L2,
        }
    }
}

/// Instance parameters `(n, k, mu, a, b)`.
pub struct RobaggParams(Params);

/// Forecast table indexed by the number of H reports, `0..=n`.
pub struct RobaggAggregator(Aggregator);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RobaggStatus {
    match e {
        Error::Usage(_) => RobaggStatus::InvalidArgument,
        Error::Domain(_) | Error::Unsupported(_) => RobaggStatus::Domain,
        Error::Resource { .. } => RobaggStatus::Resource,
        Error::Io(_) | Error::Json(_) | Error::Parse { .. } | Error::Schema(_) => RobaggStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RobaggStatus, String)>) -> RobaggStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RobaggStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RobaggStatus::Panic
        }
    }
}

fn lib<T>(r: robagg::error::Result<T>) -> Result<T, (RobaggStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (RobaggStatus, String) {
    (RobaggStatus::NullPointer, "null pointer argument".into())
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, (RobaggStatus, String)> {
    p.as_ref().ok_or_else(null)
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), (RobaggStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn robagg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn robagg_params_new(
    n: usize,
    k: usize,
    mu: f64,
    a: f64,
    b: f64,
    out: *mut *mut RobaggParams,
) -> RobaggStatus {
    guard(|| {
        let p = Params::new(n, k, mu, a, b).map_err(|e| (RobaggStatus::InvalidArgument, e.to_string()))?;
        write(out, boxed(RobaggParams(p)))
    })
}

/// # Safety
/// `p` must come from `robagg_params_new` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn robagg_params_free(p: *mut RobaggParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Truncated mean for `n` experts ignoring `k` reports at each end.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn robagg_k_ignorance_dictator(
    n: usize,
    k: usize,
    out: *mut *mut RobaggAggregator,
) -> RobaggStatus {
    guard(|| {
        let f = lib(k_ignorance_dictator(n, k))?;
        write(out, boxed(RobaggAggregator(f)))
    })
}

/// L1-optimal aggregator and its regret. Fails with `Domain` when the closed
/// form does not apply.
///
/// # Safety
/// `p` must be a live handle; `out` and `regret` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn robagg_l1_optimal(
    p: *const RobaggParams,
    out: *mut *mut RobaggAggregator,
    regret: *mut f64,
) -> RobaggStatus {
    guard(|| {
        let r = lib(l1_optimal(&deref(p)?.0))?;
        let value = r.regret.ok_or_else(|| {
            (RobaggStatus::Domain, format!("adversary ratio above {}", r.threshold))
        })?;
        write(regret, value)?;
        write(out, boxed(RobaggAggregator(r.aggregator)))
    })
}

/// L2-optimal aggregator against adversaries (`k >= 1`) and its regret.
///
/// # Safety
/// `p` must be a live handle; `out` and `regret` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn robagg_l2_adversarial(
    p: *const RobaggParams,
    out: *mut *mut RobaggAggregator,
    regret: *mut f64,
) -> RobaggStatus {
    guard(|| {
        let r = lib(l2_adversarial(&deref(p)?.0))?;
        let value = r.regret.ok_or_else(|| {
            (RobaggStatus::Domain, format!("no closed form, adversary ratio limit {}", r.threshold))
        })?;
        write(regret, value)?;
        write(out, boxed(RobaggAggregator(r.aggregator)))
    })
}

/// Epsilon-optimal L2 aggregator without adversaries (`k = 0`). Writes the
/// certified regret and optimality gap.
///
/// # Safety
/// `p` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn robagg_solve_l2(
    p: *const RobaggParams,
    epsilon: f64,
    out: *mut *mut RobaggAggregator,
    regret: *mut f64,
    gap: *mut f64,
) -> RobaggStatus {
    guard(|| {
        let r = lib(solve_l2_nonadversarial(&deref(p)?.0, epsilon))?;
        write(regret, r.regret)?;
        write(gap, r.epsilon)?;
        write(out, boxed(RobaggAggregator(r.aggregator)))
    })
}

/// Worst-case regret of `f` over all two-point structures and pure strategies.
///
/// # Safety
/// `f` and `p` must be live handles; `regret` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn robagg_oracle_max_regret(
    f: *const RobaggAggregator,
    p: *const RobaggParams,
    loss: RobaggLoss,
    regret: *mut f64,
) -> RobaggStatus {
    guard(|| {
        let (r, _) = lib(brute_force_max_regret(&deref(f)?.0, &deref(p)?.0, loss.into()))?;
        write(regret, r)
    })
}

/// Aggregator from `len` forecasts in `[0, 1]`, one per H count.
///
/// # Safety
/// `values` must point to `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn robagg_aggregator_from_values(
    values: *const f64,
    len: usize,
    out: *mut *mut RobaggAggregator,
) -> RobaggStatus {
    guard(|| {
        if values.is_null() {
            return Err(null());
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        let f = Aggregator::from_values(v).map_err(|e| (RobaggStatus::InvalidArgument, e.to_string()))?;
        write(out, boxed(RobaggAggregator(f)))
    })
}

/// Number of forecasts, `n + 1`. Zero for NULL.
///
/// # Safety
/// `f` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn robagg_aggregator_len(f: *const RobaggAggregator) -> usize {
    f.as_ref().map_or(0, |f| f.0.values().len())
}

/// Copies the forecasts into `buf`, which must hold at least
/// `robagg_aggregator_len(f)` doubles.
///
/// # Safety
/// `f` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn robagg_aggregator_values(
    f: *const RobaggAggregator,
    buf: *mut f64,
    len: usize,
) -> RobaggStatus {
    guard(|| {
        let values = deref(f)?.0.values();
        if buf.is_null() {
            return Err(null());
        }
        if len < values.len() {
            return Err((
                RobaggStatus::InvalidArgument,
                format!("buffer holds {len}, need {}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// # Safety
/// `f` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn robagg_aggregator_free(f: *mut RobaggAggregator) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}
