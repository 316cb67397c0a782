//! C ABI over the `unistoq` library.
//!
//! Every fallible function returns an [`UnistoqStatus`]. On failure a message
//! is stored per thread and can be fetched with [`unistoq_last_error`].
//! Handles are opaque; free them with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use unistoq::cli::{LoadError, SystemDocument};
use unistoq::dilation::{self, DilatedSystem, MARGINALIZATION_TOL};
use unistoq::generators;
use unistoq::{evolve_probabilities, Error, StochasticSystem, TimeGrid};

/// Tolerance applied to the unitarity and double-stochasticity defects of a dilation.
pub const UNISTOQ_DILATION_TOL: f64 = 1e-10;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnistoqStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    Invalid = 3,
    UnknownTime = 4,
    TooLarge = 5,
    Tolerance = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

/// A validated stochastic system.
pub struct UnistoqSystem {
    inner: StochasticSystem,
}

/// A unitary dilation together with its defects.
pub struct UnistoqDilated {
    inner: DilatedSystem,
    unitarity_defect: f64,
    doubly_stochastic_defect: f64,
    marginalization_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("no interior nul")));
}

fn fail(status: UnistoqStatus, msg: impl Into<String>) -> UnistoqStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> UnistoqStatus {
    match e {
        Error::UnknownTime(_) => UnistoqStatus::UnknownTime,
        Error::TooLarge { .. } => UnistoqStatus::TooLarge,
        Error::NotIsometric(_) | Error::CompletionFailed { .. } => UnistoqStatus::Tolerance,
        _ => UnistoqStatus::Invalid,
    }
}

fn from_error(e: Error) -> UnistoqStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, turning panics into `Internal`.
fn guard(f: impl FnOnce() -> UnistoqStatus) -> UnistoqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(UnistoqStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(UnistoqStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Returns the most recent error message on this thread, or NULL. The
/// caller owns the string and frees it with `unistoq_string_free`.
#[no_mangle]
pub extern "C" fn unistoq_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn unistoq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Static, nul-terminated version string.
#[no_mangle]
pub extern "C" fn unistoq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a JSON system document.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unistoq_system_from_json(json: *const c_char, out: *mut *mut UnistoqSystem) -> UnistoqStatus {
    non_null!(json, out);
    guard(|| {
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => return fail(UnistoqStatus::Parse, format!("input is not UTF-8: {e}")),
        };
        let loaded = SystemDocument::parse(text).and_then(|d| d.to_system());
        match loaded {
            Ok(l) => {
                *out = Box::into_raw(Box::new(UnistoqSystem { inner: l.system }));
                UnistoqStatus::Ok
            }
            Err(LoadError::Parse(msg)) => fail(UnistoqStatus::Parse, msg),
            Err(LoadError::Invalid(lines)) => fail(UnistoqStatus::Invalid, lines.join("\n")),
        }
    })
}

/// Seeded random system on the given time grid (which must contain 0).
///
/// # Safety
/// `times` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unistoq_system_random(
    n: usize,
    times: *const f64,
    len: usize,
    seed: u64,
    out: *mut *mut UnistoqSystem,
) -> UnistoqStatus {
    non_null!(times, out);
    guard(|| {
        let times = std::slice::from_raw_parts(times, len).to_vec();
        let sys = TimeGrid::new(times).and_then(|g| generators::random_stochastic_system(n, &g, seed));
        match sys {
            Ok(s) => {
                *out = Box::into_raw(Box::new(UnistoqSystem { inner: s }));
                UnistoqStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `sys` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn unistoq_system_free(sys: *mut UnistoqSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unistoq_system_n(sys: *const UnistoqSystem, out: *mut usize) -> UnistoqStatus {
    non_null!(sys, out);
    *out = (*sys).inner.n();
    UnistoqStatus::Ok
}

/// Number of grid times.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unistoq_system_time_count(sys: *const UnistoqSystem, out: *mut usize) -> UnistoqStatus {
    non_null!(sys, out);
    *out = (*sys).inner.grid().len();
    UnistoqStatus::Ok
}

/// Copies the grid times into `out`, which holds `len` doubles.
///
/// # Safety
/// `sys` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn unistoq_system_times(sys: *const UnistoqSystem, out: *mut f64, len: usize) -> UnistoqStatus {
    non_null!(sys, out);
    copy_into((*sys).inner.grid().times(), out, len)
}

unsafe fn copy_into(src: &[f64], out: *mut f64, len: usize) -> UnistoqStatus {
    if len < src.len() {
        return fail(
            UnistoqStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        );
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    UnistoqStatus::Ok
}

/// Re-runs validation. Returns `Invalid` with one violation per message
/// line when any condition fails.
///
/// # Safety
/// `sys` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn unistoq_system_validate(sys: *const UnistoqSystem) -> UnistoqStatus {
    non_null!(sys);
    let report = unistoq::validate_system(&(*sys).inner);
    if report.is_empty() {
        UnistoqStatus::Ok
    } else {
        fail(UnistoqStatus::Invalid, report.to_string())
    }
}

/// Writes p(t) = Γ(t) p(0) into `out`, which holds `len` doubles.
///
/// # Safety
/// `sys` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn unistoq_system_evolve(
    sys: *const UnistoqSystem,
    t: f64,
    out: *mut f64,
    len: usize,
) -> UnistoqStatus {
    non_null!(sys, out);
    guard(|| match evolve_probabilities(&(*sys).inner, t) {
        Ok(p) => copy_into(p.as_slice(), out, len),
        Err(e) => from_error(e),
    })
}

/// Builds the unitary dilation. Returns `Tolerance` (and no handle) when a
/// defect exceeds 1e-10, `TooLarge` above the dilation size cap.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unistoq_system_dilate(sys: *const UnistoqSystem, out: *mut *mut UnistoqDilated) -> UnistoqStatus {
    non_null!(sys, out);
    guard(|| {
        let sys = &(*sys).inner;
        let d = match dilation::assemble_dilation(sys, None) {
            Ok(d) => d,
            Err(e) => return from_error(e),
        };
        let handle = UnistoqDilated {
            unitarity_defect: d.max_unitarity_defect(),
            doubly_stochastic_defect: d.max_doubly_stochastic_defect(),
            marginalization_residual: match dilation::verify_marginalization(&d, sys) {
                Ok(r) => r,
                Err(e) => return from_error(e),
            },
            inner: d,
        };
        if !(handle.unitarity_defect <= UNISTOQ_DILATION_TOL
            && handle.doubly_stochastic_defect <= UNISTOQ_DILATION_TOL
            && handle.marginalization_residual <= MARGINALIZATION_TOL)
        {
            return fail(
                UnistoqStatus::Tolerance,
                format!(
                    "dilation defects: unitarity {:e}, double stochasticity {:e}, marginalization {:e}",
                    handle.unitarity_defect, handle.doubly_stochastic_defect, handle.marginalization_residual
                ),
            );
        }
        *out = Box::into_raw(Box::new(handle));
        UnistoqStatus::Ok
    })
}

/// # Safety
/// `d` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn unistoq_dilated_free(d: *mut UnistoqDilated) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Dimension N³ of the dilated space.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unistoq_dilated_total_dim(d: *const UnistoqDilated, out: *mut usize) -> UnistoqStatus {
    non_null!(d, out);
    *out = (*d).inner.total_dim();
    UnistoqStatus::Ok
}

/// Largest |Γ_ij(t) − Σ_{i′} Γ̃_{(i,i′),(j,ψ(j))}(t)| over the grid.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unistoq_dilated_marginalization_residual(d: *const UnistoqDilated, out: *mut f64) -> UnistoqStatus {
    non_null!(d, out);
    *out = (*d).marginalization_residual;
    UnistoqStatus::Ok
}

/// Largest unitarity defect of Ũ(t) over the grid.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unistoq_dilated_unitarity_defect(d: *const UnistoqDilated, out: *mut f64) -> UnistoqStatus {
    non_null!(d, out);
    *out = (*d).unitarity_defect;
    UnistoqStatus::Ok
}

/// Largest double-stochasticity defect of Γ̃(t) over the grid.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unistoq_dilated_doubly_stochastic_defect(d: *const UnistoqDilated, out: *mut f64) -> UnistoqStatus {
    non_null!(d, out);
    *out = (*d).doubly_stochastic_defect;
    UnistoqStatus::Ok
}

/// Copies Γ̃(t) row-major into `out`, which holds `len` ≥ N⁶ doubles.
///
/// # Safety
/// `d` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn unistoq_dilated_transition(
    d: *const UnistoqDilated,
    t: f64,
    out: *mut f64,
    len: usize,
) -> UnistoqStatus {
    non_null!(d, out);
    guard(|| match (*d).inner.transition(t) {
        Ok(m) => {
            let row_major: Vec<f64> = m.transpose().as_slice().to_vec();
            copy_into(&row_major, out, len)
        }
        Err(e) => from_error(e),
    })
}
