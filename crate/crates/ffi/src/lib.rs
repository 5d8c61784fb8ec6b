//! C ABI over the core crate.
//!
//! Fields are opaque heap handles created by `qg_field_*` constructors and
//! released with [`qg_field_free`]. Every fallible call returns a
//! [`QgStatus`]; on failure [`qg_last_error`] returns a message for the
//! calling thread. Panics are caught at the boundary and reported as
//! [`QgStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use qglab::cli::{dispatch, ParamSet, RunRequest, Subcommand};
use qglab::evolution::{self, DtPolicy, SimConfig};
use qglab::littlewood_paley::DyadicProfile;
use qglab::operators::PhysParams;
use qglab::picard::{parse_rational, IndexSet};
use qglab::propagator::apply_propagator;
use qglab::spectral::{Grid, RealField, SpectralField};
use qglab::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QgStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Rejected input: bad grid, parameter, index window or configuration.
    InvalidArgument = 2,
    /// The computation flagged blow-up; outputs hold the last valid state.
    BlowUp = 3,
    /// File system or format failure.
    Io = 4,
    /// Output buffer too small; the required length is reported.
    BufferTooSmall = 5,
    Panic = 6,
    Internal = 7,
}

/// Opaque spectral field.
pub struct QgField {
    inner: SpectralField,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QgStatus {
    match e {
        Error::BlowUp { .. } => QgStatus::BlowUp,
        Error::Io(_) | Error::Csv(_) | Error::Format(_) => QgStatus::Io,
        e if e.is_validation() => QgStatus::InvalidArgument,
        _ => QgStatus::Internal,
    }
}

struct Fail(QgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QgStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<QgStatus, Fail>) -> QgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(s)) => {
            if s == QgStatus::Ok {
                set_error("");
            }
            s
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            QgStatus::Panic
        }
    }
}

unsafe fn field_ref<'a>(f: *const QgField) -> Result<&'a SpectralField, Fail> {
    f.as_ref().map(|f| &f.inner).ok_or_else(|| null("field"))
}

unsafe fn put_field(out: *mut *mut QgField, inner: SpectralField) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(QgField { inner }));
    Ok(())
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = v;
    Ok(())
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Fail(QgStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn qg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a field from `n * n` real samples (row-major, `y` slowest) on a box of side `length`.
///
/// # Safety
/// `samples` must point to `n * n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qg_field_from_samples(n: usize, length: f64, samples: *const f64, out: *mut *mut QgField) -> QgStatus {
    guard(|| {
        if samples.is_null() {
            return Err(null("samples"));
        }
        let grid = Grid::new(n, length)?;
        let data = std::slice::from_raw_parts(samples, grid.len()).to_vec();
        put_field(out, RealField::new(&grid, data)?.forward())?;
        Ok(QgStatus::Ok)
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `field` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qg_field_free(field: *mut QgField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Grid size and box side of a field.
///
/// # Safety
/// `field` must be a live handle; `n` and `length` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qg_field_shape(field: *const QgField, n: *mut usize, length: *mut f64) -> QgStatus {
    guard(|| {
        let f = field_ref(field)?;
        put(n, f.grid().n())?;
        put(length, f.grid().length())?;
        Ok(QgStatus::Ok)
    })
}

/// Copies the real samples into `out`, which holds `cap` doubles.
///
/// # Safety
/// `field` must be a live handle; `out` must hold `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qg_field_samples(field: *const QgField, out: *mut f64, cap: usize) -> QgStatus {
    guard(|| {
        let f = field_ref(field)?;
        let len = f.grid().len();
        if cap < len {
            return Err(Fail(QgStatus::BufferTooSmall, format!("need {len} doubles, got {cap}")));
        }
        if out.is_null() {
            return Err(null("output buffer"));
        }
        let r = f.inverse()?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(r.samples());
        Ok(QgStatus::Ok)
    })
}

/// Homogeneous Sobolev norm of order `s`.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qg_field_sobolev_norm(field: *const QgField, s: f64, out: *mut f64) -> QgStatus {
    guard(|| {
        put(out, field_ref(field)?.sobolev_norm(s))?;
        Ok(QgStatus::Ok)
    })
}

/// `L^p` norms of the dyadic blocks, lowest block first. `count` receives the
/// number of blocks (also on [`QgStatus::BufferTooSmall`]) and `j_lo` the
/// index of the first.
///
/// # Safety
/// `field` must be a live handle; `out` must hold `cap` doubles; `count` and `j_lo` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qg_field_block_norms(
    field: *const QgField,
    p: f64,
    out: *mut f64,
    cap: usize,
    count: *mut usize,
    j_lo: *mut i32,
) -> QgStatus {
    guard(|| {
        let f = field_ref(field)?;
        let profile = DyadicProfile::new(f.grid());
        put(count, profile.block_count())?;
        put(j_lo, profile.j_lo())?;
        if cap < profile.block_count() {
            return Err(Fail(QgStatus::BufferTooSmall, format!("need {} doubles, got {cap}", profile.block_count())));
        }
        if out.is_null() {
            return Err(null("output buffer"));
        }
        let norms = profile.block_lp_norms(f, p)?;
        std::slice::from_raw_parts_mut(out, norms.len()).copy_from_slice(&norms);
        Ok(QgStatus::Ok)
    })
}

/// Applies the exact linear solution operator for time `t`.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qg_apply_propagator(
    field: *const QgField,
    alpha: f64,
    kappa: f64,
    dispersion: f64,
    t: f64,
    out: *mut *mut QgField,
) -> QgStatus {
    guard(|| {
        let params = PhysParams::new(alpha, kappa, dispersion)?;
        put_field(out, apply_propagator(field_ref(field)?, &params, t)?)?;
        Ok(QgStatus::Ok)
    })
}

/// Integrates the full equation to `t_end` with fixed step `dt`. On blow-up the
/// last valid state is returned together with [`QgStatus::BlowUp`].
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qg_simulate(
    field: *const QgField,
    alpha: f64,
    kappa: f64,
    dispersion: f64,
    dt: f64,
    t_end: f64,
    out: *mut *mut QgField,
) -> QgStatus {
    guard(|| {
        let f = field_ref(field)?;
        let params = PhysParams::new(alpha, kappa, dispersion)?;
        let cfg = SimConfig::new(params, f.grid().clone(), DtPolicy::Fixed(dt), t_end)?;
        let traj = evolution::run(&f.dealias(), &cfg)?;
        let last = traj.final_state().cloned().unwrap_or_else(|| f.dealias());
        put_field(out, last)?;
        match traj.blowup {
            Some(b) => Err(Fail(QgStatus::BlowUp, format!("blow-up at t = {}: {}", b.t, b.reason))),
            None => Ok(QgStatus::Ok),
        }
    })
}

/// Validates `(alpha, p, s)` given as exact decimals or fractions (`"21/20"`) and
/// writes the time exponent `r` as a NUL-terminated fraction into `buf`.
///
/// # Safety
/// The three strings must be NUL-terminated; `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn qg_time_exponent(
    alpha: *const c_char,
    p: *const c_char,
    s: *const c_char,
    buf: *mut c_char,
    cap: usize,
) -> QgStatus {
    guard(|| {
        let q = |ptr, what| -> Result<_, Fail> { Ok(parse_rational(str_arg(ptr, what)?)?) };
        let idx = IndexSet::subcritical(&q(alpha, "alpha")?, &q(p, "p")?, &q(s, "s")?)?;
        let text = idx.r.to_string();
        if buf.is_null() {
            return Err(null("output buffer"));
        }
        if cap < text.len() + 1 {
            return Err(Fail(QgStatus::BufferTooSmall, format!("need {} bytes", text.len() + 1)));
        }
        ptr::copy_nonoverlapping(text.as_ptr().cast::<c_char>(), buf, text.len());
        *buf.add(text.len()) = 0;
        Ok(QgStatus::Ok)
    })
}

/// Runs a CLI subcommand (`"picard"`, `"simulate"`, ...) with a configuration
/// file, writing artifacts into `out_dir`.
///
/// # Safety
/// All strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn qg_run(subcommand: *const c_char, config_path: *const c_char, out_dir: *const c_char, seed: u64) -> QgStatus {
    guard(|| {
        let command: Subcommand = str_arg(subcommand, "subcommand")?.parse()?;
        let params = ParamSet::from_config(qglab::cli::Config::parse_str(&std::fs::read_to_string(str_arg(config_path, "config path")?).map_err(Error::from)?)?)?;
        let req = RunRequest { command, params, seed, out: PathBuf::from(str_arg(out_dir, "output directory")?) };
        let outcome = dispatch(&req)?;
        match outcome.blowup {
            Some(why) => Err(Fail(QgStatus::BlowUp, why)),
            None => Ok(QgStatus::Ok),
        }
    })
}
