//! C ABI for `etl-core`.
//!
//! Every function returns an [`EtlStatus`]; on failure the message is kept per thread and
//! read back with [`etl_last_error`]. Strings handed out by the library are released with
//! [`etl_string_free`], contexts with [`etl_context_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use etl_core::belavin::{build_r, verify_ybe};
use etl_core::config::Config;
use etl_core::report::to_json;
use etl_core::suites::run_suite_at;
use etl_core::theta::theta;
use etl_core::{Context, Error, C64};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Singular = 3,
    UnknownSuite = 4,
    Config = 5,
    Utf8 = 6,
    Internal = 7,
}

/// Opaque parameter set.
pub struct EtlContext {
    inner: Context,
    seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> EtlStatus {
    match err {
        Error::InvalidParameter(_) | Error::DerivativeDepth { .. } => EtlStatus::InvalidParameter,
        Error::Singular(_) | Error::SamplingExhausted(_) => EtlStatus::Singular,
        Error::UnknownSuite(_) => EtlStatus::UnknownSuite,
        Error::Config(_) => EtlStatus::Config,
    }
}

fn guard(body: impl FnOnce() -> Result<(), EtlStatus>) -> EtlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EtlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            EtlStatus::Internal
        }
    }
}

fn fail(err: Error) -> EtlStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> EtlStatus {
    set_error(format!("{what} is null"));
    EtlStatus::NullPointer
}

/// Message of the last failure on this thread, or null. Owned by the library and valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn etl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn etl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a context for rank `n` with modulus `tau`, step `hbar` and coupling `c`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn etl_context_new(
    n: usize,
    tau_re: f64,
    tau_im: f64,
    hbar_re: f64,
    hbar_im: f64,
    c_re: f64,
    c_im: f64,
    out: *mut *mut EtlContext,
) -> EtlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ctx = Context::with_params(n, C64::new(tau_re, tau_im), C64::new(hbar_re, hbar_im), C64::new(c_re, c_im))
            .map_err(fail)?;
        *out = Box::into_raw(Box::new(EtlContext { inner: ctx, seed: Config::default().seed }));
        Ok(())
    })
}

/// Builds a context with the library defaults for rank `n`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn etl_context_default(n: usize, out: *mut *mut EtlContext) -> EtlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ctx = Context::new(n).map_err(fail)?;
        *out = Box::into_raw(Box::new(EtlContext { inner: ctx, seed: Config::default().seed }));
        Ok(())
    })
}

/// Sets the series window and the seed used by [`etl_run_suite`].
///
/// # Safety
/// `ctx` must come from `etl_context_new` or `etl_context_default` and not be freed.
#[no_mangle]
pub unsafe extern "C" fn etl_context_set_run(ctx: *mut EtlContext, trunc: usize, seed: u64) -> EtlStatus {
    guard(|| {
        let c = ctx.as_mut().ok_or_else(|| null("ctx"))?;
        let next = c.inner.with_trunc(trunc);
        next.validate().map_err(fail)?;
        c.inner = next;
        c.seed = seed;
        Ok(())
    })
}

/// Releases a context. Null is ignored.
///
/// # Safety
/// `ctx` must be null or a pointer from `etl_context_new`/`etl_context_default` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn etl_context_free(ctx: *mut EtlContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Rank of the context, or 0 for null.
///
/// # Safety
/// `ctx` must be null or a live context.
#[no_mangle]
pub unsafe extern "C" fn etl_context_rank(ctx: *const EtlContext) -> usize {
    ctx.as_ref().map_or(0, |c| c.inner.n)
}

/// Odd Jacobi theta function at `u`.
///
/// # Safety
/// `ctx` must be a live context; `out_re` and `out_im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn etl_theta(
    ctx: *const EtlContext,
    u_re: f64,
    u_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> EtlStatus {
    guard(|| {
        let c = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        if out_re.is_null() || out_im.is_null() {
            return Err(null("out"));
        }
        let v = theta(C64::new(u_re, u_im), &c.inner);
        *out_re = v.re;
        *out_im = v.im;
        Ok(())
    })
}

/// Entries `R(u)^{ij}_{i'j'}` at index `((i*n + j)*n + i')*n + j'`, as interleaved
/// real and imaginary parts. `out` must hold `len >= 2*n^4` doubles.
///
/// # Safety
/// `ctx` must be a live context; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn etl_r_matrix(
    ctx: *const EtlContext,
    u_re: f64,
    u_im: f64,
    out: *mut f64,
    len: usize,
) -> EtlStatus {
    guard(|| {
        let c = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = c.inner.n;
        let need = 2 * n.pow(4);
        if len < need {
            set_error(format!("buffer holds {len} doubles, {need} needed"));
            return Err(EtlStatus::InvalidParameter);
        }
        let r = build_r(C64::new(u_re, u_im), &c.inner).map_err(fail)?;
        let buf = std::slice::from_raw_parts_mut(out, need);
        let mut k = 0;
        for i in 0..n {
            for j in 0..n {
                for ip in 0..n {
                    for jp in 0..n {
                        let z = r.get(i, j, ip, jp);
                        buf[k] = z.re;
                        buf[k + 1] = z.im;
                        k += 2;
                    }
                }
            }
        }
        Ok(())
    })
}

/// Relative Yang-Baxter residual at the spectral triple `(u, v, w)`.
///
/// # Safety
/// `ctx` must be a live context; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn etl_ybe_residual(
    ctx: *const EtlContext,
    u_re: f64,
    u_im: f64,
    v_re: f64,
    v_im: f64,
    w_re: f64,
    w_im: f64,
    out: *mut f64,
) -> EtlStatus {
    guard(|| {
        let c = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = verify_ybe(C64::new(u_re, u_im), C64::new(v_re, v_im), C64::new(w_re, w_im), &c.inner).map_err(fail)?;
        Ok(())
    })
}

/// Runs one verification suite at the context's rank and writes its JSON report to
/// `*out_json`. `*out_pass` is set to 1 when every case passes. Release the string with
/// [`etl_string_free`].
///
/// # Safety
/// `ctx` must be a live context, `suite` a NUL-terminated string, `out_json` and
/// `out_pass` writable.
#[no_mangle]
pub unsafe extern "C" fn etl_run_suite(
    ctx: *const EtlContext,
    suite: *const c_char,
    out_json: *mut *mut c_char,
    out_pass: *mut i32,
) -> EtlStatus {
    guard(|| {
        let c = ctx.as_ref().ok_or_else(|| null("ctx"))?;
        if suite.is_null() {
            return Err(null("suite"));
        }
        if out_json.is_null() || out_pass.is_null() {
            return Err(null("out"));
        }
        let name = CStr::from_ptr(suite).to_str().map_err(|e| {
            set_error(e.to_string());
            EtlStatus::Utf8
        })?;
        let ctx = &c.inner;
        let config = Config {
            n: ctx.n,
            tau_re: ctx.tau.re,
            tau_im: ctx.tau.im,
            hbar_re: ctx.hbar.re,
            hbar_im: ctx.hbar.im,
            c_re: ctx.c.re,
            c_im: ctx.c.im,
            trunc: ctx.trunc,
            tol_series: ctx.tol_series,
            tol_identity: ctx.tol_identity,
            seed: c.seed,
        };
        let report = run_suite_at(name, &config, ctx.n).map_err(fail)?;
        let json = to_json(std::slice::from_ref(&report), report.wall_time_s);
        *out_pass = i32::from(report.pass());
        *out_json = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from [`etl_run_suite`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn etl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
