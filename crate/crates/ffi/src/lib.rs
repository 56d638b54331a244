//! C ABI over the `colombeau` engine.
//!
//! Every function returns a [`ColombeauStatus`]; on failure the message is
//! available from [`colombeau_last_error`] on the same thread. Handles are
//! opaque and released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use colombeau::asymptotics::{estimate_order, sweep, Samples};
use colombeau::cli::{default_compact, Context, Overrides};
use colombeau::genfunc::{parse_representative, Representative};
use colombeau::region::BoxRegion;
use colombeau::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColombeauStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Unresolved = 4,
    Domain = 5,
    Numerical = 6,
    Config = 7,
    Io = 8,
    BufferTooSmall = 9,
    Internal = 10,
}

impl From<&Error> for ColombeauStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => Self::Parse,
            Error::Unresolved { .. } => Self::Unresolved,
            Error::Domain(_) | Error::Overlap { .. } | Error::FlowEscape { .. } => Self::Domain,
            Error::Quadrature(_) | Error::Numerical { .. } | Error::Pairing { .. } => Self::Numerical,
            Error::Config(_) | Error::Construction(_) | Error::Unsupported(_) => Self::Config,
            Error::Io(_) => Self::Io,
        }
    }
}

/// A loaded experiment spec: manifold, names in scope, kernels and grid.
pub struct ColombeauContext(Context);

/// A parsed representative.
pub struct ColombeauRepresentative(Representative);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: ColombeauStatus, msg: impl Into<String>) -> ColombeauStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), ColombeauStatus>) -> ColombeauStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ColombeauStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(ColombeauStatus::Internal, "panic inside the engine"),
    }
}

fn engine(e: Error) -> ColombeauStatus {
    fail((&e).into(), e.to_string())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, ColombeauStatus> {
    if p.is_null() {
        return Err(fail(ColombeauStatus::NullPointer, format!("`{what}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(ColombeauStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], ColombeauStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(ColombeauStatus::NullPointer, format!("`{what}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, ColombeauStatus> {
    p.as_ref()
        .ok_or_else(|| fail(ColombeauStatus::NullPointer, format!("`{what}` is null")))
}

fn check_out<T>(p: *mut T, what: &str) -> Result<(), ColombeauStatus> {
    if p.is_null() {
        Err(fail(ColombeauStatus::NullPointer, format!("`{what}` is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failure on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn colombeau_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Load a spec from TOML text.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn colombeau_context_new(
    spec: *const c_char,
    out: *mut *mut ColombeauContext,
) -> ColombeauStatus {
    guard(|| {
        check_out(out, "out")?;
        let spec = text(spec, "spec")?;
        let ctx = Context::build(spec, "ffi", Overrides::default()).map_err(engine)?;
        *out = Box::into_raw(Box::new(ColombeauContext(ctx)));
        Ok(())
    })
}

/// # Safety
/// `ctx` must come from [`colombeau_context_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn colombeau_context_free(ctx: *mut ColombeauContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Parse a representative expression in the scope of `ctx`.
///
/// # Safety
/// Pointers must be valid; `expr` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn colombeau_parse(
    ctx: *const ColombeauContext,
    expr: *const c_char,
    out: *mut *mut ColombeauRepresentative,
) -> ColombeauStatus {
    guard(|| {
        check_out(out, "out")?;
        let ctx = handle(ctx, "ctx")?;
        let expr = text(expr, "expr")?;
        let rep = parse_representative(expr, &ctx.0.scope).map_err(engine)?;
        *out = Box::into_raw(Box::new(ColombeauRepresentative(rep)));
        Ok(())
    })
}

/// # Safety
/// `rep` must come from [`colombeau_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn colombeau_representative_free(rep: *mut ColombeauRepresentative) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

/// `R(Φ(ε, p), p)` for the named kernel of `ctx`.
///
/// # Safety
/// Pointers must be valid; `p` holds `dim` values.
#[no_mangle]
pub unsafe extern "C" fn colombeau_evaluate(
    ctx: *const ColombeauContext,
    rep: *const ColombeauRepresentative,
    kernel: *const c_char,
    eps: f64,
    p: *const f64,
    dim: usize,
    out: *mut f64,
) -> ColombeauStatus {
    guard(|| {
        check_out(out, "out")?;
        let ctx = handle(ctx, "ctx")?;
        let rep = handle(rep, "rep")?;
        let k = ctx.0.kernel(text(kernel, "kernel")?).map_err(engine)?;
        let p = slice(p, dim, "p")?;
        if dim != ctx.0.manifold.dim {
            return Err(fail(
                ColombeauStatus::Domain,
                format!(
                    "point has {dim} coordinates, manifold has dimension {}",
                    ctx.0.manifold.dim
                ),
            ));
        }
        let omega = k.eval_f64(eps, p).map_err(engine)?;
        let v = rep.0.evaluate_f64(&omega, p).map_err(engine)?;
        *out = v;
        Ok(())
    })
}

/// Sample `sup_{p∈K} |R(Φ(ε, p), p)|` over the grid of `ctx`.
///
/// `K` is the box `[lo, hi]` (`dim` values each) or the default compact when
/// both are null. `eps_out` and `values_out` hold `*len` entries on input;
/// `*len` is set to the number of grid points. A short buffer returns
/// `BufferTooSmall` with `*len` set to the required size.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn colombeau_sweep(
    ctx: *const ColombeauContext,
    rep: *const ColombeauRepresentative,
    kernel: *const c_char,
    lo: *const f64,
    hi: *const f64,
    dim: usize,
    eps_out: *mut f64,
    values_out: *mut f64,
    len: *mut usize,
) -> ColombeauStatus {
    guard(|| {
        check_out(len, "len")?;
        let ctx = handle(ctx, "ctx")?;
        let rep = handle(rep, "rep")?;
        let k = ctx.0.kernel(text(kernel, "kernel")?).map_err(engine)?;
        let n = ctx.0.grid.points;
        if *len < n {
            *len = n;
            return Err(fail(
                ColombeauStatus::BufferTooSmall,
                format!("sweep needs {n} entries"),
            ));
        }
        check_out(eps_out, "eps_out")?;
        check_out(values_out, "values_out")?;
        let compact = if lo.is_null() && hi.is_null() {
            default_compact(&ctx.0.manifold)
        } else {
            BoxRegion::new(slice(lo, dim, "lo")?.to_vec(), slice(hi, dim, "hi")?.to_vec())
        };
        let r = sweep(&rep.0, &k, &compact, &[], ctx.0.per_axis, &ctx.0.grid).map_err(engine)?;
        for (i, (e, v)) in r.samples.eps.iter().zip(&r.samples.values).enumerate() {
            *eps_out.add(i) = *e;
            *values_out.add(i) = *v;
        }
        *len = n;
        Ok(())
    })
}

/// Fitted exponent `a` of `|v(ε)| ≈ c·ε^a`; `+∞` for identically-zero samples.
///
/// # Safety
/// `eps` and `values` hold `len` entries; `slope` is valid.
#[no_mangle]
pub unsafe extern "C" fn colombeau_estimate_order(
    eps: *const f64,
    values: *const f64,
    len: usize,
    slope: *mut f64,
) -> ColombeauStatus {
    guard(|| {
        check_out(slope, "slope")?;
        let e = slice(eps, len, "eps")?.to_vec();
        let v = slice(values, len, "values")?.to_vec();
        let est = estimate_order(&Samples::new(e, v)).map_err(engine)?;
        *slope = est.slope;
        Ok(())
    })
}

/// Run every experiment of a spec and write the reports into `out_dir`.
///
/// `exit_code` receives 0 when every experiment matched its expectation and 1 otherwise.
///
/// # Safety
/// Strings must be NUL-terminated; `exit_code` valid.
#[no_mangle]
pub unsafe extern "C" fn colombeau_run_spec(
    spec: *const c_char,
    out_dir: *const c_char,
    exit_code: *mut i32,
) -> ColombeauStatus {
    guard(|| {
        check_out(exit_code, "exit_code")?;
        let spec = text(spec, "spec")?;
        let dir = text(out_dir, "out_dir")?;
        let ctx = Context::build(spec, "ffi", Overrides::default()).map_err(engine)?;
        let report = ctx.run();
        report.write(Path::new(dir)).map_err(engine)?;
        *exit_code = if report.all_match() { 0 } else { 1 };
        Ok(())
    })
}

/// Number of ε grid points of `ctx`.
///
/// # Safety
/// `ctx` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn colombeau_grid_points(ctx: *const ColombeauContext, out: *mut usize) -> ColombeauStatus {
    guard(|| {
        check_out(out, "out")?;
        *out = handle(ctx, "ctx")?.0.grid.points;
        Ok(())
    })
}
