//! C ABI over the pdqls library.
//!
//! Every fallible call returns a status code and writes its result through
//! an out-pointer. On failure the message is available from
//! `pdqls_last_error` on the same thread until the next failing call.
//! Handles are opaque and released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pdqls::instances::{generate, InstanceJson, InstanceMatrix, QlsInstance};
use pdqls::poly::build_inverse_approximant;
use pdqls::solver::{promised_kappa, solve_postselect, Mode};
use pdqls::state::StateVector;
use pdqls::sumqls::sumqls_solve;
use pdqls::vtaa::{build_schedule, simulate_vst, Amplification};
use pdqls::Error;

pub const PDQLS_OK: i32 = 0;
/// A required pointer argument was null.
pub const PDQLS_ERR_NULL: i32 = 1;
/// Bad input: parameters, JSON, dimensions or promises.
pub const PDQLS_ERR_INVALID: i32 = 2;
/// A numerical self-check failed.
pub const PDQLS_ERR_NUMERICAL: i32 = 3;
/// A string argument was not valid UTF-8.
pub const PDQLS_ERR_UTF8: i32 = 4;
/// The library panicked; this is a bug.
pub const PDQLS_ERR_PANIC: i32 = 5;

pub const PDQLS_MODE_POSTSELECT: i32 = 0;
pub const PDQLS_MODE_AMPLIFY: i32 = 1;

/// A generated or loaded linear-system instance.
pub struct PdqlsInstance {
    inner: QlsInstance,
}

/// Output state of a solver run together with its JSON report.
pub struct PdqlsSolution {
    state: StateVector,
    report: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() {
            PDQLS_ERR_NUMERICAL
        } else {
            PDQLS_ERR_INVALID
        };
        Failure(code, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PDQLS_OK,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PDQLS_ERR_PANIC
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PDQLS_ERR_NULL, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(PDQLS_ERR_UTF8, format!("{what}: {e}")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn json_string(s: String) -> Result<CString, Failure> {
    CString::new(s).map_err(|e| Failure(PDQLS_ERR_INVALID, e.to_string()))
}

fn solution(state: StateVector, report: &impl serde::Serialize) -> Result<*mut PdqlsSolution, Failure> {
    let report = json_string(pdqls::json::to_string(report)?)?;
    Ok(Box::into_raw(Box::new(PdqlsSolution { state, report })))
}

/// Message of the last failing call on this thread, or null if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn pdqls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn pdqls_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pdqls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates an instance of `family` with parameters given as a JSON object
/// (null means `{}`).
///
/// # Safety
/// `family` and `params_json` must be NUL-terminated strings or null, `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pdqls_instance_generate(
    family: *const c_char,
    seed: u64,
    params_json: *const c_char,
    out: *mut *mut PdqlsInstance,
) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let family = str_arg(family, "family")?;
        let params = if params_json.is_null() {
            serde_json::Value::Object(Default::default())
        } else {
            serde_json::from_str(str_arg(params_json, "params_json")?).map_err(Error::from)?
        };
        let inner = generate(family, seed, &params)?;
        *out = Box::into_raw(Box::new(PdqlsInstance { inner }));
        Ok(())
    })
}

/// Loads an instance from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pdqls_instance_from_json(json: *const c_char, out: *mut *mut PdqlsInstance) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let j: InstanceJson = serde_json::from_str(str_arg(json, "json")?).map_err(Error::from)?;
        let inner = QlsInstance::from_json(&j)?;
        *out = Box::into_raw(Box::new(PdqlsInstance { inner }));
        Ok(())
    })
}

/// Serializes an instance. The string is released with `pdqls_string_free`.
///
/// # Safety
/// `inst` must come from this library, `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pdqls_instance_to_json(inst: *const PdqlsInstance, out: *mut *mut c_char) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let s = json_string(pdqls::json::to_string(&inst.inner.to_json())?)?;
        *out = s.into_raw();
        Ok(())
    })
}

/// Dimension N of the instance, 0 for a null handle.
///
/// # Safety
/// `inst` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn pdqls_instance_dim(inst: *const PdqlsInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.dim())
}

/// Declared condition number, NaN for a null handle.
///
/// # Safety
/// `inst` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn pdqls_instance_kappa(inst: *const PdqlsInstance) -> f64 {
    inst.as_ref().map_or(f64::NAN, |i| i.inner.kappa)
}

/// # Safety
/// `inst` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn pdqls_instance_free(inst: *mut PdqlsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Inverse approximant solve; `mode` is `PDQLS_MODE_POSTSELECT` or
/// `PDQLS_MODE_AMPLIFY`.
///
/// # Safety
/// `inst` must come from this library, `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pdqls_solve(
    inst: *const PdqlsInstance,
    eta: f64,
    eps: f64,
    mode: i32,
    out: *mut *mut PdqlsSolution,
) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let mode = match mode {
            PDQLS_MODE_POSTSELECT => Mode::Postselect,
            PDQLS_MODE_AMPLIFY => Mode::Amplify,
            m => return Err(Failure(PDQLS_ERR_INVALID, format!("unknown mode {m}"))),
        };
        let a = inst.inner.solver_operator()?;
        let (x, r) = solve_postselect(&a, &inst.inner.b_state(), eta, eps, mode)?;
        *out = solution(x, &r)?;
        Ok(())
    })
}

/// Variable-time amplified solve.
///
/// # Safety
/// `inst` must come from this library, `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pdqls_vtaa(
    inst: *const PdqlsInstance,
    eta: f64,
    eps: f64,
    out: *mut *mut PdqlsSolution,
) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let a = inst.inner.solver_operator()?;
        let sched = build_schedule(promised_kappa(&a)?, eta, eps)?;
        let (x, r) = simulate_vst(&a, &inst.inner.b_state(), &sched, &Amplification::Auto)?;
        *out = solution(x, &r)?;
        Ok(())
    })
}

/// Sum-QLS solve; the instance must be a sum of local terms.
///
/// # Safety
/// `inst` must come from this library, `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pdqls_sumqls(inst: *const PdqlsInstance, eps: f64, out: *mut *mut PdqlsSolution) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let InstanceMatrix::Sum(spec) = &inst.inner.matrix else {
            return Err(Failure(
                PDQLS_ERR_INVALID,
                format!("family {:?} is not a sum of terms", inst.inner.family),
            ));
        };
        let (x, r) = sumqls_solve(spec, &inst.inner.b, eps)?;
        *out = solution(x, &r)?;
        Ok(())
    })
}

/// Number of amplitudes in the output state, 0 for a null handle.
///
/// # Safety
/// `sol` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn pdqls_solution_dim(sol: *const PdqlsSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.state.dim())
}

/// Copies the output amplitudes into `re` and `im`, each of length `len`,
/// which must equal `pdqls_solution_dim`.
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pdqls_solution_amplitudes(
    sol: *const PdqlsSolution,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let amps = sol.state.amplitudes();
        if len != amps.len() {
            return Err(Failure(
                PDQLS_ERR_INVALID,
                format!("buffer length {len}, state has {}", amps.len()),
            ));
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for (k, a) in amps.iter().enumerate() {
            re[k] = a.re;
            im[k] = a.im;
        }
        Ok(())
    })
}

/// JSON report of the run, owned by the solution handle.
///
/// # Safety
/// `sol` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn pdqls_solution_report(sol: *const PdqlsSolution) -> *const c_char {
    sol.as_ref().map_or(ptr::null(), |s| s.report.as_ptr())
}

/// # Safety
/// `sol` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn pdqls_solution_free(sol: *mut PdqlsSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Evaluates P_{2ell-1,kappa} at `n` points and writes K to `k_norm` when
/// it is not null.
///
/// # Safety
/// `xs` must point to `n` readable and `ys` to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pdqls_approx_eval(
    kappa: f64,
    ell: usize,
    xs: *const f64,
    ys: *mut f64,
    n: usize,
    k_norm: *mut f64,
) -> i32 {
    guard(|| {
        if xs.is_null() || ys.is_null() {
            return Err(null("xs/ys"));
        }
        let p = build_inverse_approximant(ell, kappa)?;
        let xs = std::slice::from_raw_parts(xs, n);
        let ys = std::slice::from_raw_parts_mut(ys, n);
        for (y, &x) in ys.iter_mut().zip(xs) {
            *y = p.eval(x);
        }
        if let Some(k) = k_norm.as_mut() {
            *k = p.k_norm;
        }
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn pdqls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
