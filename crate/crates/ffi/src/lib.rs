//! C ABI for the `nmmo` toolkit.
//!
//! Conventions:
//! - Every function returns an [`NmmoStatus`]; outputs go through pointer
//!   arguments. On failure, [`nmmo_last_error`] describes the problem.
//! - Objects are opaque handles created by `*_new` and released by `*_free`.
//! - Objective vectors are in maximization convention (negated native
//!   objectives), inputs are in the unit cube.
//! - Strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nmmo::benchmarks::make_problem;
use nmmo::engine::{self, BOState, Method, RunConfig};
use nmmo::pareto::ParetoFront;
use nmmo::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmmoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    Numerical = 5,
    UnknownName = 6,
    Io = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NmmoStatus {
    match e {
        Error::DimensionMismatch { .. } => NmmoStatus::DimensionMismatch,
        Error::NonFinite(_) => NmmoStatus::NonFinite,
        Error::InvalidArgument(_) | Error::Config(_) => NmmoStatus::InvalidArgument,
        Error::NotPositiveDefinite { .. } | Error::Optimization(_) => NmmoStatus::Numerical,
        Error::UnknownProblem { .. } | Error::UnknownMethod(_) => NmmoStatus::UnknownName,
        Error::Step { source, .. } => status_of(source),
        Error::Io(_) | Error::Csv(_) => NmmoStatus::Io,
    }
}

enum Failure {
    Status(NmmoStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(NmmoStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NmmoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NmmoStatus::Ok
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            NmmoStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(NmmoStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn check_len(expected: usize, found: usize) -> Result<(), Failure> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found }.into())
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn nmmo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version string (static storage).
#[no_mangle]
pub extern "C" fn nmmo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------- fronts

/// Opaque Pareto front handle.
pub struct NmmoFront {
    inner: ParetoFront,
}

/// Creates an empty front with `k` objectives and the given reference point.
///
/// # Safety
/// `reference` must point to `k` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmmo_front_new(reference: *const f64, k: usize, out_front: *mut *mut NmmoFront) -> NmmoStatus {
    guard(|| {
        let r = slice(reference, k, "reference")?;
        let dst = out(out_front, "out_front")?;
        let inner = ParetoFront::new(r.to_vec())?;
        *dst = Box::into_raw(Box::new(NmmoFront { inner }));
        Ok(())
    })
}

/// Releases a front. Null is ignored.
///
/// # Safety
/// `front` must come from [`nmmo_front_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nmmo_front_free(front: *mut NmmoFront) {
    if !front.is_null() {
        drop(Box::from_raw(front));
    }
}

/// Adds a point. `inserted` (optional) receives 1 when the front changed.
///
/// # Safety
/// `front` must be a live handle and `y` must point to `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn nmmo_front_insert(
    front: *mut NmmoFront,
    y: *const f64,
    k: usize,
    inserted: *mut i32,
) -> NmmoStatus {
    guard(|| {
        let f = out(front, "front")?;
        let y = slice(y, k, "y")?;
        check_len(f.inner.k(), k)?;
        let added = f.inner.insert(y)?;
        if let Some(flag) = inserted.as_mut() {
            *flag = i32::from(added);
        }
        Ok(())
    })
}

/// Number of stored points.
///
/// # Safety
/// `front` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmmo_front_len(front: *const NmmoFront, out_len: *mut usize) -> NmmoStatus {
    guard(|| {
        let f = front.as_ref().ok_or_else(|| null("front"))?;
        *out(out_len, "out_len")? = f.inner.len();
        Ok(())
    })
}

/// Dominated hypervolume with respect to the reference point.
///
/// # Safety
/// `front` must be a live handle; `out_hv` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmmo_front_hypervolume(front: *const NmmoFront, out_hv: *mut f64) -> NmmoStatus {
    guard(|| {
        let f = front.as_ref().ok_or_else(|| null("front"))?;
        *out(out_hv, "out_hv")? = f.inner.hypervolume();
        Ok(())
    })
}

/// Hypervolume improvement of `y` without modifying the front.
///
/// # Safety
/// `front` must be a live handle, `y` must point to `k` doubles and
/// `out_hvi` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmmo_front_hvi(
    front: *const NmmoFront,
    y: *const f64,
    k: usize,
    out_hvi: *mut f64,
) -> NmmoStatus {
    guard(|| {
        let f = front.as_ref().ok_or_else(|| null("front"))?;
        let y = slice(y, k, "y")?;
        check_len(f.inner.k(), k)?;
        *out(out_hvi, "out_hvi")? = f.inner.hvi(y)?;
        Ok(())
    })
}

// -------------------------------------------------------------- problems

/// Input dimension and objective count of a named benchmark.
///
/// # Safety
/// `name` must be a NUL-terminated string; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmmo_problem_info(name: *const c_char, out_d: *mut usize, out_k: *mut usize) -> NmmoStatus {
    guard(|| {
        let p = make_problem(string(name, "name")?)?;
        *out(out_d, "out_d")? = p.d;
        *out(out_k, "out_k")? = p.k;
        Ok(())
    })
}

/// Reference point in maximization convention.
///
/// # Safety
/// `out_ref` must point to `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nmmo_problem_reference(name: *const c_char, out_ref: *mut f64, k: usize) -> NmmoStatus {
    guard(|| {
        let p = make_problem(string(name, "name")?)?;
        check_len(p.k, k)?;
        slice_mut(out_ref, k, "out_ref")?.copy_from_slice(&p.reference_max());
        Ok(())
    })
}

/// Evaluates a benchmark at a unit-cube input.
///
/// # Safety
/// `x` must point to `d` doubles and `out_y` to `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nmmo_problem_evaluate(
    name: *const c_char,
    x: *const f64,
    d: usize,
    out_y: *mut f64,
    k: usize,
) -> NmmoStatus {
    guard(|| {
        let p = make_problem(string(name, "name")?)?;
        check_len(p.d, d)?;
        check_len(p.k, k)?;
        let y = p.evaluate(slice(x, d, "x")?)?;
        slice_mut(out_y, k, "out_y")?.copy_from_slice(&y);
        Ok(())
    })
}

// ------------------------------------------------------------ optimizers

/// Numeric run settings.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NmmoRunConfig {
    pub horizon_cap: usize,
    pub iterations: usize,
    pub init_points: usize,
    pub mc_samples: usize,
    pub grid_size: usize,
    pub fit_restarts: usize,
    pub seed: u64,
}

/// Default settings.
#[no_mangle]
pub extern "C" fn nmmo_run_config_default() -> NmmoRunConfig {
    let d = RunConfig::default();
    NmmoRunConfig {
        horizon_cap: d.horizon_cap,
        iterations: d.iterations,
        init_points: d.init_points,
        mc_samples: d.mc_samples,
        grid_size: d.grid_size,
        fit_restarts: d.fit_restarts,
        seed: d.seed,
    }
}

unsafe fn run_config(problem: *const c_char, method: *const c_char, c: &NmmoRunConfig) -> Result<RunConfig, Failure> {
    let method: Method = string(method, "method")?.parse()?;
    let cfg = RunConfig {
        problem: string(problem, "problem")?.to_string(),
        method,
        horizon_cap: c.horizon_cap,
        iterations: c.iterations,
        init_points: c.init_points,
        mc_samples: c.mc_samples,
        grid_size: c.grid_size,
        fit_restarts: c.fit_restarts,
        seed: c.seed,
        record_timing: false,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Ask/tell optimizer handle.
pub struct NmmoOptimizer {
    cfg: RunConfig,
    design: Vec<Vec<f64>>,
    init_x: Vec<Vec<f64>>,
    init_y: Vec<Vec<f64>>,
    state: Option<BOState>,
}

/// Creates an optimizer for a named problem. The first `init_points`
/// suggestions are the initial Sobol design.
///
/// # Safety
/// `problem` and `method` must be NUL-terminated strings, `config` may be
/// null (defaults) and `out_opt` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmmo_optimizer_new(
    problem: *const c_char,
    method: *const c_char,
    config: *const NmmoRunConfig,
    out_opt: *mut *mut NmmoOptimizer,
) -> NmmoStatus {
    guard(|| {
        let c = config.as_ref().copied().unwrap_or_else(|| nmmo_run_config_default());
        let cfg = run_config(problem, method, &c)?;
        let dst = out(out_opt, "out_opt")?;
        let design = engine::initial_design(&cfg)?;
        *dst = Box::into_raw(Box::new(NmmoOptimizer {
            cfg,
            design,
            init_x: Vec::new(),
            init_y: Vec::new(),
            state: None,
        }));
        Ok(())
    })
}

/// Releases an optimizer. Null is ignored.
///
/// # Safety
/// `opt` must come from [`nmmo_optimizer_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nmmo_optimizer_free(opt: *mut NmmoOptimizer) {
    if !opt.is_null() {
        drop(Box::from_raw(opt));
    }
}

/// Writes the next input to evaluate into `out_x` (`d` doubles). Calling it
/// repeatedly without a tell returns the same point.
///
/// # Safety
/// `opt` must be a live handle and `out_x` must point to `d` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nmmo_optimizer_ask(opt: *mut NmmoOptimizer, out_x: *mut f64, d: usize) -> NmmoStatus {
    guard(|| {
        let o = out(opt, "opt")?;
        let x = match &o.state {
            None => o.design[o.init_x.len()].clone(),
            Some(state) => {
                if state.iteration >= o.cfg.iterations {
                    return Err(Failure::Status(
                        NmmoStatus::InvalidArgument,
                        "iteration budget exhausted".into(),
                    ));
                }
                engine::suggest(state, &o.cfg)?
            }
        };
        check_len(x.len(), d)?;
        slice_mut(out_x, d, "out_x")?.copy_from_slice(&x);
        Ok(())
    })
}

/// Records an observation (maximization convention) at `x`.
///
/// # Safety
/// `opt` must be a live handle; `x` and `y` must point to `d` and `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn nmmo_optimizer_tell(
    opt: *mut NmmoOptimizer,
    x: *const f64,
    d: usize,
    y: *const f64,
    k: usize,
) -> NmmoStatus {
    guard(|| {
        let o = out(opt, "opt")?;
        let (x, y) = (slice(x, d, "x")?.to_vec(), slice(y, k, "y")?.to_vec());
        match &mut o.state {
            Some(state) => {
                engine::observe(state, &o.cfg, x, y)?;
            }
            None => {
                let p = make_problem(&o.cfg.problem)?;
                check_len(p.d, d)?;
                check_len(p.k, k)?;
                if x.iter().chain(&y).any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("observation").into());
                }
                o.init_x.push(x);
                o.init_y.push(y);
                if o.init_x.len() == o.design.len() {
                    let state = engine::state_from_data(&o.cfg, o.init_x.clone(), o.init_y.clone())?;
                    o.state = Some(state);
                }
            }
        }
        Ok(())
    })
}

/// Current hypervolume of the observed outputs.
///
/// # Safety
/// `opt` must be a live handle; `out_hv` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmmo_optimizer_hypervolume(opt: *const NmmoOptimizer, out_hv: *mut f64) -> NmmoStatus {
    guard(|| {
        let o = opt.as_ref().ok_or_else(|| null("opt"))?;
        let hv = match &o.state {
            Some(s) => s.front.hypervolume(),
            None => {
                let p = make_problem(&o.cfg.problem)?;
                ParetoFront::from_points(&o.init_y, p.reference_max())?.hypervolume()
            }
        };
        *out(out_hv, "out_hv")? = hv;
        Ok(())
    })
}

/// Runs a complete optimization on a benchmark and writes the hypervolume
/// after each of the `config.iterations` steps into `out_hv`.
///
/// # Safety
/// `problem`, `method` must be NUL-terminated strings; `config` may be null;
/// `out_hv` must point to `n` writable doubles with `n == iterations`.
#[no_mangle]
pub unsafe extern "C" fn nmmo_run_bo(
    problem: *const c_char,
    method: *const c_char,
    config: *const NmmoRunConfig,
    out_hv: *mut f64,
    n: usize,
) -> NmmoStatus {
    guard(|| {
        let c = config.as_ref().copied().unwrap_or_else(|| nmmo_run_config_default());
        let cfg = run_config(problem, method, &c)?;
        check_len(cfg.iterations, n)?;
        let dst = slice_mut(out_hv, n, "out_hv")?;
        let rec = engine::run_bo(&cfg)?;
        for (o, row) in dst.iter_mut().zip(&rec.rows) {
            *o = row.hypervolume;
        }
        Ok(())
    })
}
