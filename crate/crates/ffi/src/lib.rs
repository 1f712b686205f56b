//! C ABI over the `spider-hjb` solver.
//!
//! Problems and solutions are opaque heap handles released with the matching
//! `*_free` function. Every fallible call returns a [`SpiderStatus`]; on
//! failure a message is stored per thread and read back with
//! [`spider_last_error`]. Out-parameters are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spider_hjb::config::{Resolved, RunConfig};
use spider_hjb::hjb::{write_field_csv, CsvHeader};
use spider_hjb::network::{distance, NetworkPoint, RayIndex};
use spider_hjb::simulate::{estimate_value, ConstantPolicy, SimConfig};
use spider_hjb::verify::{reflected_bm_oracle, Solution};
use spider_hjb::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpiderStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Configuration or problem-data error.
    Config = 2,
    /// Numerical failure inside the solver or simulator.
    Numerical = 3,
    /// Query outside the grid or network domain.
    OutOfDomain = 4,
    /// Invalid argument value.
    InvalidArgument = 5,
    Io = 6,
    /// A string argument was not valid UTF-8.
    Utf8 = 7,
    /// Internal panic caught at the boundary.
    Panic = 8,
}

/// Problem data, control sets and grid built from a TOML run configuration.
pub struct SpiderProblem {
    resolved: Resolved,
    config_hash: String,
}

/// Solved value field together with its feedback policy.
pub struct SpiderSolution {
    solution: Solution,
    config_hash: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SpiderStatus {
    match e {
        Error::Config(_) | Error::InvalidData(_) | Error::Format { .. } => SpiderStatus::Config,
        Error::Numerical { .. } | Error::NoConvergence(_) => SpiderStatus::Numerical,
        Error::OutOfDomain(_) => SpiderStatus::OutOfDomain,
        Error::InvalidInput(_) => SpiderStatus::InvalidArgument,
        Error::Io(_) => SpiderStatus::Io,
    }
}

/// Runs `f`, recording errors and panics.
fn guard<F>(f: F) -> SpiderStatus
where
    F: FnOnce() -> Result<(), (SpiderStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpiderStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SpiderStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (SpiderStatus, String)>;
}

impl<T> IntoFfi<T> for spider_hjb::Result<T> {
    fn ffi(self) -> Result<T, (SpiderStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (SpiderStatus, String) {
    (SpiderStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SpiderStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SpiderStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SpiderStatus::Utf8, format!("{what} is not valid UTF-8")))
}

fn point(x: f64, ray: usize, ray_count: usize) -> Result<NetworkPoint, (SpiderStatus, String)> {
    NetworkPoint::new(x, RayIndex::new(ray, ray_count).ffi()?).ffi()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn spider_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spider_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML run configuration and builds the problem.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spider_problem_from_toml(toml: *const c_char, out: *mut *mut SpiderProblem) -> SpiderStatus {
    guard(|| {
        let text = string(toml, "toml")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = RunConfig::parse(text, "<string>").ffi()?;
        let resolved = config.resolve().ffi()?;
        let problem = SpiderProblem {
            resolved,
            config_hash: config.hash().ffi()?,
        };
        *out = Box::into_raw(Box::new(problem));
        Ok(())
    })
}

/// Number of rays of the problem.
///
/// # Safety
/// `problem` must come from [`spider_problem_from_toml`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spider_problem_ray_count(problem: *const SpiderProblem, out: *mut usize) -> SpiderStatus {
    guard(|| {
        let p = borrow(problem, "problem")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = p.resolved.data.ray_count();
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or come from [`spider_problem_from_toml`] and not
/// have been freed.
#[no_mangle]
pub unsafe extern "C" fn spider_problem_free(problem: *mut SpiderProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solves the HJB system on the configured grid.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spider_solve(problem: *const SpiderProblem, out: *mut *mut SpiderSolution) -> SpiderStatus {
    guard(|| {
        let p = borrow(problem, "problem")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = &p.resolved;
        let solution = Solution::solve(&r.data, &r.controls, &r.grid).ffi()?;
        *out = Box::into_raw(Box::new(SpiderSolution {
            solution,
            config_hash: p.config_hash.clone(),
        }));
        Ok(())
    })
}

/// Interpolated value `u(t, x, ray, l)`; `ray` is one-based.
///
/// # Safety
/// `solution` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spider_solution_eval(
    solution: *const SpiderSolution,
    t: f64,
    x: f64,
    ray: usize,
    l: f64,
    out: *mut f64,
) -> SpiderStatus {
    guard(|| {
        let s = borrow(solution, "solution")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = point(x, ray, s.solution.field.grid().ray_count)?;
        *out = s.solution.field.eval(t, &p, l).ffi()?;
        Ok(())
    })
}

/// Writes the value field and policy as CSV, without a timestamp line.
///
/// # Safety
/// `solution` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn spider_solution_write_csv(
    solution: *const SpiderSolution,
    path: *const c_char,
) -> SpiderStatus {
    guard(|| {
        let s = borrow(solution, "solution")?;
        let path = string(path, "path")?;
        let header = CsvHeader {
            config_hash: s.config_hash.clone(),
            timestamp: None,
        };
        let file = File::create(path).map_err(Error::from).ffi()?;
        let mut w = BufWriter::new(file);
        write_field_csv(&mut w, &s.solution.field, &s.solution.policy, &header).ffi()?;
        w.flush().map_err(Error::from).ffi()?;
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a live handle from [`spider_solve`].
#[no_mangle]
pub unsafe extern "C" fn spider_solution_free(solution: *mut SpiderSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Monte Carlo estimate of the reward from `(t, x, ray, l)`. With a null
/// `solution` the process is uncontrolled (`beta = 0`, uniform vertex
/// weights); otherwise the solution's feedback policy is used.
///
/// # Safety
/// `problem` must be a live handle, `solution` null or a live handle of the
/// same problem, and `mean`, `std_error` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn spider_estimate_value(
    problem: *const SpiderProblem,
    solution: *const SpiderSolution,
    t: f64,
    x: f64,
    ray: usize,
    l: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
    mean: *mut f64,
    std_error: *mut f64,
) -> SpiderStatus {
    guard(|| {
        let p = borrow(problem, "problem")?;
        if mean.is_null() || std_error.is_null() {
            return Err(null("mean or std_error"));
        }
        let data = &p.resolved.data;
        let start = point(x, ray, data.ray_count())?;
        let sim = SimConfig::new(dt, n_paths, seed).ffi()?;
        let init = (t, start, l);
        let (m, se) = match solution.as_ref() {
            Some(s) => estimate_value(data, &s.solution.policy, init, &sim),
            None => estimate_value(data, &ConstantPolicy::uncontrolled(data.ray_count()), init, &sim),
        }
        .ffi()?;
        *mean = m;
        *std_error = se;
        Ok(())
    })
}

/// `E|x + sigma W_s|` and the mean local time of the reflected motion.
///
/// # Safety
/// `mean` and `local_time` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn spider_reflected_bm_oracle(
    x: f64,
    s: f64,
    sigma: f64,
    mean: *mut f64,
    local_time: *mut f64,
) -> SpiderStatus {
    guard(|| {
        if mean.is_null() || local_time.is_null() {
            return Err(null("mean or local_time"));
        }
        let (m, l) = reflected_bm_oracle(x, s, sigma).ffi()?;
        *mean = m;
        *local_time = l;
        Ok(())
    })
}

/// Geodesic distance between `(x1, ray1)` and `(x2, ray2)` on a star with
/// `ray_count` rays.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spider_distance(
    x1: f64,
    ray1: usize,
    x2: f64,
    ray2: usize,
    ray_count: usize,
    out: *mut f64,
) -> SpiderStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = point(x1, ray1, ray_count)?;
        let q = point(x2, ray2, ray_count)?;
        *out = distance(&p, &q);
        Ok(())
    })
}
