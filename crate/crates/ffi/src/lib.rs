//! C interface to the dynflow solvers.
//!
//! Instances and solutions are opaque handles created by `df_*` functions and
//! released with the matching `*_free` function. Fallible calls return a
//! [`DfStatus`]; the message of the last failure on the calling thread is
//! available from [`df_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dynflow::bench::{overflow_ratio, path_change_ratio_minus_one, total_min_changes};
use dynflow::instance::{generate_instance, read_instance, Instance, Preset};
use dynflow::lp::resolve_backend;
use dynflow::solvers::{solve, SolveReport, SolverConfig, SolverKind};

/// Result codes of fallible calls.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    InvalidInstance = 4,
    SolverFailed = 5,
    TimedOut = 6,
    OutOfRange = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// A problem instance.
pub struct DfInstance {
    inner: Instance,
}

/// The result of one solver run.
pub struct DfSolution {
    report: SolveReport,
    overflow_ratio: Option<f64>,
    path_change_ratio_minus_one: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

fn fail(status: DfStatus, msg: impl ToString) -> DfStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into `DfStatus::Panic`.
fn guard(f: impl FnOnce() -> DfStatus) -> DfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(DfStatus::Panic, msg)
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, DfStatus> {
    if p.is_null() {
        return Err(fail(DfStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(DfStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

macro_rules! check_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(DfStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failed call on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn df_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn df_status_name(status: DfStatus) -> *const c_char {
    let s: &'static CStr = match status {
        DfStatus::Ok => c"ok",
        DfStatus::NullPointer => c"null pointer",
        DfStatus::InvalidArgument => c"invalid argument",
        DfStatus::Io => c"i/o error",
        DfStatus::InvalidInstance => c"invalid instance",
        DfStatus::SolverFailed => c"solver failed",
        DfStatus::TimedOut => c"time limit reached",
        DfStatus::OutOfRange => c"index out of range",
        DfStatus::BufferTooSmall => c"buffer too small",
        DfStatus::Panic => c"internal error",
    };
    s.as_ptr()
}

/// Reads an instance file.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_instance_read(path: *const c_char, out: *mut *mut DfInstance) -> DfStatus {
    check_null!(out);
    guard(|| {
        let path = try_status!(text(path, "path"));
        match read_instance(path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DfInstance { inner }));
                DfStatus::Ok
            }
            Err(dynflow::instance::InstanceError::Io(e)) => fail(DfStatus::Io, e),
            Err(e) => fail(DfStatus::InvalidInstance, e),
        }
    })
}

/// Parses an instance from its JSON text.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_instance_from_json(json: *const c_char, out: *mut *mut DfInstance) -> DfStatus {
    check_null!(out);
    guard(|| {
        let json = try_status!(text(json, "json"));
        match Instance::from_json(json) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DfInstance { inner }));
                DfStatus::Ok
            }
            Err(e) => fail(DfStatus::InvalidInstance, e),
        }
    })
}

/// Generates an instance from a named preset.
///
/// # Safety
/// `preset` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_instance_generate(
    preset: *const c_char,
    size: usize,
    seed: u64,
    out: *mut *mut DfInstance,
) -> DfStatus {
    check_null!(out);
    guard(|| {
        let preset: Preset = match try_status!(text(preset, "preset")).parse() {
            Ok(p) => p,
            Err(e) => return fail(DfStatus::InvalidArgument, e),
        };
        match generate_instance(preset, size, seed) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DfInstance { inner }));
                DfStatus::Ok
            }
            Err(e) => fail(DfStatus::InvalidArgument, e),
        }
    })
}

/// Serializes an instance to JSON. Release the string with `df_string_free`.
///
/// # Safety
/// `instance` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_instance_to_json(instance: *const DfInstance, out: *mut *mut c_char) -> DfStatus {
    check_null!(instance, out);
    guard(|| match CString::new((*instance).inner.to_json()) {
        Ok(s) => {
            *out = s.into_raw();
            DfStatus::Ok
        }
        Err(e) => fail(DfStatus::Panic, e),
    })
}

/// # Safety
/// `instance` must be null or come from this library, and not be used after.
#[no_mangle]
pub unsafe extern "C" fn df_instance_free(instance: *mut DfInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn df_instance_node_count(instance: *const DfInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.node_count())
}

/// Number of commodities, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn df_instance_commodity_count(instance: *const DfInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.commodities.len())
}

/// Number of decision steps, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn df_instance_horizon(instance: *const DfInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.horizon())
}

/// Solves `instance` with the named solver. `config_toml` holds solver
/// settings in TOML and may be null for defaults.
///
/// # Safety
/// `instance` must come from this library; strings must be valid C strings;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_solve(
    instance: *const DfInstance,
    solver: *const c_char,
    config_toml: *const c_char,
    out: *mut *mut DfSolution,
) -> DfStatus {
    check_null!(instance, out);
    guard(|| {
        let inst = &(*instance).inner;
        let kind: SolverKind = match try_status!(text(solver, "solver")).parse() {
            Ok(k) => k,
            Err(e) => return fail(DfStatus::InvalidArgument, e),
        };
        let config = if config_toml.is_null() {
            SolverConfig::default()
        } else {
            match SolverConfig::from_toml(try_status!(text(config_toml, "config"))) {
                Ok(c) => c,
                Err(e) => return fail(DfStatus::InvalidArgument, e),
            }
        };
        let lp = match resolve_backend(None, config.lp_backend.as_deref()) {
            Ok(b) => b.solver(),
            Err(e) => return fail(DfStatus::InvalidArgument, e),
        };
        let report = match solve(inst, kind, &config, lp.as_ref()) {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return fail(DfStatus::TimedOut, e),
            Err(e) => return fail(DfStatus::SolverFailed, e),
        };
        let min = match total_min_changes(inst) {
            Ok(m) => m,
            Err(e) => return fail(DfStatus::SolverFailed, e),
        };
        let sol = DfSolution {
            overflow_ratio: overflow_ratio(&report.solution, inst),
            path_change_ratio_minus_one: path_change_ratio_minus_one(report.solution.changes, min),
            report,
        };
        *out = Box::into_raw(Box::new(sol));
        DfStatus::Ok
    })
}

/// # Safety
/// `solution` must be null or come from this library, and not be used after.
#[no_mangle]
pub unsafe extern "C" fn df_solution_free(solution: *mut DfSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Objective value (path changes times the change penalty plus penalized
/// overflow); NaN for a null handle.
///
/// # Safety
/// `solution` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn df_solution_objective(solution: *const DfSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.report.solution.objective)
}

/// Total number of path changes; 0 for a null handle.
///
/// # Safety
/// `solution` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn df_solution_changes(solution: *const DfSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.report.solution.changes)
}

/// True when the solver proved optimality.
///
/// # Safety
/// `solution` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn df_solution_optimal(solution: *const DfSolution) -> bool {
    solution.as_ref().is_some_and(|s| s.report.optimal)
}

/// True when some step used a fallback path.
///
/// # Safety
/// `solution` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn df_solution_degraded(solution: *const DfSolution) -> bool {
    solution.as_ref().is_some_and(|s| s.report.degraded)
}

/// Solver wall time in seconds; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn df_solution_wall_time(solution: *const DfSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.report.wall_time)
}

/// Overflow ratio; NaN when the instance budget is 0 or the handle is null.
///
/// # Safety
/// `solution` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn df_solution_overflow_ratio(solution: *const DfSolution) -> f64 {
    solution.as_ref().and_then(|s| s.overflow_ratio).unwrap_or(f64::NAN)
}

/// Path changes over the fewest possible, minus one; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn df_solution_path_change_ratio_minus_one(solution: *const DfSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.path_change_ratio_minus_one)
}

/// Copies the arc ids of the path of `commodity` at `step` (1-based) into
/// `arcs`. `len` receives the path length; when `capacity` is too small
/// nothing is copied and `BufferTooSmall` is returned.
///
/// # Safety
/// `solution` must come from this library; `arcs` must point to `capacity`
/// writable elements (or be null when `capacity` is 0); `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn df_solution_path(
    solution: *const DfSolution,
    commodity: usize,
    step: usize,
    arcs: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> DfStatus {
    check_null!(solution, len);
    guard(|| {
        let paths = &(*solution).report.solution.paths;
        let Some(seq) = paths.get(commodity) else {
            return fail(DfStatus::OutOfRange, format!("commodity {commodity} of {}", paths.len()));
        };
        if step == 0 || step > seq.horizon() {
            return fail(DfStatus::OutOfRange, format!("step {step} outside 1..={}", seq.horizon()));
        }
        let p = seq.at(step).arcs();
        *len = p.len();
        if capacity < p.len() {
            return fail(DfStatus::BufferTooSmall, format!("need {} slots, got {capacity}", p.len()));
        }
        if !p.is_empty() {
            check_null!(arcs);
            for (i, a) in p.iter().enumerate() {
                *arcs.add(i) = a.0;
            }
        }
        DfStatus::Ok
    })
}

/// The solver report as JSON. Release the string with `df_string_free`.
///
/// # Safety
/// `solution` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_solution_to_json(solution: *const DfSolution, out: *mut *mut c_char) -> DfStatus {
    check_null!(solution, out);
    guard(|| {
        let json = match serde_json::to_string(&(*solution).report) {
            Ok(j) => j,
            Err(e) => return fail(DfStatus::Panic, e),
        };
        match CString::new(json) {
            Ok(s) => {
                *out = s.into_raw();
                DfStatus::Ok
            }
            Err(e) => fail(DfStatus::Panic, e),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not used after.
#[no_mangle]
pub unsafe extern "C" fn df_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
