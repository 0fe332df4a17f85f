//! C ABI for the dpdp solver.
//!
//! Instances, heatmaps and solutions are opaque heap handles owned by the
//! caller and released with their `_free` function. Every fallible call
//! returns a [`DpdpStatus`]; on failure, [`dpdp_last_error`] describes what
//! went wrong on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dpdp::dp::{solve, Outcome, SolverConfig};
use dpdp::heatmap::{Heatmap, Sparsity};
use dpdp::instance::{generate_tsp, generate_tsptw, generate_vrp, Instance, ProblemKind};
use dpdp::policy::PolicyKind;
use dpdp::solution::Solution;
use dpdp::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpdpStatus {
    Ok = 0,
    /// The solve finished without a feasible solution.
    NoSolution = 1,
    /// A null pointer, out-of-range value or inconsistent argument.
    InvalidArgument = 2,
    /// Malformed or invalid instance or heatmap data.
    InvalidInput = 3,
    Io = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpdpProblem {
    Tsp = 0,
    Vrp = 1,
    Tsptw = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpdpPolicy {
    HeatPotential = 0,
    Heat = 1,
    CostHeatPotential = 2,
    CostHeat = 3,
    Cost = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpdpSparsity {
    /// Keep edges whose heat is at least `threshold`.
    Threshold = 0,
    /// Keep each node's `knn` nearest neighbours.
    Knn = 1,
    Complete = 2,
}

/// Solver settings; start from [`dpdp_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpdpConfig {
    pub beam_size: usize,
    pub policy: DpdpPolicy,
    pub invert_cost_heat: bool,
    pub sparsity: DpdpSparsity,
    pub threshold: f64,
    pub knn: usize,
    pub dominance: bool,
    pub score_bound_prefilter: bool,
}

pub struct DpdpInstance(Instance);
pub struct DpdpHeatmap(Heatmap);
pub struct DpdpSolution(Solution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> DpdpStatus {
    match err {
        Error::InvalidInstance(_) | Error::InvalidHeatmap(_) | Error::Parse { .. } => DpdpStatus::InvalidInput,
        Error::InvalidArgument(_) | Error::SizeLimit(_) => DpdpStatus::InvalidArgument,
        Error::Io { .. } => DpdpStatus::Io,
        Error::Internal(_) => DpdpStatus::Internal,
    }
}

type Failure = (DpdpStatus, String);

fn fail(status: DpdpStatus, msg: impl Into<String>) -> Failure {
    (status, msg.into())
}

fn from_lib(err: Error) -> Failure {
    (status_of(&err), err.to_string())
}

/// Runs `body`, converting errors and panics into a status plus message.
fn guard(body: impl FnOnce() -> Result<DpdpStatus, Failure>) -> DpdpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DpdpStatus::Internal
        }
    }
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, Failure> {
    if path.is_null() {
        return Err(fail(DpdpStatus::InvalidArgument, "path is null"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map_err(|_| fail(DpdpStatus::InvalidArgument, "path is not valid UTF-8"))
}

unsafe fn out_arg<'a, T>(out: *mut *mut T) -> Result<&'a mut *mut T, Failure> {
    if out.is_null() {
        return Err(fail(DpdpStatus::InvalidArgument, "output pointer is null"));
    }
    *out = ptr::null_mut();
    Ok(&mut *out)
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(DpdpStatus::InvalidArgument, format!("{what} is null")))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn dpdp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Defaults: beam 1000, heat + potential, threshold 1e-5, dominance on,
/// prefilter off.
#[no_mangle]
pub extern "C" fn dpdp_config_default() -> DpdpConfig {
    let d = SolverConfig::default();
    let threshold = match d.sparsity {
        Sparsity::Threshold(t) => t,
        _ => 0.0,
    };
    DpdpConfig {
        beam_size: d.beam_size,
        policy: DpdpPolicy::HeatPotential,
        invert_cost_heat: d.invert_cost_heat,
        sparsity: DpdpSparsity::Threshold,
        threshold,
        knn: 0,
        dominance: d.dominance,
        score_bound_prefilter: d.score_bound_prefilter,
    }
}

fn to_config(c: &DpdpConfig) -> SolverConfig {
    SolverConfig {
        beam_size: c.beam_size,
        policy: match c.policy {
            DpdpPolicy::HeatPotential => PolicyKind::HeatPotential,
            DpdpPolicy::Heat => PolicyKind::Heat,
            DpdpPolicy::CostHeatPotential => PolicyKind::CostHeatPotential,
            DpdpPolicy::CostHeat => PolicyKind::CostHeat,
            DpdpPolicy::Cost => PolicyKind::Cost,
        },
        invert_cost_heat: c.invert_cost_heat,
        sparsity: match c.sparsity {
            DpdpSparsity::Threshold => Sparsity::Threshold(c.threshold),
            DpdpSparsity::Knn => Sparsity::Knn(c.knn),
            DpdpSparsity::Complete => Sparsity::Complete,
        },
        dominance: c.dominance,
        score_bound_prefilter: c.score_bound_prefilter,
    }
}

/// Reads a JSON instance file into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dpdp_instance_read(path: *const c_char, out: *mut *mut DpdpInstance) -> DpdpStatus {
    guard(|| {
        let out = out_arg(out)?;
        let inst = Instance::read(path_arg(path)?).map_err(from_lib)?;
        *out = Box::into_raw(Box::new(DpdpInstance(inst)));
        Ok(DpdpStatus::Ok)
    })
}

/// Generates a random instance. `n` counts customers for VRP and all nodes
/// otherwise; `max_window` is only used for TSPTW.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dpdp_instance_generate(
    problem: DpdpProblem,
    n: usize,
    seed: u64,
    max_window: f64,
    out: *mut *mut DpdpInstance,
) -> DpdpStatus {
    guard(|| {
        let out = out_arg(out)?;
        let inst = match problem {
            DpdpProblem::Tsp => generate_tsp(n, seed),
            DpdpProblem::Vrp => generate_vrp(n, seed),
            DpdpProblem::Tsptw => generate_tsptw(n, seed, max_window),
        }
        .map_err(from_lib)?;
        *out = Box::into_raw(Box::new(DpdpInstance(inst)));
        Ok(DpdpStatus::Ok)
    })
}

/// Number of nodes, depot included; 0 for a null handle.
///
/// # Safety
/// `instance` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dpdp_instance_len(instance: *const DpdpInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.0.len())
}

/// # Safety
/// `instance` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dpdp_instance_problem(instance: *const DpdpInstance) -> DpdpProblem {
    match (*instance).0.kind() {
        ProblemKind::Tsp => DpdpProblem::Tsp,
        ProblemKind::Vrp => DpdpProblem::Vrp,
        ProblemKind::Tsptw => DpdpProblem::Tsptw,
    }
}

/// # Safety
/// `instance` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dpdp_instance_free(instance: *mut DpdpInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Reads a dense or sparse heatmap file for an `n`-node instance.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dpdp_heatmap_read(path: *const c_char, n: usize, out: *mut *mut DpdpHeatmap) -> DpdpStatus {
    guard(|| {
        let out = out_arg(out)?;
        let h = Heatmap::read(path_arg(path)?, n).map_err(from_lib)?;
        *out = Box::into_raw(Box::new(DpdpHeatmap(h)));
        Ok(DpdpStatus::Ok)
    })
}

/// # Safety
/// `heatmap` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dpdp_heatmap_free(heatmap: *mut DpdpHeatmap) {
    if !heatmap.is_null() {
        drop(Box::from_raw(heatmap));
    }
}

/// Solves `instance`. `heatmap` may be null to use the cost heuristic and
/// `config` may be null for the defaults. Returns `NoSolution` (with `*out`
/// null) when no feasible solution was found.
///
/// # Safety
/// Handles must be live; `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dpdp_solve(
    instance: *const DpdpInstance,
    heatmap: *const DpdpHeatmap,
    config: *const DpdpConfig,
    out: *mut *mut DpdpSolution,
) -> DpdpStatus {
    guard(|| {
        let out = out_arg(out)?;
        let inst = handle(instance, "instance")?;
        let heat = heatmap.as_ref().map(|h| &h.0);
        let config = to_config(&config.as_ref().copied().unwrap_or_else(|| dpdp_config_default()));
        let result = solve(&inst.0, heat, &config).map_err(from_lib)?;
        match result.outcome {
            Outcome::Solved(sol) => {
                *out = Box::into_raw(Box::new(DpdpSolution(sol)));
                Ok(DpdpStatus::Ok)
            }
            Outcome::NoSolution { step } => {
                set_error(format!("no feasible solution; beam emptied at step {step}"));
                Ok(DpdpStatus::NoSolution)
            }
        }
    })
}

/// Total cost; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dpdp_solution_cost(solution: *const DpdpSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.0.cost)
}

/// Copies up to `capacity` elements of `src` into `buf` and returns the
/// full length, so callers can size the buffer with a first call.
unsafe fn copy_out(src: &[usize], buf: *mut usize, capacity: usize) -> usize {
    if !buf.is_null() {
        let k = src.len().min(capacity);
        ptr::copy_nonoverlapping(src.as_ptr(), buf, k);
    }
    src.len()
}

/// Copies the action sequence into `buf` (which may be null) and returns
/// its length.
///
/// # Safety
/// `solution` must be a live handle; `buf` must hold `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn dpdp_solution_actions(solution: *const DpdpSolution, buf: *mut usize, capacity: usize) -> usize {
    match solution.as_ref() {
        Some(s) => copy_out(&s.0.actions, buf, capacity),
        None => 0,
    }
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dpdp_solution_route_count(solution: *const DpdpSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.routes.len())
}

/// Copies route `index` (depot first and last) into `buf` and returns its
/// length; 0 if `index` is out of range.
///
/// # Safety
/// `solution` must be a live handle; `buf` must hold `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn dpdp_solution_route(
    solution: *const DpdpSolution,
    index: usize,
    buf: *mut usize,
    capacity: usize,
) -> usize {
    match solution.as_ref().and_then(|s| s.0.routes.get(index)) {
        Some(r) => copy_out(r, buf, capacity),
        None => 0,
    }
}

/// # Safety
/// `solution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dpdp_solution_free(solution: *mut DpdpSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}
