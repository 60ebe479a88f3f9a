//! C ABI over `effaction`.
//!
//! Problems, tables and trajectories are opaque heap handles owned by the
//! caller and released with the matching `*_free`. Every fallible call
//! returns an [`EaStatus`]; on failure a message is kept per thread and can
//! be copied out with [`ea_last_error_message`]. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use effaction::dynamics::{self, IntegratorOptions, Mode, TrajectoryRecord};
use effaction::effective;
use effaction::model::{Problem, ProblemSpec};
use effaction::variational::{self, EffectiveTable, SolverOptions};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidProblem = 4,
    InvalidArgument = 5,
    ComputationFailed = 6,
    /// Trajectory left the domain or the valid table range; the partial
    /// record is still returned.
    Clipped = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: EaStatus, msg: impl Into<String>) -> EaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn guard(f: impl FnOnce() -> EaStatus) -> EaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(EaStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, EaStatus> {
    if p.is_null() {
        return Err(fail(EaStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(EaStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, EaStatus> {
    p.as_ref()
        .ok_or_else(|| fail(EaStatus::NullPointer, format!("{what} is null")))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Validated problem definition.
pub struct EaProblem {
    inner: Problem,
}

/// Tabulated effective coefficients over a uniform grid.
pub struct EaTable {
    inner: EffectiveTable,
}

/// Recorded trajectory samples.
pub struct EaTrajectory {
    inner: TrajectoryRecord,
}

/// Self-consistent solution at one point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EaPoint {
    pub x: f64,
    pub omega_trial: f64,
    pub a2: f64,
    pub w: f64,
    pub iterations: u32,
    pub residual: f64,
    pub converged: c_int,
}

/// One table row; unavailable values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EaTableRow {
    pub x: f64,
    pub omega: f64,
    pub omega_trial: f64,
    pub a2: f64,
    pub v: f64,
    pub w: f64,
    pub m_eff: f64,
    pub valid: c_int,
}

/// One trajectory sample; `r` is NaN where the adiabaticity ratio is
/// undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EaSample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub e: f64,
    pub r: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EaMode {
    Classical = 0,
    Effective = 1,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ea_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`). Returns the full message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ea_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parse and validate a problem. `mass` and `potential` are expressions in
/// `x`; `kt = 0` selects zero temperature.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ea_problem_new(
    mass: *const c_char,
    potential: *const c_char,
    hbar: f64,
    kt: f64,
    x_lo: f64,
    x_hi: f64,
    out: *mut *mut EaProblem,
) -> EaStatus {
    guard(|| {
        if out.is_null() {
            return fail(EaStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let m = tri!(text(mass, "mass"));
        let v = tri!(text(potential, "potential"));
        let spec = match ProblemSpec::from_strings(m, v, hbar, kt, (x_lo, x_hi)) {
            Ok(s) => s,
            Err(e) => return fail(EaStatus::ParseError, e.to_string()),
        };
        match spec.validate(effaction::model::DEFAULT_PROBE_POINTS) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(EaProblem { inner: p }));
                EaStatus::Ok
            }
            Err(errs) => fail(
                EaStatus::InvalidProblem,
                errs.iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join("; "),
            ),
        }
    })
}

/// # Safety
/// `p` must be null or a handle from [`ea_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ea_problem_free(p: *mut EaProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Solve the trial frequency at `x` with default solver settings.
///
/// # Safety
/// `p` must be a live problem handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ea_solve(p: *const EaProblem, x: f64, out: *mut EaPoint) -> EaStatus {
    guard(|| {
        let p = tri!(handle(p, "problem"));
        if out.is_null() {
            return fail(EaStatus::NullPointer, "out is null");
        }
        let kt = p.inner.kt();
        match variational::solve_trial_frequency(&p.inner, x, kt, &SolverOptions::default()) {
            Ok(s) => {
                *out = EaPoint {
                    x: s.x,
                    omega_trial: s.omega_trial,
                    a2: s.a2,
                    w: s.w,
                    iterations: s.report.iterations as u32,
                    residual: s.report.final_residual,
                    converged: c_int::from(s.report.converged),
                };
                EaStatus::Ok
            }
            Err(e) => fail(EaStatus::ComputationFailed, e.to_string()),
        }
    })
}

fn scalar(
    p: *const EaProblem,
    out: *mut f64,
    f: impl FnOnce(&Problem) -> Result<f64, String>,
) -> EaStatus {
    guard(|| {
        let p = tri!(unsafe { handle(p, "problem") });
        if out.is_null() {
            return fail(EaStatus::NullPointer, "out is null");
        }
        match f(&p.inner) {
            Ok(v) => {
                unsafe { *out = v };
                EaStatus::Ok
            }
            Err(e) => fail(EaStatus::ComputationFailed, e),
        }
    })
}

/// One-loop potential `(ħ/2)·√(V''/m)` at `x`.
///
/// # Safety
/// `p` must be a live problem handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ea_one_loop_potential(
    p: *const EaProblem,
    x: f64,
    out: *mut f64,
) -> EaStatus {
    scalar(p, out, |p| {
        effective::one_loop_potential(p, x).map_err(|e| e.to_string())
    })
}

/// Quantum correction to the kinetic coefficient at `x`.
///
/// # Safety
/// `p` must be a live problem handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ea_kinetic_correction(
    p: *const EaProblem,
    x: f64,
    out: *mut f64,
) -> EaStatus {
    scalar(p, out, |p| {
        effective::kinetic_correction(p, x).map_err(|e| e.to_string())
    })
}

/// Variational potential `W(x)` at the problem's temperature.
///
/// # Safety
/// `p` must be a live problem handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ea_variational_potential(
    p: *const EaProblem,
    x: f64,
    out: *mut f64,
) -> EaStatus {
    scalar(p, out, |p| {
        variational::variational_potential(p, x, p.kt(), &SolverOptions::default())
            .map_err(|e| e.to_string())
    })
}

/// Tabulate on `points` uniform grid points (at least 2).
///
/// # Safety
/// `p` must be a live problem handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ea_table_new(
    p: *const EaProblem,
    points: usize,
    out: *mut *mut EaTable,
) -> EaStatus {
    guard(|| {
        let p = tri!(handle(p, "problem"));
        if out.is_null() {
            return fail(EaStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        if points < 2 {
            return fail(
                EaStatus::InvalidArgument,
                format!("need at least 2 points, got {points}"),
            );
        }
        match variational::tabulate(&p.inner, points, p.inner.kt(), &SolverOptions::default()) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(EaTable { inner: t }));
                EaStatus::Ok
            }
            Err(e) => fail(EaStatus::ComputationFailed, e.to_string()),
        }
    })
}

/// # Safety
/// `t` must be a live table handle.
#[no_mangle]
pub unsafe extern "C" fn ea_table_len(t: *const EaTable) -> usize {
    t.as_ref().map_or(0, |t| t.inner.rows.len())
}

/// # Safety
/// `t` must be a live table handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ea_table_row(
    t: *const EaTable,
    i: usize,
    out: *mut EaTableRow,
) -> EaStatus {
    guard(|| {
        let t = tri!(handle(t, "table"));
        if out.is_null() {
            return fail(EaStatus::NullPointer, "out is null");
        }
        let Some(r) = t.inner.rows.get(i) else {
            return fail(EaStatus::InvalidArgument, format!("row {i} out of range"));
        };
        let s = r.solved.as_ref();
        *out = EaTableRow {
            x: r.x,
            omega: r.omega.unwrap_or(f64::NAN),
            omega_trial: s.map_or(f64::NAN, |s| s.omega_trial),
            a2: s.map_or(f64::NAN, |s| s.a2),
            v: r.v,
            w: s.map_or(f64::NAN, |s| s.w),
            m_eff: s.map_or(f64::NAN, |s| s.m_eff),
            valid: c_int::from(r.valid()),
        };
        EaStatus::Ok
    })
}

/// # Safety
/// `t` must be null or a table handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ea_table_free(t: *mut EaTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Integrate from `(x0, v0)` to `t_max` with default tolerances. `mode` is
/// an [`EaMode`] value. On [`EaStatus::Clipped`] `out` still receives the
/// partial record.
///
/// # Safety
/// `p` must be a live problem handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ea_trajectory_new(
    p: *const EaProblem,
    mode: c_int,
    x0: f64,
    v0: f64,
    t_max: f64,
    out: *mut *mut EaTrajectory,
) -> EaStatus {
    guard(|| {
        let p = tri!(handle(p, "problem"));
        if out.is_null() {
            return fail(EaStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let mode = match mode {
            m if m == EaMode::Classical as c_int => Mode::Classical,
            m if m == EaMode::Effective as c_int => Mode::Effective,
            m => return fail(EaStatus::InvalidArgument, format!("unknown mode {m}")),
        };
        let wrap = |rec| Box::into_raw(Box::new(EaTrajectory { inner: rec }));
        match dynamics::integrate(&p.inner, mode, x0, v0, t_max, &IntegratorOptions::default()) {
            Ok(rec) => {
                *out = wrap(rec);
                EaStatus::Ok
            }
            Err(e) => {
                let msg = e.to_string();
                match e {
                    dynamics::DynamicsError::LeftDomain { partial, .. }
                    | dynamics::DynamicsError::CoefficientsUnavailable { partial, .. } => {
                        *out = wrap(*partial);
                        fail(EaStatus::Clipped, msg)
                    }
                    dynamics::DynamicsError::StartOutsideDomain(_)
                    | dynamics::DynamicsError::InvalidRequest(_) => {
                        fail(EaStatus::InvalidArgument, msg)
                    }
                    _ => fail(EaStatus::ComputationFailed, msg),
                }
            }
        }
    })
}

/// # Safety
/// `t` must be a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn ea_trajectory_len(t: *const EaTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.inner.samples.len())
}

/// # Safety
/// `t` must be a live trajectory handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ea_trajectory_sample(
    t: *const EaTrajectory,
    i: usize,
    out: *mut EaSample,
) -> EaStatus {
    guard(|| {
        let t = tri!(handle(t, "trajectory"));
        if out.is_null() {
            return fail(EaStatus::NullPointer, "out is null");
        }
        let Some(s) = t.inner.samples.get(i) else {
            return fail(
                EaStatus::InvalidArgument,
                format!("sample {i} out of range"),
            );
        };
        *out = EaSample {
            t: s.t,
            x: s.x,
            v: s.v,
            e: s.e,
            r: s.r.unwrap_or(f64::NAN),
        };
        EaStatus::Ok
    })
}

/// Largest relative energy drift over the record.
///
/// # Safety
/// `t` must be a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn ea_trajectory_energy_drift(t: *const EaTrajectory) -> f64 {
    t.as_ref().map_or(f64::NAN, |t| t.inner.max_energy_drift())
}

/// # Safety
/// `t` must be null or a trajectory handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ea_trajectory_free(t: *mut EaTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}
