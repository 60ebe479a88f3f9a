//! Command implementations, independent of argument parsing.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use super::config::{ConfigError, RunConfig};
use super::csv;
use crate::dynamics::{self, DynamicsError, IntegratorOptions, Mode, TrajectoryRecord};
use crate::effective::{self, SmearOptions};
use crate::model::{Problem, ValidationError};
use crate::oracle::{self, GroundStateOptions, ProbeOptions};
use crate::variational::{self, EffectiveTable};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid problem: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Problem(Vec<ValidationError>),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Computation(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{failed} of {enabled} checks failed")]
    ChecksFailed { failed: usize, enabled: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Problem(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn computation(e: impl std::fmt::Display) -> CliError {
    CliError::Computation(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    csv::write_atomic(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(config: &Path) -> Result<(RunConfig, Problem), CliError> {
    let cfg = RunConfig::load(config)?;
    let problem = cfg.problem().map_err(CliError::Problem)?;
    Ok((cfg, problem))
}

fn output_path(cli: Option<&Path>, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    cli.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| CliError::Usage("no output path: pass --out or set [output] path".into()))
}

pub struct TabulateSummary {
    pub points: usize,
    pub flagged: usize,
    pub path: PathBuf,
}

pub fn run_tabulate(
    cfg: &RunConfig,
    p: &Problem,
    grid: Option<usize>,
    out: Option<&Path>,
    diag: &mut dyn Write,
) -> Result<TabulateSummary, CliError> {
    let grid = grid.unwrap_or(cfg.grid_points);
    if grid == 0 {
        return Err(CliError::Usage("--grid must be positive".into()));
    }
    let path = output_path(out, cfg)?;
    let table = variational::tabulate(p, grid, p.kt(), &cfg.solver).map_err(computation)?;
    write_file(&path, &csv::table(&table))?;
    let flagged = table.invalid_count();
    let _ = writeln!(diag, "tabulated {grid} points to {}", path.display());
    let _ = writeln!(diag, "m_eff: {}", EffectiveTable::SLOPE_METHOD);
    if flagged > 0 {
        let _ = writeln!(
            diag,
            "warning: {flagged} of {grid} points flagged (no self-consistent trial frequency)"
        );
    }
    Ok(TabulateSummary {
        points: grid,
        flagged,
        path,
    })
}

pub fn integrator_options(cfg: &RunConfig) -> IntegratorOptions {
    IntegratorOptions {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        table_points: cfg.grid_points,
        solver: cfg.solver,
        ..Default::default()
    }
}

fn summarize(rec: &TrajectoryRecord, diag: &mut dyn Write) {
    let r = rec
        .max_adiabaticity()
        .map(csv::number)
        .unwrap_or_else(|| "n/a".into());
    let _ = writeln!(
        diag,
        "{} trajectory: {} samples, max energy drift {:.3e}, max adiabaticity {r}, {} samples with r >= {}",
        rec.mode,
        rec.samples.len(),
        rec.max_energy_drift(),
        rec.flagged_samples(),
        rec.adiabatic_threshold
    );
}

#[allow(clippy::too_many_arguments)]
pub fn run_trajectory(
    cfg: &RunConfig,
    p: &Problem,
    mode: Mode,
    x0: f64,
    v0: f64,
    t_max: f64,
    out: Option<&Path>,
    diag: &mut dyn Write,
) -> Result<TrajectoryRecord, CliError> {
    let path = output_path(out, cfg)?;
    match dynamics::integrate(p, mode, x0, v0, t_max, &integrator_options(cfg)) {
        Ok(rec) => {
            write_file(&path, &csv::trajectory(&rec))?;
            summarize(&rec, diag);
            Ok(rec)
        }
        Err(
            e @ (DynamicsError::LeftDomain { .. } | DynamicsError::CoefficientsUnavailable { .. }),
        ) => {
            // keep the clipped part of the orbit
            if let DynamicsError::LeftDomain { partial, .. }
            | DynamicsError::CoefficientsUnavailable { partial, .. } = &e
            {
                write_file(&path, &csv::trajectory(partial))?;
                summarize(partial, diag);
                let _ = writeln!(
                    diag,
                    "trajectory clipped; partial record written to {}",
                    path.display()
                );
            }
            Err(computation(e))
        }
        Err(e @ (DynamicsError::StartOutsideDomain(_) | DynamicsError::InvalidRequest(_))) => {
            Err(CliError::Usage(e.to_string()))
        }
        Err(e) => Err(computation(e)),
    }
}

pub fn run_solve(
    cfg: &RunConfig,
    p: &Problem,
    x: f64,
    out: &mut dyn Write,
    diag: &mut dyn Write,
) -> Result<(), CliError> {
    if !p.contains(x) {
        return Err(CliError::Usage(format!("--at {x} lies outside the domain")));
    }
    let pt = variational::solve_trial_frequency(p, x, p.kt(), &cfg.solver).map_err(computation)?;
    let _ = writeln!(diag, "{}", csv::POINT_HEADER);
    let _ = writeln!(out, "{}", csv::point(&pt));
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub note: String,
}

impl Check {
    fn measured(
        name: &'static str,
        residual: f64,
        tolerance: f64,
        note: impl Into<String>,
    ) -> Self {
        Check {
            name,
            status: if residual <= tolerance {
                Status::Pass
            } else {
                Status::Fail
            },
            residual: Some(residual),
            tolerance: Some(tolerance),
            note: note.into(),
        }
    }

    fn skipped(name: &'static str, note: impl Into<String>) -> Self {
        Check {
            name,
            status: Status::Skip,
            residual: None,
            tolerance: None,
            note: note.into(),
        }
    }

    fn failed(name: &'static str, note: impl Into<String>) -> Self {
        Check {
            name,
            status: Status::Fail,
            residual: None,
            tolerance: None,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failed(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .count()
    }

    pub fn enabled(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status != Status::Skip)
            .count()
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "{:<24} {:<6} {:>12} {:>10}  note\n",
            "check", "status", "residual", "tolerance"
        );
        for c in &self.checks {
            let res = c
                .residual
                .map(|r| format!("{r:.3e}"))
                .unwrap_or_else(|| "-".into());
            let tol = c
                .tolerance
                .map(|r| format!("{r:.0e}"))
                .unwrap_or_else(|| "-".into());
            s.push_str(&format!(
                "{:<24} {:<6} {:>12} {:>10}  {}\n",
                c.name,
                c.status.label(),
                res,
                tol,
                c.note
            ));
        }
        s
    }
}

/// Interior probe positions where the curvature is positive.
fn stable_points(p: &Problem, n: usize) -> Vec<f64> {
    let (lo, hi) = p.domain();
    let pad = 0.05 * (hi - lo);
    (0..n)
        .map(|i| lo + pad + (hi - lo - 2.0 * pad) * i as f64 / (n - 1) as f64)
        .filter(|&x| p.potential_jet(x).map(|j| j.d(2) > 0.0).unwrap_or(false))
        .collect()
}

fn richardson(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

fn check_gradient(p: &Problem) -> Check {
    const NAME: &str = "gradient consistency";
    let pts = stable_points(p, 21);
    if pts.is_empty() {
        return Check::skipped(NAME, "no probe point with V'' > 0");
    }
    let span = p.domain().1 - p.domain().0;
    let mut worst: f64 = 0.0;
    for &x in &pts {
        let h = 1e-3 * span;
        let v = |dx: f64| effective::one_loop_potential(p, x + dx);
        let (Ok(g), Ok(v0)) = (effective::one_loop_gradient(p, x), v(0.0)) else {
            return Check::failed(NAME, format!("evaluation failed at x={x}"));
        };
        if v(h).is_err() || v(-h).is_err() {
            continue;
        }
        let fd = richardson(|dx| v(dx).unwrap_or(f64::NAN), h);
        worst = worst.max((g - fd).abs() / g.abs().max(1e-6 * v0.abs()).max(f64::MIN_POSITIVE));
    }
    Check::measured(NAME, worst, 1e-6, format!("{} points", pts.len()))
}

fn check_heat_equation(p: &Problem, smear: SmearOptions) -> Check {
    const NAME: &str = "heat-equation identity";
    let (lo, hi) = p.domain();
    let mut worst: f64 = 0.0;
    for i in 0..11 {
        let x = lo + (hi - lo) * (i as f64 + 0.5) / 11.0;
        for a2 in [0.01, 0.1] {
            let val = |d: f64| effective::smeared_jet(p, x, a2 + d, smear).map(|j| j.value());
            let rhs = match effective::smeared_jet(p, x, a2, smear) {
                Ok(j) => 0.5 * j.d(2),
                Err(e) => return Check::failed(NAME, e.to_string()),
            };
            if let Err(e) = val(0.02 * a2).and(val(-0.02 * a2)) {
                return Check::failed(NAME, e.to_string());
            }
            let lhs = richardson(|d| val(d).unwrap_or(f64::NAN), 0.02 * a2);
            worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
        }
    }
    let how = if p.potential_polynomial().is_some() {
        "closed form"
    } else {
        "quadrature"
    };
    Check::measured(NAME, worst, 1e-8, format!("11 points x 2 widths, {how}"))
}

fn check_frequency_integrals(p: &Problem) -> Check {
    const NAME: &str = "frequency integrals";
    let (lo, hi) = p.domain();
    let x = 0.5 * (lo + hi);
    let (Ok(m), Ok(v)) = (p.mass(x), p.potential_jet(x)) else {
        return Check::failed(NAME, "coefficients not evaluable at the domain midpoint");
    };
    let v2 = if v.d(2) != 0.0 { v.d(2).abs() } else { 1.0 };
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for pe in [0u32, 2, 4] {
        for q in 1u32..=3 {
            if 2 * q <= pe + 1 {
                continue;
            }
            match oracle::frequency_integral(pe, q, m, v2) {
                Ok(r) => worst = worst.max(r.relative_difference()),
                Err(e) => return Check::failed(NAME, e.to_string()),
            }
            count += 1;
        }
    }
    Check::measured(
        NAME,
        worst,
        1e-8,
        format!("{count} (p,q) pairs at m={m}, v2={v2}"),
    )
}

fn check_slope(p: &Problem) -> Check {
    const NAME: &str = "one-loop slope";
    let pts = stable_points(p, 21);
    if pts.is_empty() {
        return Check::skipped(NAME, "no probe point with V'' > 0");
    }
    let mut worst: f64 = 0.0;
    for &x in &pts {
        match oracle::one_loop_energy_slope_check(p, x) {
            Ok(c) => worst = worst.max(c.residual),
            Err(e) => return Check::failed(NAME, e.to_string()),
        }
    }
    Check::measured(NAME, worst, 1e-8, format!("{} points", pts.len()))
}

/// `ω₀` when the spec is a constant-mass quadratic well.
fn harmonic_frequency(p: &Problem) -> Option<f64> {
    let m = p.constant_mass()?;
    let poly = p.potential_polynomial()?;
    let c = poly.coefficients();
    (poly.degree() == 2 && c[2] > 0.0).then(|| (2.0 * c[2] / m).sqrt())
}

fn check_harmonic(p: &Problem, table: Option<&EffectiveTable>) -> Check {
    const NAME: &str = "harmonic exactness";
    let Some(w0) = harmonic_frequency(p) else {
        return Check::skipped(NAME, "spec is not a constant-mass quadratic well");
    };
    let Some(table) = table else {
        return Check::failed(NAME, "tabulation failed");
    };
    let m = p.constant_mass().expect("checked");
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for r in &table.rows {
        let Some(s) = &r.solved else {
            return Check::failed(NAME, format!("unsolved point x={}", r.x));
        };
        worst = worst
            .max(rel(s.omega_trial, w0))
            .max(rel(s.w, r.v + 0.5 * p.hbar() * w0))
            .max(rel(s.m_eff, m));
    }
    Check::measured(
        NAME,
        worst,
        1e-10,
        format!("omega0={w0}, {} points", table.rows.len()),
    )
}

fn check_ground_state(p: &Problem, table: Option<&EffectiveTable>) -> Check {
    const NAME: &str = "variational vs E0";
    if p.constant_mass().is_none() {
        return Check::skipped(NAME, "position-dependent mass");
    }
    if p.kt() > 0.0 {
        return Check::skipped(NAME, "kT > 0");
    }
    let Some(table) = table else {
        return Check::failed(NAME, "tabulation failed");
    };
    let Some(w_min) = table
        .rows
        .iter()
        .filter_map(|r| r.solved.map(|s| s.w))
        .reduce(f64::min)
    else {
        return Check::failed(NAME, "no solved point");
    };
    let (lo, hi) = p.domain();
    match oracle::ground_state_energy(p, lo, hi, &GroundStateOptions::default()) {
        Ok(gs) => Check::measured(
            NAME,
            (w_min - gs.energy).abs() / gs.energy.abs(),
            0.05,
            format!(
                "W_min={w_min:.10}, E0={:.10} (+/- {:.1e})",
                gs.energy, gs.convergence_estimate
            ),
        ),
        Err(e) => Check::failed(NAME, e.to_string()),
    }
}

fn check_z_probe(p: &Problem, table: Option<&EffectiveTable>) -> Check {
    const NAME: &str = "kinetic probe";
    if p.kt() > 0.0 {
        return Check::skipped(NAME, "T>0 unsupported by probe");
    }
    // probe at the stable minimum of V on the grid, or the midpoint
    let x0 = table
        .and_then(|t| {
            t.rows
                .iter()
                .filter(|r| r.omega.is_some())
                .min_by(|a, b| a.v.total_cmp(&b.v))
                .map(|r| r.x)
        })
        .unwrap_or(0.5 * (p.domain().0 + p.domain().1));
    match oracle::fluctuation_determinant_z_probe(p, x0, &ProbeOptions::default()) {
        Ok(z) => {
            if let Some(w0) = harmonic_frequency(p) {
                let m = p.constant_mass().expect("checked");
                Check::measured(
                    NAME,
                    z.z.abs(),
                    1e-4 * m * p.hbar() / w0,
                    format!("null case at x0={x0}"),
                )
            } else {
                let omega = effective::omega(p, x0).unwrap_or(f64::NAN);
                let floor = 1e-4 * p.mass(x0).unwrap_or(f64::NAN) * p.hbar() / omega;
                let rel =
                    (z.z - z.kinetic_correction).abs() / z.kinetic_correction.abs().max(floor);
                let verdict = if rel <= 0.02 {
                    "agrees"
                } else {
                    "disagrees (reported)"
                };
                Check {
                    name: NAME,
                    status: Status::Pass,
                    residual: Some(rel),
                    tolerance: Some(0.02),
                    note: format!(
                        "x0={x0}: probe {:.6} vs canonical {:.6}, {verdict}; n_steps doubling change {:.2e}",
                        z.z, z.kinetic_correction, z.resolution_change
                    ),
                }
            }
        }
        Err(e) => Check::failed(NAME, e.to_string()),
    }
}

pub fn validate(cfg: &RunConfig, p: &Problem, z_probe: bool) -> ValidationReport {
    let table = variational::tabulate(p, 101, p.kt(), &cfg.solver).ok();
    let table = table.as_ref();
    let smear = cfg.solver.smear;
    type Job<'a> = Box<dyn Fn() -> Check + Send + Sync + 'a>;
    let mut jobs: Vec<Job<'_>> = vec![
        Box::new(|| check_gradient(p)),
        Box::new(move || check_heat_equation(p, smear)),
        Box::new(|| check_frequency_integrals(p)),
        Box::new(|| check_slope(p)),
        Box::new(|| check_harmonic(p, table)),
        Box::new(|| check_ground_state(p, table)),
    ];
    if z_probe {
        jobs.push(Box::new(|| check_z_probe(p, table)));
    } else {
        jobs.push(Box::new(|| {
            Check::skipped("kinetic probe", "not requested (--z-probe)")
        }));
    }
    ValidationReport {
        checks: jobs.par_iter().map(|j| j()).collect(),
    }
}

pub fn run_validate(
    cfg: &RunConfig,
    p: &Problem,
    z_probe: bool,
    out: &mut dyn Write,
) -> Result<ValidationReport, CliError> {
    let report = validate(cfg, p, z_probe);
    let _ = write!(out, "{}", report.render());
    match report.failed() {
        0 => Ok(report),
        failed => Err(CliError::ChecksFailed {
            failed,
            enabled: report.enabled(),
        }),
    }
}
