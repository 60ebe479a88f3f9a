//! Self-consistent trial frequency and the variational effective potential.
//!
//! At each position the trial frequency `Ω` solves
//! `Ω² = (1/m) ∂²_x V_{a²}(x)` with `a² = a²(Ω)` (quantum or thermal width),
//! the derivative being taken before the width is substituted. The
//! variational potential is `W = ħΩ/2 − ½ m Ω² a² + V_{a²}`.

use rayon::prelude::*;
use thiserror::Error;

use crate::effective::{
    self, kinetic_correction_from, smeared_jet, thermal_factor, EffectiveError, SmearOptions,
};
use crate::expr::Jet4;
use crate::model::{probe_grid, Problem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative tolerance on the fixed-point residual `|F(Ω²) − Ω²| / Ω²`.
    pub tolerance: f64,
    pub damping: f64,
    pub max_iter: usize,
    pub smear: SmearOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            damping: 0.5,
            max_iter: 500,
            smear: SmearOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    DampedIteration,
    BracketedRoot,
}

impl SolveMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolveMethod::DampedIteration => "damped-iteration",
            SolveMethod::BracketedRoot => "bracketed-root",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub method: SolveMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfConsistentPoint {
    pub x: f64,
    pub omega_trial: f64,
    pub a2: f64,
    pub w: f64,
    pub report: SolverReport,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariationalError {
    #[error("no positive fixed point at x={x}")]
    NoPositiveFixedPoint { x: f64 },
    #[error("non-convergent fixed point at x={x} ({} iterations, residual {:e}, {})", .report.iterations, .report.final_residual, .report.method.name())]
    NonConvergent { x: f64, report: SolverReport },
    #[error(transparent)]
    Effective(#[from] EffectiveError),
    #[error("no grid point admits a self-consistent trial frequency")]
    NoSolvablePoint,
}

impl From<crate::expr::EvalError> for VariationalError {
    fn from(e: crate::expr::EvalError) -> Self {
        VariationalError::Effective(e.into())
    }
}

pub type Result<T> = std::result::Result<T, VariationalError>;

/// Everything the fixed-point map needs at one position.
struct FixedPointMap<'a> {
    p: &'a Problem,
    x: f64,
    kt: f64,
    m: Jet4,
    smear: SmearOptions,
}

struct MapValue {
    f: f64,
    a2: f64,
    smeared: Jet4,
}

impl<'a> FixedPointMap<'a> {
    fn new(p: &'a Problem, x: f64, kt: f64, smear: SmearOptions) -> Result<Self> {
        if !(kt >= 0.0) {
            return Err(EffectiveError::NegativeTemperature(kt).into());
        }
        Ok(Self {
            p,
            x,
            kt,
            m: p.mass_jet(x)?,
            smear,
        })
    }

    fn width(&self, omega: f64) -> Result<f64> {
        Ok(effective::width_thermal(self.p, self.x, omega, self.kt)?.a2())
    }

    /// `∂a²/∂Ω` at fixed `x`.
    fn width_slope(&self, omega: f64, a2: f64) -> f64 {
        if self.kt == 0.0 {
            return -a2 / omega;
        }
        let hbar = self.p.hbar();
        let y = hbar * omega / (2.0 * self.kt);
        let (_, dh) = thermal_factor(y);
        -a2 / omega + hbar / (2.0 * self.m.value() * omega) * dh * hbar / (2.0 * self.kt)
    }

    fn eval(&self, s: f64) -> Result<MapValue> {
        let a2 = self.width(s.sqrt())?;
        let smeared = smeared_jet(self.p, self.x, a2, self.smear)?;
        Ok(MapValue {
            f: smeared.d(2) / self.m.value(),
            a2,
            smeared,
        })
    }
}

/// Solve the trial-frequency fixed point at `x` for thermal energy `kt`.
pub fn solve_trial_frequency(
    p: &Problem,
    x: f64,
    kt: f64,
    opts: &SolverOptions,
) -> Result<SelfConsistentPoint> {
    let map = FixedPointMap::new(p, x, kt, opts.smear)?;
    let (s, report) = fixed_point(&map, opts)?;
    let omega = s.sqrt();
    let val = map.eval(s)?;
    let m = map.m.value();
    let w = 0.5 * p.hbar() * omega - 0.5 * m * s * val.a2 + val.smeared.value();
    Ok(SelfConsistentPoint {
        x,
        omega_trial: omega,
        a2: val.a2,
        w,
        report,
    })
}

fn fixed_point(map: &FixedPointMap<'_>, opts: &SolverOptions) -> Result<(f64, SolverReport)> {
    let m = map.m.value();
    let v2 = map.p.potential_jet(map.x)?.d(2);
    let seed = v2.abs() / m;
    let lambda = opts.damping;

    if seed > 0.0 && seed.is_finite() {
        let mut s = seed;
        let mut last = f64::INFINITY;
        let mut growing = 0;
        for k in 1..=opts.max_iter {
            let f = match map.eval(s) {
                Ok(v) => v.f,
                Err(_) => break,
            };
            let res = (f - s).abs() / s;
            if res <= opts.tolerance {
                let report = SolverReport {
                    iterations: k,
                    final_residual: res,
                    converged: true,
                    method: SolveMethod::DampedIteration,
                };
                return Ok((s, report));
            }
            growing = if res >= last { growing + 1 } else { 0 };
            if growing >= 5 {
                break;
            }
            last = res;
            let next = (1.0 - lambda) * s + lambda * f;
            if !(next > 0.0 && next.is_finite()) {
                break;
            }
            s = next;
        }
    }
    bracketed(map, opts, seed)
}

fn bracketed(
    map: &FixedPointMap<'_>,
    opts: &SolverOptions,
    seed: f64,
) -> Result<(f64, SolverReport)> {
    let x = map.x;
    let g = |s: f64| map.eval(s).map(|v| s - v.f);

    // Scan a geometric ladder from the degenerate-curvature floor upwards and
    // keep the sign change closest (in log scale) to the curvature seed.
    let mut samples = Vec::new();
    let mut s = 1e-8;
    while s < 1e12 {
        if let Ok(gv) = g(s) {
            if gv.is_finite() {
                samples.push((s, gv));
            }
        }
        s *= 2.0;
    }
    let target = if seed > 0.0 { seed.ln() } else { 0.0 };
    let bracket = samples
        .windows(2)
        .filter(|w| w[0].1 <= 0.0 && w[1].1 > 0.0)
        .min_by(|a, b| {
            let da = (a[0].0.ln() - target).abs();
            let db = (b[0].0.ln() - target).abs();
            da.total_cmp(&db)
        })
        .map(|w| (w[0], w[1]));
    let ((mut lo, mut glo), (mut hi, mut ghi)) = match bracket {
        Some(b) => b,
        None => return Err(VariationalError::NoPositiveFixedPoint { x }),
    };
    if glo == 0.0 {
        hi = lo;
        ghi = 0.0;
    }

    // Illinois regula falsi
    let mut side = 0i8;
    let mut iterations = 0;
    let mut best = if glo.abs() < ghi.abs() {
        (lo, glo)
    } else {
        (hi, ghi)
    };
    while iterations < opts.max_iter {
        if (best.1 / best.0).abs() <= opts.tolerance {
            break;
        }
        iterations += 1;
        let mut c = (lo * ghi - hi * glo) / (ghi - glo);
        if !(c > lo && c < hi) {
            c = 0.5 * (lo + hi);
        }
        let gc = g(c)?;
        if gc.abs() < best.1.abs() {
            best = (c, gc);
        }
        if gc > 0.0 {
            hi = c;
            ghi = gc;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        } else {
            lo = c;
            glo = gc;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        }
        if (hi - lo) <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let (s, gs) = best;
    let residual = (gs / s).abs();
    let report = SolverReport {
        iterations,
        final_residual: residual,
        converged: residual <= opts.tolerance,
        method: SolveMethod::BracketedRoot,
    };
    if report.converged {
        Ok((s, report))
    } else {
        Err(VariationalError::NonConvergent { x, report })
    }
}

/// Variational effective potential `W(x)` at thermal energy `kt`.
pub fn variational_potential(p: &Problem, x: f64, kt: f64, opts: &SolverOptions) -> Result<f64> {
    solve_trial_frequency(p, x, kt, opts).map(|pt| pt.w)
}

/// Slopes along `x` of the solved trial frequency and of `W`, by implicit
/// differentiation of the fixed-point equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSlopes {
    pub omega_slope: f64,
    pub w_slope: f64,
}

pub fn trial_slopes(
    p: &Problem,
    point: &SelfConsistentPoint,
    kt: f64,
    opts: &SolverOptions,
) -> Result<TrialSlopes> {
    let map = FixedPointMap::new(p, point.x, kt, opts.smear)?;
    let omega = point.omega_trial;
    let s = omega * omega;
    let val = map.eval(s)?;
    let (m, m1) = (map.m.d(0), map.m.d(1));
    let (s1, s2, s3, s4) = (
        val.smeared.d(1),
        val.smeared.d(2),
        val.smeared.d(3),
        val.smeared.d(4),
    );
    let a2 = val.a2;
    let da2_dx = -a2 * m1 / m;
    let da2_ds = map.width_slope(omega, a2) / (2.0 * omega);

    // ∂_{a²} of the smeared curvature is half the next-but-one derivative
    let df_dx = (s3 + 0.5 * s4 * da2_dx) / m - val.f * m1 / m;
    let df_ds = 0.5 * s4 * da2_ds / m;
    let ds_dx = df_dx / (1.0 - df_ds);

    let dw_dx = s1 - 0.5 * s2 * a2 * m1 / m;
    let dw_ds = p.hbar() / (4.0 * omega) - 0.5 * m * a2 + 0.5 * (s2 - m * s) * da2_ds;
    Ok(TrialSlopes {
        omega_slope: ds_dx / (2.0 * omega),
        w_slope: dw_dx + dw_ds * ds_dx,
    })
}

/// Effective mass with the kinetic correction evaluated on the trial
/// frequency: `V'' → mΩ²`, `V''' → (mΩ²)'`.
pub fn trial_effective_mass(p: &Problem, x: f64, omega: f64, omega_slope: f64) -> Result<f64> {
    let mj = p.mass_jet(x)?;
    let (m, m1, m2) = (mj.d(0), mj.d(1), mj.d(2));
    let d2 = m * omega * omega;
    let d3 = m1 * omega * omega + 2.0 * m * omega * omega_slope;
    Ok(m + kinetic_correction_from(p.hbar(), [m, m1, m2], d2, d3))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolvedRow {
    pub omega_trial: f64,
    pub a2: f64,
    pub w: f64,
    pub m_eff: f64,
    pub omega_slope: f64,
    pub w_slope: f64,
    pub report: SolverReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub x: f64,
    pub v: f64,
    /// Local frequency; `None` where `V'' <= 0`.
    pub omega: Option<f64>,
    /// `None` where the fixed point could not be solved.
    pub solved: Option<SolvedRow>,
}

impl TableRow {
    pub fn valid(&self) -> bool {
        self.solved.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveTable {
    pub kt: f64,
    pub rows: Vec<TableRow>,
}

impl EffectiveTable {
    /// How `Ω'` entering the effective mass is obtained.
    pub const SLOPE_METHOD: &'static str =
        "Omega' from implicit differentiation of the solved fixed point";

    pub fn invalid_count(&self) -> usize {
        self.rows.iter().filter(|r| !r.valid()).count()
    }
}

fn tabulate_point(p: &Problem, x: f64, kt: f64, opts: &SolverOptions) -> Result<TableRow> {
    let v = p.potential(x)?;
    let omega = effective::omega(p, x).ok();
    let solved = solve_trial_frequency(p, x, kt, opts).and_then(|pt| {
        let slopes = trial_slopes(p, &pt, kt, opts)?;
        let m_eff = trial_effective_mass(p, x, pt.omega_trial, slopes.omega_slope)?;
        Ok(SolvedRow {
            omega_trial: pt.omega_trial,
            a2: pt.a2,
            w: pt.w,
            m_eff,
            omega_slope: slopes.omega_slope,
            w_slope: slopes.w_slope,
            report: pt.report,
        })
    });
    Ok(TableRow {
        x,
        v,
        omega,
        solved: solved
            .ok()
            .filter(|s| s.m_eff.is_finite() && s.w.is_finite()),
    })
}

/// Solve every point of a uniform grid over the problem domain.
/// Unsolvable points are flagged, not fatal.
pub fn tabulate(p: &Problem, grid: usize, kt: f64, opts: &SolverOptions) -> Result<EffectiveTable> {
    let (lo, hi) = p.domain();
    let xs: Vec<f64> = probe_grid(lo, hi, grid).collect();
    let rows = xs
        .par_iter()
        .map(|&x| tabulate_point(p, x, kt, opts))
        .collect::<Result<Vec<_>>>()?;
    if rows.iter().all(|r| !r.valid()) {
        return Err(VariationalError::NoSolvablePoint);
    }
    Ok(EffectiveTable { kt, rows })
}
