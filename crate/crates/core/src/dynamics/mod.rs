//! Classical and effective equations of motion
//! `μ(x) ẍ + ½ μ'(x) ẋ² + U'(x) = 0`, with `(μ, U) = (m, V)` or `(m_eff, W)`.

pub mod rk;
pub mod spline;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::effective;
use crate::expr::EvalError;
use crate::model::Problem;
use crate::variational::{self, EffectiveTable, SolverOptions, VariationalError};
use rk::{State, StepOutcome, Tolerances};
use spline::CubicSpline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Classical,
    Effective,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Classical => "classical",
            Mode::Effective => "effective",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "classical" => Ok(Mode::Classical),
            "effective" => Ok(Mode::Effective),
            other => Err(format!(
                "unknown mode '{other}' (expected classical or effective)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Samples with adiabaticity ratio at or above this are flagged.
    pub adiabatic_threshold: f64,
    /// Grid used to tabulate effective coefficients over the domain.
    pub table_points: usize,
    pub solver: SolverOptions,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            adiabatic_threshold: 0.1,
            table_points: 2001,
            solver: SolverOptions::default(),
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    /// Energy in the mode's own mass and potential.
    pub e: f64,
    /// Adiabaticity ratio; `None` where no local width exists.
    pub r: Option<f64>,
    /// Acceleration, kept for interpolation between steps.
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub mode: Mode,
    pub samples: Vec<Sample>,
    pub adiabatic_threshold: f64,
}

impl TrajectoryRecord {
    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory has an initial sample")
    }

    /// Largest `|E(t) − E(0)|`, relative to `|E(0)|` unless that vanishes.
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.samples[0].e;
        let scale = if e0 == 0.0 { 1.0 } else { e0.abs() };
        self.samples
            .iter()
            .map(|s| (s.e - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    pub fn max_adiabaticity(&self) -> Option<f64> {
        self.samples.iter().filter_map(|s| s.r).reduce(f64::max)
    }

    pub fn flagged_samples(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.r.is_some_and(|r| r >= self.adiabatic_threshold))
            .count()
    }

    /// Position and velocity at an arbitrary time inside the record, by
    /// quintic Hermite interpolation of the stored `(x, v, a)`.
    pub fn state_at(&self, t: f64) -> Option<(f64, f64)> {
        let s = &self.samples;
        let (t0, t1) = (s[0].t, self.last().t);
        if !(t >= t0 && t <= t1) {
            return None;
        }
        let k = s.partition_point(|p| p.t <= t).clamp(1, s.len().max(2) - 1) - 1;
        if s.len() == 1 {
            return Some((s[0].x, s[0].v));
        }
        let (p, q) = (&s[k], &s[k + 1]);
        let h = q.t - p.t;
        let u = (t - p.t) / h;
        let (u2, u3) = (u * u, u * u * u);
        let (u4, u5) = (u3 * u, u3 * u2);
        let hb = [
            1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5,
            u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5,
            0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5),
            10.0 * u3 - 15.0 * u4 + 6.0 * u5,
            -4.0 * u3 + 7.0 * u4 - 3.0 * u5,
            0.5 * (u3 - 2.0 * u4 + u5),
        ];
        let db = [
            -30.0 * u2 + 60.0 * u3 - 30.0 * u4,
            1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4,
            0.5 * (2.0 * u - 9.0 * u2 + 12.0 * u3 - 5.0 * u4),
            30.0 * u2 - 60.0 * u3 + 30.0 * u4,
            -12.0 * u2 + 28.0 * u3 - 15.0 * u4,
            0.5 * (3.0 * u2 - 8.0 * u3 + 5.0 * u4),
        ];
        let c = [p.x, h * p.v, h * h * p.a, q.x, h * q.v, h * h * q.a];
        let x = c.iter().zip(&hb).map(|(a, b)| a * b).sum();
        let v = c.iter().zip(&db).map(|(a, b)| a * b).sum::<f64>() / h;
        Some((x, v))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("left domain at t={t} (x={x})")]
    LeftDomain {
        t: f64,
        x: f64,
        partial: Box<TrajectoryRecord>,
    },
    #[error("effective coefficients unavailable on orbit (flagged points) at t={t} (x={x})")]
    CoefficientsUnavailable {
        t: f64,
        x: f64,
        partial: Box<TrajectoryRecord>,
    },
    #[error("effective coefficients unavailable at x0={x0} (flagged points)")]
    StartUnavailable { x0: f64 },
    #[error("step-size underflow at t={t} (h={h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
    #[error("initial position {0} outside the domain")]
    StartOutsideDomain(f64),
    #[error("invalid integration request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Variational(#[from] VariationalError),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

/// Interpolated effective coefficients over the contiguous run of solvable
/// table points around a starting position.
#[derive(Debug, Clone)]
pub struct EffectiveCoefficients {
    w: CubicSpline,
    m_eff: CubicSpline,
    omega: CubicSpline,
    a2: CubicSpline,
    /// Whether each end of the run is bounded by flagged points rather than
    /// by the end of the table.
    flagged_ends: (bool, bool),
}

impl EffectiveCoefficients {
    pub fn from_table(table: &EffectiveTable, x0: f64) -> Result<Self> {
        let rows = &table.rows;
        if rows.is_empty() {
            return Err(DynamicsError::StartUnavailable { x0 });
        }
        // run containing x0: the grid interval around x0 must have both ends solved
        let k = rows.partition_point(|r| r.x <= x0).clamp(1, rows.len()) - 1;
        let anchor = if rows[k].valid() {
            k
        } else if k + 1 < rows.len() && rows[k + 1].valid() && rows[k + 1].x == x0 {
            k + 1
        } else {
            return Err(DynamicsError::StartUnavailable { x0 });
        };
        let mut lo = anchor;
        while lo > 0 && rows[lo - 1].valid() {
            lo -= 1;
        }
        let mut hi = anchor;
        while hi + 1 < rows.len() && rows[hi + 1].valid() {
            hi += 1;
        }
        let run = &rows[lo..=hi];
        let (first, last) = (run[0].x, run[run.len() - 1].x);
        if x0 < first || x0 > last {
            return Err(DynamicsError::StartUnavailable { x0 });
        }
        let xs: Vec<f64> = run.iter().map(|r| r.x).collect();
        let col = |f: fn(&variational::SolvedRow) -> f64| -> Result<CubicSpline> {
            let ys = run
                .iter()
                .map(|r| f(r.solved.as_ref().expect("run is solved")))
                .collect();
            CubicSpline::new(xs.clone(), ys).ok_or(DynamicsError::StartUnavailable { x0 })
        };
        Ok(Self {
            w: col(|s| s.w)?,
            m_eff: col(|s| s.m_eff)?,
            omega: col(|s| s.omega_trial)?,
            a2: col(|s| s.a2)?,
            flagged_ends: (lo > 0, hi + 1 < rows.len()),
        })
    }

    pub fn range(&self) -> (f64, f64) {
        self.w.range()
    }

    pub fn potential(&self, x: f64) -> (f64, f64) {
        self.w.eval_with_slope(x)
    }

    pub fn mass(&self, x: f64) -> (f64, f64) {
        self.m_eff.eval_with_slope(x)
    }

    pub fn omega_and_width(&self, x: f64) -> (f64, f64) {
        (self.omega.eval(x), self.a2.eval(x))
    }
}

/// Returns `r = |v| / (Ω √a²)`.
pub fn adiabaticity_monitor(v: f64, omega: f64, a2: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    v.abs() / (omega * a2.sqrt())
}

enum Coefficients<'a> {
    Classical(&'a Problem),
    Effective(EffectiveCoefficients),
}

impl Coefficients<'_> {
    /// `(μ, μ', U, U')`
    fn eval(&self, x: f64) -> std::result::Result<[f64; 4], EvalError> {
        match self {
            Coefficients::Classical(p) => {
                let m = p.mass_jet(x)?;
                let v = p.potential_jet(x)?;
                Ok([m.d(0), m.d(1), v.d(0), v.d(1)])
            }
            Coefficients::Effective(c) => {
                let (mu, dmu) = c.mass(x);
                let (u, du) = c.potential(x);
                Ok([mu, dmu, u, du])
            }
        }
    }

    fn inside(&self, x: f64) -> bool {
        match self {
            Coefficients::Classical(p) => p.contains(x),
            Coefficients::Effective(c) => {
                let (lo, hi) = c.range();
                x >= lo && x <= hi
            }
        }
    }

    fn adiabaticity(&self, p: &Problem, x: f64, v: f64) -> Option<f64> {
        let (omega, a2) = match self {
            Coefficients::Classical(_) => {
                let omega = effective::omega(p, x).ok()?;
                (omega, effective::width(p, x, omega).ok()?.a2())
            }
            Coefficients::Effective(c) => c.omega_and_width(x),
        };
        Some(adiabaticity_monitor(v, omega, a2)).filter(|r| r.is_finite())
    }
}

fn acceleration(c: [f64; 4], v: f64) -> f64 {
    let [mu, dmu, _, du] = c;
    -(0.5 * dmu * v * v + du) / mu
}

/// Integrate from `(x0, v0)` at `t = 0` to `t_max`, recording every
/// accepted step.
pub fn integrate(
    p: &Problem,
    mode: Mode,
    x0: f64,
    v0: f64,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<TrajectoryRecord> {
    if !p.contains(x0) {
        return Err(DynamicsError::StartOutsideDomain(x0));
    }
    let coeffs = match mode {
        Mode::Classical => Coefficients::Classical(p),
        Mode::Effective => {
            let table = variational::tabulate(p, opts.table_points, p.kt(), &opts.solver)?;
            Coefficients::Effective(EffectiveCoefficients::from_table(&table, x0)?)
        }
    };
    run(p, coeffs, mode, x0, v0, t_max, opts)
}

/// Effective-mode integration over a precomputed table.
pub fn integrate_with_table(
    p: &Problem,
    table: &EffectiveTable,
    x0: f64,
    v0: f64,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<TrajectoryRecord> {
    let coeffs = Coefficients::Effective(EffectiveCoefficients::from_table(table, x0)?);
    run(p, coeffs, Mode::Effective, x0, v0, t_max, opts)
}

fn run(
    p: &Problem,
    coeffs: Coefficients<'_>,
    mode: Mode,
    x0: f64,
    v0: f64,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<TrajectoryRecord> {
    if !(t_max > 0.0 && t_max.is_finite()) || !v0.is_finite() {
        return Err(DynamicsError::InvalidRequest(format!(
            "need finite v0 and t_max > 0, got v0={v0}, t_max={t_max}"
        )));
    }
    if !(opts.rel_tol > 0.0 && opts.abs_tol >= 0.0) {
        return Err(DynamicsError::InvalidRequest(
            "tolerances must be positive".into(),
        ));
    }
    let tol = Tolerances {
        rel: opts.rel_tol,
        abs: opts.abs_tol,
    };
    let mut rhs = |_t: f64, y: State| -> std::result::Result<State, EvalError> {
        let c = coeffs.eval(y[0])?;
        let a = acceleration(c, y[1]);
        if a.is_finite() {
            Ok([y[1], a])
        } else {
            Err(EvalError::NonFinite { x: y[0] })
        }
    };
    let sample = |t: f64, y: State, a: f64| -> Result<Sample> {
        let c = coeffs.eval(y[0])?;
        Ok(Sample {
            t,
            x: y[0],
            v: y[1],
            e: 0.5 * c[0] * y[1] * y[1] + c[2],
            r: coeffs.adiabaticity(p, y[0], y[1]),
            a,
        })
    };

    let mut y = [x0, v0];
    let mut t = 0.0;
    let mut k1 = rhs(t, y)?;
    let mut record = TrajectoryRecord {
        mode,
        samples: vec![sample(t, y, k1[1])?],
        adiabatic_threshold: opts.adiabatic_threshold,
    };
    let mut h = rk::initial_step(&mut rhs, t, y, k1, tol).min(t_max);
    let mut steps = 0;
    while t < t_max {
        if steps >= opts.max_steps {
            return Err(DynamicsError::TooManySteps(opts.max_steps));
        }
        steps += 1;
        let last = t + h >= t_max;
        let step = if last { t_max - t } else { h };
        if step <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(DynamicsError::StepUnderflow { t, h: step });
        }
        match rk::try_step(&mut rhs, t, y, k1, step, tol) {
            StepOutcome::Accepted {
                y: yn,
                dydt,
                h_next,
            } => {
                t = if last { t_max } else { t + step };
                y = yn;
                k1 = dydt;
                h = h_next;
                if !coeffs.inside(y[0]) {
                    let partial = Box::new(record);
                    let (x, t) = (y[0], t);
                    return Err(match &coeffs {
                        Coefficients::Effective(c) if flagged_side(c, x) => {
                            DynamicsError::CoefficientsUnavailable { t, x, partial }
                        }
                        _ => DynamicsError::LeftDomain { t, x, partial },
                    });
                }
                record.samples.push(sample(t, y, k1[1])?);
            }
            StepOutcome::Rejected { h_next } => h = h_next,
            StepOutcome::Failed(e) => return Err(e.into()),
        }
    }
    Ok(record)
}

fn flagged_side(c: &EffectiveCoefficients, x: f64) -> bool {
    let (lo, _) = c.range();
    if x < lo {
        c.flagged_ends.0
    } else {
        c.flagged_ends.1
    }
}
