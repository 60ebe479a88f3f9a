//! Derivative-expansion quantities at a point: local frequency, the one-loop
//! potential and its gradient, the kinetic correction, both effective-mass
//! forms, Gaussian smearing of the potential and the fluctuation widths.

use thiserror::Error;

use crate::expr::{EvalError, Jet4};
use crate::model::Problem;
use crate::quadrature::GaussHermite;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EffectiveError {
    #[error("locally unstable: no real frequency at x={x} (V''={curvature})")]
    Unstable { x: f64, curvature: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("smearing quadrature did not converge at x={x}, a2={a2}: {low} vs {high}")]
    QuadratureNonConvergence {
        x: f64,
        a2: f64,
        low: f64,
        high: f64,
    },
    #[error("trial frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("width must be non-negative, got {0}")]
    NegativeWidth(f64),
    #[error("thermal energy must be non-negative, got {0}")]
    NegativeTemperature(f64),
}

pub type Result<T> = std::result::Result<T, EffectiveError>;

/// Local inputs shared by all formulas: mass and potential jets at `x`.
#[derive(Debug, Clone, Copy)]
struct Local {
    x: f64,
    m: Jet4,
    v: Jet4,
}

impl Local {
    fn at(p: &Problem, x: f64) -> Result<Self> {
        Ok(Self {
            x,
            m: p.mass_jet(x)?,
            v: p.potential_jet(x)?,
        })
    }

    fn curvature(&self) -> Result<f64> {
        let v2 = self.v.d(2);
        if v2 > 0.0 {
            Ok(v2)
        } else {
            Err(EffectiveError::Unstable {
                x: self.x,
                curvature: v2,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoefficients {
    pub x: f64,
    pub omega: f64,
    pub v1: f64,
    pub z: f64,
    pub m_eff_vm: f64,
    pub m_eff_omega: f64,
}

/// Fluctuation width `a²` (mean-square deviation from the background).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Width(f64);

impl Width {
    pub fn a2(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassForm {
    /// `m + Z` with the kinetic correction written in terms of V'', V''', m, m', m''.
    Vm,
    /// Equivalent-looking form written through ω and ω'.
    OmegaForm,
}

pub fn omega(p: &Problem, x: f64) -> Result<f64> {
    let l = Local::at(p, x)?;
    Ok((l.curvature()? / l.m.value()).sqrt())
}

/// Local frequency with its first two derivatives along `x`.
pub fn omega_jet(p: &Problem, x: f64) -> Result<[f64; 3]> {
    let l = Local::at(p, x)?;
    let v2 = l.curvature()?;
    let (m, m1, m2) = (l.m.d(0), l.m.d(1), l.m.d(2));
    let (v3, v4) = (l.v.d(3), l.v.d(4));
    let u = v2 / m;
    let u1 = v3 / m - v2 * m1 / (m * m);
    let u2 =
        v4 / m - 2.0 * v3 * m1 / (m * m) - v2 * m2 / (m * m) + 2.0 * v2 * m1 * m1 / (m * m * m);
    let w = u.sqrt();
    Ok([
        w,
        u1 / (2.0 * w),
        u2 / (2.0 * w) - u1 * u1 / (4.0 * w * w * w),
    ])
}

/// `(ħ/2) sqrt(V''/m)` from scalar inputs.
pub fn one_loop_potential_from(hbar: f64, m: f64, v2: f64) -> f64 {
    0.5 * hbar * (v2 / m).sqrt()
}

pub fn one_loop_potential(p: &Problem, x: f64) -> Result<f64> {
    let l = Local::at(p, x)?;
    Ok(one_loop_potential_from(
        p.hbar(),
        l.m.value(),
        l.curvature()?,
    ))
}

pub fn one_loop_gradient(p: &Problem, x: f64) -> Result<f64> {
    let l = Local::at(p, x)?;
    let v2 = l.curvature()?;
    let (m, m1) = (l.m.d(0), l.m.d(1));
    let v3 = l.v.d(3);
    Ok(-0.25 * p.hbar() * (m1 * v2.sqrt() / m.powf(1.5) - v3 / (m * v2).sqrt()))
}

/// Kinetic correction from mass derivatives `[m, m', m'']` and the
/// potential's second and third derivatives.
pub fn kinetic_correction_from(hbar: f64, mass: [f64; 3], v2: f64, v3: f64) -> f64 {
    let [m, m1, m2] = mass;
    let sm = m.sqrt();
    let sv = v2.sqrt();
    hbar / 32.0 * v3 * v3 * sm / (v2 * v2 * sv)
        - 5.0 * hbar / 16.0 * m1 * v3 / (sm * v2 * sv)
        - 11.0 * hbar / 32.0 * m1 * m1 / (m * sm * sv)
        + hbar / 4.0 * m2 / (sm * sv)
}

pub fn kinetic_correction(p: &Problem, x: f64) -> Result<f64> {
    let l = Local::at(p, x)?;
    let v2 = l.curvature()?;
    Ok(kinetic_correction_from(
        p.hbar(),
        [l.m.d(0), l.m.d(1), l.m.d(2)],
        v2,
        l.v.d(3),
    ))
}

/// ω-form effective mass from `[m, m', m'']`, ω and ω'.
pub fn omega_form_mass_from(hbar: f64, mass: [f64; 3], w: f64, w1: f64) -> f64 {
    let [m, m1, m2] = mass;
    m + hbar / 16.0 * w1 * w1 / (w * w * w)
        - hbar / 4.0 * (w1 / w) * (m1 / m)
        - 5.0 * hbar / 16.0 * m1 * m1 / (w * m * m)
        + hbar / 8.0 * m2 / (w * m)
}

pub fn effective_mass(p: &Problem, x: f64, form: MassForm) -> Result<f64> {
    match form {
        MassForm::Vm => Ok(p.mass(x)? + kinetic_correction(p, x)?),
        MassForm::OmegaForm => {
            let [w, w1, _] = omega_jet(p, x)?;
            let mj = p.mass_jet(x)?;
            Ok(omega_form_mass_from(
                p.hbar(),
                [mj.d(0), mj.d(1), mj.d(2)],
                w,
                w1,
            ))
        }
    }
}

/// `m_eff(vm) - m_eff(omega form)`; zero whenever the two forms agree.
pub fn mass_form_residual(p: &Problem, x: f64) -> Result<f64> {
    Ok(effective_mass(p, x, MassForm::Vm)? - effective_mass(p, x, MassForm::OmegaForm)?)
}

pub fn local_coefficients(p: &Problem, x: f64) -> Result<LocalCoefficients> {
    let w = omega(p, x)?;
    let z = kinetic_correction(p, x)?;
    let m = p.mass(x)?;
    Ok(LocalCoefficients {
        x,
        omega: w,
        v1: 0.5 * p.hbar() * w,
        z,
        m_eff_vm: m + z,
        m_eff_omega: effective_mass(p, x, MassForm::OmegaForm)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmearOptions {
    /// Gauss–Hermite order; the check runs against twice this order.
    pub order: usize,
    /// Accepted difference between the two orders, scaled by `max(1, |V|)`.
    pub tolerance: f64,
}

impl Default for SmearOptions {
    fn default() -> Self {
        Self {
            order: 64,
            tolerance: 1e-10,
        }
    }
}

fn gauss_jet(p: &Problem, x: f64, a2: f64, order: usize) -> Result<Jet4> {
    let gh = GaussHermite::of_order(order);
    let s = std::f64::consts::SQRT_2 * a2.sqrt();
    let mut acc = [0.0; 5];
    for (t, w) in gh.nodes.iter().zip(&gh.weights) {
        let d = p.potential_jet(x + s * t)?.derivatives();
        for k in 0..5 {
            acc[k] += w * d[k];
        }
    }
    let norm = std::f64::consts::PI.sqrt();
    Ok(Jet4::from_derivatives(acc.map(|v| v / norm)))
}

/// Smeared potential `V_{a²}` and its `x`-derivatives by Gauss–Hermite
/// quadrature only, with an order-doubling convergence check.
pub fn smeared_jet_quadrature(p: &Problem, x: f64, a2: f64, opts: SmearOptions) -> Result<Jet4> {
    if a2 < 0.0 {
        return Err(EffectiveError::NegativeWidth(a2));
    }
    if a2 == 0.0 {
        return Ok(p.potential_jet(x)?);
    }
    let low = gauss_jet(p, x, a2, opts.order)?;
    let high = gauss_jet(p, x, a2, 2 * opts.order)?;
    for k in 0..5 {
        let (lo, hi) = (low.d(k), high.d(k));
        if (lo - hi).abs() > opts.tolerance * hi.abs().max(1.0) {
            return Err(EffectiveError::QuadratureNonConvergence {
                x,
                a2,
                low: lo,
                high: hi,
            });
        }
    }
    Ok(high)
}

/// Smeared potential with derivatives; closed form when the potential is a
/// polynomial, quadrature otherwise.
pub fn smeared_jet(p: &Problem, x: f64, a2: f64, opts: SmearOptions) -> Result<Jet4> {
    if a2 < 0.0 {
        return Err(EffectiveError::NegativeWidth(a2));
    }
    match p.potential_polynomial() {
        Some(poly) => Ok(poly.smear(a2).eval_jet(x)),
        None => smeared_jet_quadrature(p, x, a2, opts),
    }
}

/// Gaussian average of the full potential over variance `a2` around `x`.
pub fn smear(p: &Problem, x: f64, a2: f64) -> Result<f64> {
    smeared_jet(p, x, a2, SmearOptions::default()).map(|j| j.value())
}

/// Quadrature-only smearing value, for cross-checks against the closed form.
pub fn smear_quadrature(p: &Problem, x: f64, a2: f64, opts: SmearOptions) -> Result<f64> {
    smeared_jet_quadrature(p, x, a2, opts).map(|j| j.value())
}

pub fn width_quantum(p: &Problem, x: f64, omega: f64) -> Result<Width> {
    if !(omega > 0.0) {
        return Err(EffectiveError::NonPositiveFrequency(omega));
    }
    Ok(Width(p.hbar() / (2.0 * p.mass(x)? * omega)))
}

const THERMAL_SERIES: [f64; 6] = [
    1.0 / 3.0,
    -1.0 / 45.0,
    2.0 / 945.0,
    -1.0 / 4725.0,
    2.0 / 93555.0,
    -1382.0 / 638512875.0,
];

/// Below this argument `coth(y) - 1/y` is summed as a power series.
pub const THERMAL_SERIES_CUTOFF: f64 = 0.1;

/// `coth(y) - 1/y` and its derivative.
pub fn thermal_factor(y: f64) -> (f64, f64) {
    if y < THERMAL_SERIES_CUTOFF {
        let y2 = y * y;
        let (mut h, mut dh, mut pw) = (0.0, 0.0, 1.0);
        for (n, c) in THERMAL_SERIES.iter().enumerate() {
            // c y^(2n+1)
            h += c * pw * y;
            dh += c * (2 * n + 1) as f64 * pw;
            pw *= y2;
        }
        (h, dh)
    } else {
        let coth = 1.0 / y.tanh();
        let csch2 = coth * coth - 1.0;
        (coth - 1.0 / y, 1.0 / (y * y) - csch2)
    }
}

/// Finite-temperature width
/// `a² = (kT/(mΩ²)) [(ħΩ/2kT) coth(ħΩ/2kT) - 1]`; reduces to
/// [`width_quantum`] at `kT = 0`.
pub fn width_thermal(p: &Problem, x: f64, omega: f64, kt: f64) -> Result<Width> {
    if !(omega > 0.0) {
        return Err(EffectiveError::NonPositiveFrequency(omega));
    }
    if !(kt >= 0.0) {
        return Err(EffectiveError::NegativeTemperature(kt));
    }
    if kt == 0.0 {
        return width_quantum(p, x, omega);
    }
    let m = p.mass(x)?;
    let y = p.hbar() * omega / (2.0 * kt);
    // kT/(mΩ²) · y·(coth y − 1/y) = ħ/(2mΩ) · (coth y − 1/y)
    let (h, _) = thermal_factor(y);
    Ok(Width(p.hbar() / (2.0 * m * omega) * h))
}

/// Width at the problem's own temperature.
pub fn width(p: &Problem, x: f64, omega: f64) -> Result<Width> {
    width_thermal(p, x, omega, p.kt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProblemSpec;
    use approx::assert_relative_eq;

    fn problem(m: &str, v: &str, hbar: f64) -> Problem {
        ProblemSpec::from_strings(m, v, hbar, 0.0, (-3.0, 3.0))
            .unwrap()
            .validate(101)
            .unwrap()
    }

    #[test]
    fn omega_examples() {
        assert_relative_eq!(omega(&problem("1", "0.5*x^2", 1.0), 0.7).unwrap(), 1.0);
        assert_relative_eq!(omega(&problem("2", "x^2", 1.0), -1.3).unwrap(), 1.0);
        let w = omega(&problem("1", "0.5*x^2+x^4", 1.0), 1.0).unwrap();
        assert_relative_eq!(w, 13f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn omega_unstable_carries_curvature() {
        let err = omega(&problem("1", "-x^2", 1.0), 0.5).unwrap_err();
        assert_eq!(
            err,
            EffectiveError::Unstable {
                x: 0.5,
                curvature: -2.0
            }
        );
        assert!(err
            .to_string()
            .starts_with("locally unstable: no real frequency"));
    }

    #[test]
    fn one_loop_potential_examples() {
        assert_relative_eq!(
            one_loop_potential(&problem("1", "0.5*x^2", 1.0), 2.0).unwrap(),
            0.5
        );
        assert_relative_eq!(
            one_loop_potential(&problem("1", "0.5*x^2", 2.0), 2.0).unwrap(),
            1.0
        );
        let v = one_loop_potential(&problem("1", "0.5*x^2+x^4", 1.0), 1.0).unwrap();
        assert_relative_eq!(v, 13f64.sqrt() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn one_loop_gradient_examples() {
        assert_eq!(
            one_loop_gradient(&problem("1", "0.5*x^2", 1.0), 1.1).unwrap(),
            0.0
        );
        let g = one_loop_gradient(&problem("1", "0.5*x^2+x^3", 1.0), 0.0).unwrap();
        assert_relative_eq!(g, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn kinetic_correction_examples() {
        assert_eq!(
            kinetic_correction(&problem("3", "2*x^2", 1.0), 0.4).unwrap(),
            0.0
        );
        let z = kinetic_correction(&problem("1", "0.5*x^2+x^3", 1.0), 0.0).unwrap();
        assert_relative_eq!(z, 1.125, epsilon = 1e-15);
        let z = kinetic_correction(&problem("1+x^2", "0.5*x^2", 1.0), 0.0).unwrap();
        assert_relative_eq!(z, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn effective_mass_examples() {
        let h = problem("1", "0.5*x^2", 1.0);
        assert_eq!(effective_mass(&h, 0.3, MassForm::Vm).unwrap(), 1.0);
        assert_eq!(effective_mass(&h, 0.3, MassForm::OmegaForm).unwrap(), 1.0);
        let c = problem("1", "0.5*x^2+x^3", 1.0);
        assert_relative_eq!(
            effective_mass(&c, 0.0, MassForm::Vm).unwrap(),
            2.125,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            effective_mass(&c, 0.0, MassForm::OmegaForm).unwrap(),
            1.5625,
            epsilon = 1e-15
        );
    }

    #[test]
    fn mass_form_residual_examples() {
        assert_eq!(
            mass_form_residual(&problem("1", "0.5*x^2", 1.0), 1.0).unwrap(),
            0.0
        );
        let r = mass_form_residual(&problem("1+x^2", "0.5*x^2", 1.0), 0.0).unwrap();
        assert_relative_eq!(r, 0.25, epsilon = 1e-15);
        let r = mass_form_residual(&problem("1", "0.5*x^2+x^3", 1.0), 0.0).unwrap();
        assert_relative_eq!(r, 0.5625, epsilon = 1e-15);
    }

    #[test]
    fn omega_jet_against_finite_differences() {
        let p = problem("1+0.2*x^2", "0.5*x^2+0.1*x^4+0.3*x^3", 1.0);
        let x = 0.4;
        let h = 1e-4;
        let w = |x| omega(&p, x).unwrap();
        let [_, w1, w2] = omega_jet(&p, x).unwrap();
        assert_relative_eq!(w1, (w(x + h) - w(x - h)) / (2.0 * h), max_relative = 1e-7);
        assert_relative_eq!(
            w2,
            (w(x + h) - 2.0 * w(x) + w(x - h)) / (h * h),
            max_relative = 1e-5
        );
    }

    #[test]
    fn smear_examples() {
        let q = problem("1", "x^4", 1.0);
        assert_eq!(smear(&q, 0.9, 0.0).unwrap(), q.potential(0.9).unwrap());
        let (x, a2): (f64, f64) = (0.9, 0.35);
        let expect = x.powi(4) + 6.0 * a2 * x * x + 3.0 * a2 * a2;
        let quad = smear_quadrature(&q, x, a2, SmearOptions::default()).unwrap();
        assert!((quad - expect).abs() < 1e-10);
        assert!((smear(&q, x, a2).unwrap() - expect).abs() < 1e-13);
        let c = problem("1", "7.25", 1.0);
        for a2 in [0.0, 0.1, 1.0, 5.0] {
            assert_relative_eq!(smear(&c, 0.4, a2).unwrap(), 7.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn smear_non_polynomial_quadrature() {
        // E[cos(x + aZ)] = cos(x) e^{-a²/2}
        let p = problem("1", "cos(x)", 1.0);
        let (x, a2) = (0.3, 0.8);
        let v = smear(&p, x, a2).unwrap();
        assert_relative_eq!(v, x.cos() * (-a2 / 2.0).exp(), epsilon = 1e-13);
    }

    #[test]
    fn smear_rejects_negative_width() {
        let p = problem("1", "x^2", 1.0);
        assert_eq!(
            smear(&p, 0.0, -1.0),
            Err(EffectiveError::NegativeWidth(-1.0))
        );
    }

    #[test]
    fn quadrature_non_convergence_reported() {
        // Far too wide for a 2-point rule to resolve
        let p = problem("1", "cos(5*x)", 1.0);
        let opts = SmearOptions {
            order: 2,
            tolerance: 1e-10,
        };
        assert!(matches!(
            smeared_jet_quadrature(&p, 0.0, 1.0, opts),
            Err(EffectiveError::QuadratureNonConvergence { .. })
        ));
    }

    #[test]
    fn width_quantum_examples() {
        assert_relative_eq!(
            width_quantum(&problem("1", "x^2", 1.0), 0.0, 1.0)
                .unwrap()
                .a2(),
            0.5
        );
        assert_relative_eq!(
            width_quantum(&problem("2", "x^2", 1.0), 0.0, 1.0)
                .unwrap()
                .a2(),
            0.25
        );
        let a2 = width_quantum(&problem("1", "x^2", 1.0), 0.0, 1.6716)
            .unwrap()
            .a2();
        assert!((a2 - 0.29911).abs() < 5e-6);
        assert!(width_quantum(&problem("1", "x^2", 1.0), 0.0, 0.0).is_err());
        assert!(width_quantum(&problem("1", "x^2", 1.0), 0.0, -1.0).is_err());
    }

    #[test]
    fn width_thermal_examples() {
        let p = problem("1", "x^2", 1.0);
        let a2 = width_thermal(&p, 0.0, 1.0, 1.0).unwrap().a2();
        let expect = 0.5 / 0.5f64.tanh() - 1.0;
        assert_relative_eq!(a2, expect, epsilon = 1e-15);
        assert!((a2 - 0.0819766).abs() < 5e-7);

        // y = 1e-3 against the classical asymptote ħ²/(12 m kT)
        let kt = 500.0;
        let a2 = width_thermal(&p, 0.0, 1.0, kt).unwrap().a2();
        assert_relative_eq!(a2, 1.0 / (12.0 * kt), max_relative = 1e-5);

        // y = 50: the width still carries the -1/y term relative to ħ/(2mΩ)
        let a2 = width_thermal(&p, 0.0, 1.0, 0.01).unwrap().a2();
        assert_relative_eq!(a2, 0.5 * (1.0 / 50f64.tanh() - 1.0 / 50.0), epsilon = 1e-15);

        assert_eq!(width_thermal(&p, 0.0, 1.0, 0.0).unwrap().a2(), 0.5);
        assert!(width_thermal(&p, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn thermal_factor_branches_meet() {
        let y = THERMAL_SERIES_CUTOFF;
        let (series, ds) = thermal_factor(y * (1.0 - 1e-15));
        let (direct, dd) = thermal_factor(y);
        assert_relative_eq!(series, direct, max_relative = 1e-12);
        assert_relative_eq!(ds, dd, max_relative = 1e-10);
        // series agrees with the leading asymptote deep in the classical limit
        let (h, _) = thermal_factor(1e-6);
        assert_relative_eq!(h, 1e-6 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn shift_of_potential_only_moves_smear() {
        let a = problem("1+0.2*x^2", "0.5*x^2+0.3*x^3+0.1*x^4", 1.0);
        let b = problem("1+0.2*x^2", "0.5*x^2+0.3*x^3+0.1*x^4 + 7", 1.0);
        for x in [-0.4, 0.0, 0.6] {
            let (ca, cb) = (
                local_coefficients(&a, x).unwrap(),
                local_coefficients(&b, x).unwrap(),
            );
            assert_eq!(ca, cb);
            assert_relative_eq!(
                one_loop_gradient(&a, x).unwrap(),
                one_loop_gradient(&b, x).unwrap()
            );
            assert_relative_eq!(
                smear(&b, x, 0.3).unwrap() - smear(&a, x, 0.3).unwrap(),
                7.0,
                epsilon = 1e-12
            );
        }
    }
}
