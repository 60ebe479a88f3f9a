//! Euclidean frequency integrals and the one-loop slope check.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use super::{OracleError, Result};
use crate::effective::one_loop_potential_from;
use crate::model::Problem;
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyIntegral {
    pub quadrature: f64,
    pub error_estimate: f64,
    pub closed_form: f64,
}

impl FrequencyIntegral {
    pub fn relative_difference(&self) -> f64 {
        if self.closed_form == 0.0 {
            self.quadrature.abs()
        } else {
            ((self.quadrature - self.closed_form) / self.closed_form).abs()
        }
    }
}

/// `∫ dν/2π · ν^p / (m ν² + v2)^q` over the real line, by adaptive
/// quadrature on `ν = σ t/(1−t)` and by its Gamma-function closed form.
pub fn frequency_integral(p: u32, q: u32, m: f64, v2: f64) -> Result<FrequencyIntegral> {
    if q == 0 || 2 * q <= p + 1 {
        return Err(OracleError::DivergentIntegral { p, q });
    }
    if !(m > 0.0 && v2 > 0.0) {
        return Err(OracleError::InvalidInput(format!(
            "need m > 0 and v2 > 0, got m={m}, v2={v2}"
        )));
    }
    if p % 2 == 1 {
        return Ok(FrequencyIntegral {
            quadrature: 0.0,
            error_estimate: 0.0,
            closed_form: 0.0,
        });
    }
    // ν = σ u with σ² = v2/m turns the integrand into u^p/(1+u²)^q
    let sigma = (v2 / m).sqrt();
    let scale = sigma.powi(p as i32 + 1) / v2.powi(q as i32);
    let f = |t: f64| {
        let u = t / (1.0 - t);
        let jac = 1.0 / ((1.0 - t) * (1.0 - t));
        u.powi(p as i32) / (1.0 + u * u).powi(q as i32) * jac
    };
    let (half, err) = quadrature::integrate(f, 0.0, 1.0, 1e-14, 2000);
    // symmetric integrand: (1/2π)·2·∫_0^∞
    let quad = scale * half / PI;

    let a = (p as f64 + 1.0) / 2.0;
    let qf = q as f64;
    let closed = gamma(a) * gamma(qf - a) / (2.0 * PI * gamma(qf)) * m.powf(-a) * v2.powf(a - qf);
    Ok(FrequencyIntegral {
        quadrature: quad,
        error_estimate: scale * err / PI,
        closed_form: closed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeCheck {
    /// `∂𝒱/∂V''` by extrapolated central differences.
    pub derivative: f64,
    /// `(ħ/2) · ∫dν/2π (mν² + V'')^{-1}`, by quadrature.
    pub expected: f64,
    pub residual: f64,
}

/// Slope of the one-loop potential in the curvature versus the frequency
/// integral it is built from.
pub fn slope_check_from(hbar: f64, m: f64, v2: f64) -> Result<SlopeCheck> {
    if !(v2 > 0.0) {
        return Err(OracleError::Unstable { curvature: v2 });
    }
    let f = |c: f64| one_loop_potential_from(hbar, m, c);
    let d = |h: f64| (f(v2 + h) - f(v2 - h)) / (2.0 * h);
    let h = 1e-2 * v2;
    let (d1, d2) = (d(h), d(0.5 * h));
    let derivative = (4.0 * d2 - d1) / 3.0;
    let expected = 0.5 * hbar * frequency_integral(0, 1, m, v2)?.quadrature;
    Ok(SlopeCheck {
        derivative,
        expected,
        residual: ((derivative - expected) / expected).abs(),
    })
}

pub fn one_loop_energy_slope_check(p: &Problem, x: f64) -> Result<SlopeCheck> {
    let v2 = p.potential_jet(x)?.d(2);
    if !(v2 > 0.0) {
        return Err(OracleError::Unstable { curvature: v2 });
    }
    slope_check_from(p.hbar(), p.mass(x)?, v2)
}
