//! Finite-difference Schrödinger eigensolver on a Dirichlet grid.

use super::{OracleError, Result};
use crate::model::Problem;

/// Kinetic operator discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticOrdering {
    /// `−(ħ²/2m) ∂²`; only defined for constant mass.
    ConstantMass,
    /// `−(ħ²/2) ∂ (1/m(x)) ∂` — non-canonical, for exploratory comparisons
    /// with position-dependent mass.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    /// Absolute change accepted between two resolution doublings.
    pub tolerance: f64,
    /// Number of grid intervals at the coarsest level.
    pub initial_intervals: usize,
    pub max_intervals: usize,
    /// Re-solve on a domain widened by half its width on each side and
    /// require agreement.
    pub check_tail: bool,
    pub ordering: KineticOrdering,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            initial_intervals: 256,
            max_intervals: 1 << 17,
            check_tail: true,
            ordering: KineticOrdering::ConstantMass,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpectrum {
    /// Interior points.
    pub grid_size: usize,
    pub spacing: f64,
    /// Lowest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Change of the ground-state estimate under the last resolution doubling.
    pub convergence_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    /// Richardson-extrapolated ground-state energy.
    pub energy: f64,
    pub convergence_estimate: f64,
    /// Spectrum on the finest grid used (not extrapolated).
    pub spectrum: GridSpectrum,
}

/// Symmetric tridiagonal matrix: diagonal `d`, off-diagonal `e` (`e[i]`
/// couples `i` and `i+1`).
struct Tridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `lambda` (Sturm sequence).
    fn count_below(&self, lambda: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.d.len() {
            let off = if i == 0 {
                0.0
            } else {
                self.e[i - 1] * self.e[i - 1]
            };
            q = self.d[i] - lambda - if i == 0 { 0.0 } else { off / q };
            if q == 0.0 {
                q = -f64::EPSILON * (self.d[i].abs() + lambda.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// `k`-th eigenvalue (0-based, ascending) by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn hamiltonian(
    p: &Problem,
    lo: f64,
    hi: f64,
    intervals: usize,
    ordering: KineticOrdering,
) -> Result<(Tridiagonal, f64)> {
    let n = intervals - 1;
    let h = (hi - lo) / intervals as f64;
    let hb2 = p.hbar() * p.hbar();
    let x = |i: usize| lo + h * (i + 1) as f64;
    let mut d = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n.saturating_sub(1));
    match ordering {
        KineticOrdering::ConstantMass => {
            let m = p.constant_mass().ok_or(OracleError::NonConstantMass)?;
            let t = hb2 / (2.0 * m * h * h);
            for i in 0..n {
                d.push(2.0 * t + p.potential(x(i))?);
            }
            e.resize(n.saturating_sub(1), -t);
        }
        KineticOrdering::Symmetric => {
            let inv_m = |xm: f64| -> Result<f64> { Ok(1.0 / p.mass(xm)?) };
            let c = hb2 / (2.0 * h * h);
            for i in 0..n {
                let xi = x(i);
                let (left, right) = (inv_m(xi - 0.5 * h)?, inv_m(xi + 0.5 * h)?);
                d.push(c * (left + right) + p.potential(xi)?);
                if i + 1 < n {
                    e.push(-c * right);
                }
            }
        }
    }
    Ok((Tridiagonal { d, e }, h))
}

/// Lowest `count` eigenvalues on one grid of `intervals` spacings.
pub fn grid_spectrum(
    p: &Problem,
    lo: f64,
    hi: f64,
    intervals: usize,
    count: usize,
    ordering: KineticOrdering,
) -> Result<GridSpectrum> {
    if !(hi > lo) || intervals < 2 || count == 0 || count >= intervals {
        return Err(OracleError::InvalidInput(format!(
            "need lo < hi, at least two intervals and 0 < count < intervals; got [{lo}, {hi}], {intervals}, {count}"
        )));
    }
    let (t, h) = hamiltonian(p, lo, hi, intervals, ordering)?;
    let eigenvalues = (0..count).map(|k| t.eigenvalue(k)).collect();
    Ok(GridSpectrum {
        grid_size: intervals - 1,
        spacing: h,
        eigenvalues,
        convergence_estimate: f64::NAN,
    })
}

fn converged_on(p: &Problem, lo: f64, hi: f64, opts: &GroundStateOptions) -> Result<GroundState> {
    let mut n = opts.initial_intervals.max(4);
    let mut coarse = grid_spectrum(p, lo, hi, n, 1, opts.ordering)?;
    let mut previous: Option<f64> = None;
    while 2 * n <= opts.max_intervals {
        n *= 2;
        let fine = grid_spectrum(p, lo, hi, n, 1, opts.ordering)?;
        // second-order scheme: one Richardson step
        let extrapolated = (4.0 * fine.eigenvalues[0] - coarse.eigenvalues[0]) / 3.0;
        if let Some(prev) = previous {
            let change = (extrapolated - prev).abs();
            if change <= opts.tolerance {
                return Ok(GroundState {
                    energy: extrapolated,
                    convergence_estimate: change,
                    spectrum: GridSpectrum {
                        convergence_estimate: change,
                        ..fine
                    },
                });
            }
        }
        previous = Some(extrapolated);
        coarse = fine;
    }
    Err(OracleError::GridNonConvergence {
        intervals: n,
        last: previous.unwrap_or(f64::NAN),
    })
}

/// Ground-state energy on `[lo, hi]` with hard walls, refined until two
/// successive extrapolated estimates agree to the tolerance.
pub fn ground_state_energy(
    p: &Problem,
    lo: f64,
    hi: f64,
    opts: &GroundStateOptions,
) -> Result<GroundState> {
    let gs = converged_on(p, lo, hi, opts)?;
    if opts.check_tail {
        let pad = 0.5 * (hi - lo);
        let wide = converged_on(
            p,
            lo - pad,
            hi + pad,
            &GroundStateOptions {
                initial_intervals: 2 * opts.initial_intervals,
                max_intervals: 2 * opts.max_intervals,
                ..*opts
            },
        )?;
        if (wide.energy - gs.energy).abs() > 10.0 * opts.tolerance {
            return Err(OracleError::DomainSensitive {
                narrow: gs.energy,
                wide: wide.energy,
            });
        }
    }
    Ok(gs)
}
