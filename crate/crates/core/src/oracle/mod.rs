//! Independent brute-force validators for the effective-action formulas.

mod integrals;
mod schrodinger;
mod zprobe;

pub use integrals::{
    frequency_integral, one_loop_energy_slope_check, slope_check_from, FrequencyIntegral,
    SlopeCheck,
};
pub use schrodinger::{
    grid_spectrum, ground_state_energy, GridSpectrum, GroundState, GroundStateOptions,
    KineticOrdering,
};
pub use zprobe::{fluctuation_determinant_z_probe, ProbeOptions, ZProbe, SIGN_CONVENTION};

use thiserror::Error;

use crate::effective::EffectiveError;
use crate::expr::EvalError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("non-constant mass needs an explicit kinetic ordering")]
    NonConstantMass,
    #[error("ground state depends on the domain: {narrow} vs {wide} after widening")]
    DomainSensitive { narrow: f64, wide: f64 },
    #[error("grid refinement did not converge by {intervals} intervals (last estimate {last})")]
    GridNonConvergence { intervals: usize, last: f64 },
    #[error("divergent frequency integral (p={p}, q={q}): need q >= 1 and 2q - p > 1")]
    DivergentIntegral { p: u32, q: u32 },
    #[error("locally unstable: V''={curvature}")]
    Unstable { curvature: f64 },
    #[error("fit ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("probe estimate not converged under n_steps doubling: {coarse} vs {fine}")]
    ProbeNonConvergence { coarse: f64, fine: f64 },
    #[error("fluctuation determinant not positive on the lattice")]
    ProbeDegenerate,
    #[error("T>0 unsupported by probe")]
    ThermalUnsupported,
    #[error("invalid oracle input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Effective(#[from] EffectiveError),
}

pub type Result<T> = std::result::Result<T, OracleError>;
