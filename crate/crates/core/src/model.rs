//! Problem definition: a particle with mass `m(x)` in a potential `V(x)`,
//! with Planck constant, thermal energy and a closed spatial domain.

use std::fmt;

use crate::expr::{parse, EvalError, Expr, Jet4, ParseError, Polynomial};

pub const DEFAULT_PROBE_POINTS: usize = 1001;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub mass: Expr,
    pub potential: Expr,
    pub hbar: f64,
    /// Thermal energy k_B T; zero means the pure quantum regime.
    pub kt: f64,
    pub domain: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationError {
    EmptyDomain {
        lo: f64,
        hi: f64,
    },
    NonPositiveMass {
        x: f64,
        value: f64,
    },
    ExpressionDomain {
        which: &'static str,
        source: EvalError,
    },
    NonPositiveHbar(f64),
    NegativeTemperature(f64),
    NoProbePoints,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::EmptyDomain { lo, hi } => {
                write!(f, "empty domain [{lo}, {hi}]")
            }
            ValidationError::NonPositiveMass { x, value } => {
                write!(f, "non-positive mass at x={x} (m={value})")
            }
            ValidationError::ExpressionDomain { which, source } => {
                write!(
                    f,
                    "expression domain violation at x={} in {which}: {source}",
                    source.x()
                )
            }
            ValidationError::NonPositiveHbar(h) => write!(f, "hbar must be positive, got {h}"),
            ValidationError::NegativeTemperature(t) => {
                write!(f, "kT must be non-negative, got {t}")
            }
            ValidationError::NoProbePoints => write!(f, "probe grid needs at least one point"),
        }
    }
}

impl std::error::Error for ValidationError {}

impl ProblemSpec {
    pub fn from_strings(
        mass: &str,
        potential: &str,
        hbar: f64,
        kt: f64,
        domain: (f64, f64),
    ) -> Result<Self, ParseError> {
        Ok(Self {
            mass: parse(mass)?,
            potential: parse(potential)?,
            hbar,
            kt,
            domain,
        })
    }

    /// Check every invariant on a uniform probe grid. All violations are
    /// collected; for each kind only the first offending point is reported.
    pub fn validate(self, probe_points: usize) -> Result<Problem, Vec<ValidationError>> {
        let mut errors = Vec::new();
        let (lo, hi) = self.domain;
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            errors.push(ValidationError::NonPositiveHbar(self.hbar));
        }
        if !(self.kt >= 0.0 && self.kt.is_finite()) {
            errors.push(ValidationError::NegativeTemperature(self.kt));
        }
        if probe_points == 0 {
            errors.push(ValidationError::NoProbePoints);
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            errors.push(ValidationError::EmptyDomain { lo, hi });
            return Err(errors);
        }

        let mut mass_bad = None;
        let mut mass_dom = None;
        let mut pot_dom = None;
        for x in probe_grid(lo, hi, probe_points) {
            match self.mass.eval_jet(x) {
                Ok(j) if j.value() <= 0.0 => {
                    mass_bad.get_or_insert(ValidationError::NonPositiveMass {
                        x,
                        value: j.value(),
                    });
                }
                Ok(_) => {}
                Err(e) => {
                    mass_dom.get_or_insert(ValidationError::ExpressionDomain {
                        which: "mass",
                        source: e,
                    });
                }
            }
            if let Err(e) = self.potential.eval_jet(x) {
                pot_dom.get_or_insert(ValidationError::ExpressionDomain {
                    which: "potential",
                    source: e,
                });
            }
        }
        errors.extend(mass_bad);
        errors.extend(mass_dom);
        errors.extend(pot_dom);

        if errors.is_empty() {
            Ok(Problem::new(self))
        } else {
            Err(errors)
        }
    }
}

pub(crate) fn probe_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 {
        (hi - lo) / (n - 1) as f64
    } else {
        0.0
    };
    (0..n).map(move |i| {
        if i + 1 == n && n > 1 {
            hi
        } else {
            lo + step * i as f64
        }
    })
}

/// A problem that passed validation. Immutable; cheap to share by reference.
#[derive(Debug, Clone)]
pub struct Problem {
    spec: ProblemSpec,
    potential_poly: Option<Polynomial>,
    mass_const: Option<f64>,
}

impl Problem {
    fn new(spec: ProblemSpec) -> Self {
        let potential_poly = spec.potential.to_polynomial();
        let mass_const = spec.mass.to_polynomial().and_then(|p| p.as_constant());
        Self {
            spec,
            potential_poly,
            mass_const,
        }
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn hbar(&self) -> f64 {
        self.spec.hbar
    }

    pub fn kt(&self) -> f64 {
        self.spec.kt
    }

    pub fn domain(&self) -> (f64, f64) {
        self.spec.domain
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.spec.domain;
        (lo..=hi).contains(&x)
    }

    pub fn mass_jet(&self, x: f64) -> Result<Jet4, EvalError> {
        self.spec.mass.eval_jet(x)
    }

    pub fn potential_jet(&self, x: f64) -> Result<Jet4, EvalError> {
        match &self.potential_poly {
            Some(p) => Ok(p.eval_jet(x)),
            None => self.spec.potential.eval_jet(x),
        }
    }

    pub fn mass(&self, x: f64) -> Result<f64, EvalError> {
        match self.mass_const {
            Some(m) => Ok(m),
            None => self.spec.mass.eval(x),
        }
    }

    pub fn potential(&self, x: f64) -> Result<f64, EvalError> {
        match &self.potential_poly {
            Some(p) => Ok(p.eval(x)),
            None => self.spec.potential.eval(x),
        }
    }

    /// Closed polynomial form of the potential, when it has one.
    pub fn potential_polynomial(&self) -> Option<&Polynomial> {
        self.potential_poly.as_ref()
    }

    /// The mass value when `m(x)` does not depend on `x`.
    pub fn constant_mass(&self) -> Option<f64> {
        self.mass_const
    }

    /// Same problem with a different Planck constant.
    pub fn with_hbar(&self, hbar: f64) -> Self {
        let mut p = self.clone();
        p.spec.hbar = hbar;
        p
    }

    pub fn with_kt(&self, kt: f64) -> Self {
        let mut p = self.clone();
        p.spec.kt = kt;
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: &str, v: &str, dom: (f64, f64)) -> ProblemSpec {
        ProblemSpec::from_strings(m, v, 1.0, 0.0, dom).unwrap()
    }

    #[test]
    fn harmonic_is_valid() {
        let p = spec("1", "0.5*x^2", (-5.0, 5.0))
            .validate(DEFAULT_PROBE_POINTS)
            .unwrap();
        assert_eq!(p.constant_mass(), Some(1.0));
        assert!(p.potential_polynomial().is_some());
    }

    #[test]
    fn linear_mass_rejected() {
        let errs = spec("x", "0.5*x^2", (-1.0, 1.0))
            .validate(DEFAULT_PROBE_POINTS)
            .unwrap_err();
        match &errs[..] {
            [ValidationError::NonPositiveMass { x, .. }] => assert!(*x <= 0.0),
            other => panic!("{other:?}"),
        }
        assert!(errs[0].to_string().starts_with("non-positive mass at x="));
    }

    #[test]
    fn variable_mass_quartic_valid() {
        spec("1+0.2*x^2", "0.5*x^2+0.1*x^4", (-3.0, 3.0))
            .validate(DEFAULT_PROBE_POINTS)
            .unwrap();
    }

    #[test]
    fn empty_domain_and_bad_constants() {
        let errs = spec("1", "x", (1.0, 1.0)).validate(11).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ValidationError::EmptyDomain { .. })));
        let mut s = spec("1", "x", (0.0, 1.0));
        s.hbar = 0.0;
        s.kt = -1.0;
        let errs = s.validate(11).unwrap_err();
        assert_eq!(errs.len(), 2);
    }

    #[test]
    fn expression_domain_violation() {
        let errs = spec("1", "log(x)", (-1.0, 1.0)).validate(101).unwrap_err();
        assert!(matches!(
            errs[0],
            ValidationError::ExpressionDomain {
                which: "potential",
                ..
            }
        ));
        assert!(errs[0]
            .to_string()
            .contains("expression domain violation at x="));
    }

    #[test]
    fn probe_grid_endpoints() {
        let g: Vec<f64> = probe_grid(-1.0, 1.0, 5).collect();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
