//! Order-4 truncated Taylor arithmetic.
//!
//! A [`Jet4`] carries a function value together with its first four
//! derivatives at a fixed point. Internally the normalized Taylor
//! coefficients `f^(k)(x)/k!` are stored, so products are plain truncated
//! Cauchy products and composition with an elementary function reduces to
//! summing powers of the shifted series.

use std::ops::{Add, Div, Mul, Neg, Sub};

const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];

/// Value and derivatives `d0..d4` of a scalar function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet4 {
    coef: [f64; 5],
}

impl Jet4 {
    pub const ORDER: usize = 4;

    pub fn constant(c: f64) -> Self {
        Self {
            coef: [c, 0.0, 0.0, 0.0, 0.0],
        }
    }

    /// The independent variable seeded at `x`.
    pub fn variable(x: f64) -> Self {
        Self {
            coef: [x, 1.0, 0.0, 0.0, 0.0],
        }
    }

    /// Build from derivatives `[f, f', f'', f''', f'''']`.
    pub fn from_derivatives(d: [f64; 5]) -> Self {
        let mut coef = [0.0; 5];
        for k in 0..5 {
            coef[k] = d[k] / FACT[k];
        }
        Self { coef }
    }

    pub fn derivatives(&self) -> [f64; 5] {
        let mut d = [0.0; 5];
        for k in 0..5 {
            d[k] = self.coef[k] * FACT[k];
        }
        d
    }

    /// k-th derivative, `k <= 4`.
    pub fn d(&self, k: usize) -> f64 {
        self.coef[k] * FACT[k]
    }

    pub fn value(&self) -> f64 {
        self.coef[0]
    }

    pub fn is_finite(&self) -> bool {
        self.coef.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut coef = self.coef;
        for c in &mut coef {
            *c *= s;
        }
        Self { coef }
    }

    /// Compose an outer function, given its derivatives `[g, g', .., g'''']`
    /// evaluated at `self.value()`, with this jet.
    pub fn compose(&self, outer: [f64; 5]) -> Self {
        let mut shift = *self;
        shift.coef[0] = 0.0;
        let mut out = [outer[0], 0.0, 0.0, 0.0, 0.0];
        let mut power = Self::constant(1.0);
        for k in 1..5 {
            power = power * shift;
            let w = outer[k] / FACT[k];
            for j in 0..5 {
                out[j] += w * power.coef[j];
            }
        }
        Self { coef: out }
    }

    pub fn recip(&self) -> Self {
        let a = self.value();
        let r = 1.0 / a;
        let r2 = r * r;
        self.compose([r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2, 24.0 * r2 * r2 * r])
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose([e; 5])
    }

    pub fn ln(&self) -> Self {
        let a = self.value();
        let r = 1.0 / a;
        self.compose([a.ln(), r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn sqrt(&self) -> Self {
        let a = self.value();
        let s = a.sqrt();
        let r = 1.0 / a;
        self.compose([
            s,
            0.5 * s * r,
            -0.25 * s * r * r,
            0.375 * s * r * r * r,
            -0.9375 * s * r * r * r * r,
        ])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s, c])
    }

    pub fn sinh(&self) -> Self {
        let a = self.value();
        let (s, c) = (a.sinh(), a.cosh());
        self.compose([s, c, s, c, s])
    }

    pub fn cosh(&self) -> Self {
        let a = self.value();
        let (s, c) = (a.sinh(), a.cosh());
        self.compose([c, s, c, s, c])
    }

    pub fn tanh(&self) -> Self {
        let t = self.value().tanh();
        let sech2 = 1.0 - t * t;
        self.compose([
            t,
            sech2,
            -2.0 * t * sech2,
            (6.0 * t * t - 2.0) * sech2,
            (16.0 * t - 24.0 * t * t * t) * sech2,
        ])
    }

    /// Integer power by repeated squaring; negative exponents go through
    /// the reciprocal.
    pub fn powi(&self, n: i64) -> Self {
        if n == 0 {
            return Self::constant(1.0);
        }
        let mut base = if n < 0 { self.recip() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::constant(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        acc
    }

    /// `self^other` as `exp(other * ln self)`; requires a positive base.
    pub fn powf(&self, other: &Self) -> Self {
        (*other * self.ln()).exp()
    }
}

impl Add for Jet4 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for k in 0..5 {
            self.coef[k] += rhs.coef[k];
        }
        self
    }
}

impl Sub for Jet4 {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for k in 0..5 {
            self.coef[k] -= rhs.coef[k];
        }
        self
    }
}

impl Neg for Jet4 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Jet4 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = &self.coef;
        let b = &rhs.coef;
        let mut c = [0.0; 5];
        for i in 0..5 {
            for j in 0..5 - i {
                c[i + j] += a[i] * b[j];
            }
        }
        Self { coef: c }
    }
}

impl Div for Jet4 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}
