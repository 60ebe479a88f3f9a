//! Dense univariate polynomials, used as a closed-form fast path when a
//! potential turns out to be polynomial in `x`.

use super::jet::Jet4;

/// Coefficients in ascending powers: `c[0] + c[1] x + c[2] x^2 + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coef: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coef: Vec<f64>) -> Self {
        while coef.len() > 1 && coef.last() == Some(&0.0) {
            coef.pop();
        }
        if coef.is_empty() {
            coef.push(0.0);
        }
        Self { coef }
    }

    pub fn constant(c: f64) -> Self {
        Self { coef: vec![c] }
    }

    pub fn identity() -> Self {
        Self {
            coef: vec![0.0, 1.0],
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn degree(&self) -> usize {
        self.coef.len() - 1
    }

    pub fn as_constant(&self) -> Option<f64> {
        (self.coef.len() == 1).then(|| self.coef[0])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_jet(&self, x: f64) -> Jet4 {
        let mut d = [0.0; 5];
        let mut p = self.clone();
        for dk in &mut d {
            *dk = p.eval(x);
            p = p.derivative();
        }
        Jet4::from_derivatives(d)
    }

    pub fn derivative(&self) -> Self {
        if self.coef.len() == 1 {
            return Self::constant(0.0);
        }
        Self::new(
            self.coef
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coef.len().max(other.coef.len());
        let c = (0..n)
            .map(|k| self.coef.get(k).unwrap_or(&0.0) + other.coef.get(k).unwrap_or(&0.0))
            .collect();
        Self::new(c)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coef.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut c = vec![0.0; self.coef.len() + other.coef.len() - 1];
        for (i, a) in self.coef.iter().enumerate() {
            for (j, b) in other.coef.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(1.0);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Gaussian convolution with variance `a2`, i.e. `E[P(x + a Z)]` for a
    /// standard normal `Z`, as a polynomial in `x`.
    pub fn smear(&self, a2: f64) -> Self {
        let n = self.coef.len();
        let mut out = vec![0.0; n];
        for (deg, &c) in self.coef.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            // E[(x + aZ)^deg] = sum_j C(deg, 2j) x^(deg-2j) a^(2j) (2j-1)!!
            let mut binom = 1.0;
            let mut moment = 1.0;
            let mut a2j = 1.0;
            let mut j = 0;
            while 2 * j <= deg {
                out[deg - 2 * j] += c * binom * a2j * moment;
                let k = 2 * j;
                // C(deg, k+2) = C(deg, k) (deg-k)(deg-k-1) / ((k+1)(k+2))
                if k + 2 <= deg {
                    binom *= ((deg - k) * (deg - k - 1)) as f64 / ((k + 1) * (k + 2)) as f64;
                }
                moment *= (2 * j + 1) as f64;
                a2j *= a2;
                j += 1;
            }
        }
        Self::new(out)
    }
}
