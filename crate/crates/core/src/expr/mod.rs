//! Expressions of one variable `x`, evaluated together with their first four
//! derivatives.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 'x' | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | log | sqrt | tanh | sinh | cosh
//! ```

mod jet;
mod parse;
mod poly;

use std::fmt;

pub use jet::Jet4;
pub use parse::{parse, ParseError};
pub use poly::Polynomial;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Sinh,
    Cosh,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Tanh,
        Func::Sinh,
        Func::Cosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("log of non-positive value {value} at x={x}")]
    LogDomain { x: f64, value: f64 },
    #[error("sqrt of non-positive value {value} at x={x}")]
    SqrtDomain { x: f64, value: f64 },
    #[error("division by zero at x={x}")]
    DivisionByZero { x: f64 },
    #[error("non-integer power of non-positive base {value} at x={x}")]
    PowDomain { x: f64, value: f64 },
    #[error("non-finite result at x={x}")]
    NonFinite { x: f64 },
}

impl EvalError {
    pub fn x(&self) -> f64 {
        match *self {
            EvalError::LogDomain { x, .. }
            | EvalError::SqrtDomain { x, .. }
            | EvalError::DivisionByZero { x }
            | EvalError::PowDomain { x, .. }
            | EvalError::NonFinite { x } => x,
        }
    }
}

impl Expr {
    pub fn contains_var(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var => true,
            Expr::Neg(e) | Expr::Call(_, e) => e.contains_var(),
            Expr::Binary(_, l, r) => l.contains_var() || r.contains_var(),
        }
    }

    /// Value and derivatives up to fourth order at `x`.
    pub fn eval_jet(&self, x: f64) -> Result<Jet4, EvalError> {
        let j = self.jet(x)?;
        if j.is_finite() {
            Ok(j)
        } else {
            Err(EvalError::NonFinite { x })
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.eval_jet(x).map(|j| j.value())
    }

    fn jet(&self, x: f64) -> Result<Jet4, EvalError> {
        Ok(match self {
            Expr::Const(c) => Jet4::constant(*c),
            Expr::Var => Jet4::variable(x),
            Expr::Neg(e) => -e.jet(x)?,
            Expr::Binary(op, l, r) => {
                let a = l.jet(x)?;
                match op {
                    BinOp::Add => a + r.jet(x)?,
                    BinOp::Sub => a - r.jet(x)?,
                    BinOp::Mul => a * r.jet(x)?,
                    BinOp::Div => {
                        let b = r.jet(x)?;
                        if b.value() == 0.0 {
                            return Err(EvalError::DivisionByZero { x });
                        }
                        a / b
                    }
                    BinOp::Pow => pow_jet(x, a, r)?,
                }
            }
            Expr::Call(f, e) => {
                let a = e.jet(x)?;
                let v = a.value();
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log if v <= 0.0 => return Err(EvalError::LogDomain { x, value: v }),
                    Func::Log => a.ln(),
                    Func::Sqrt if v <= 0.0 => return Err(EvalError::SqrtDomain { x, value: v }),
                    Func::Sqrt => a.sqrt(),
                    Func::Tanh => a.tanh(),
                    Func::Sinh => a.sinh(),
                    Func::Cosh => a.cosh(),
                }
            }
        })
    }

    /// Exact polynomial form, if the expression is a polynomial in `x`.
    /// Sub-trees without `x` are folded to constants.
    pub fn to_polynomial(&self) -> Option<Polynomial> {
        if !self.contains_var() {
            return self.eval(0.0).ok().map(Polynomial::constant);
        }
        match self {
            Expr::Const(c) => Some(Polynomial::constant(*c)),
            Expr::Var => Some(Polynomial::identity()),
            Expr::Neg(e) => e.to_polynomial().map(|p| p.scale(-1.0)),
            Expr::Call(..) => None,
            Expr::Binary(op, l, r) => {
                let a = l.to_polynomial()?;
                match op {
                    BinOp::Add => Some(a.add(&r.to_polynomial()?)),
                    BinOp::Sub => Some(a.add(&r.to_polynomial()?.scale(-1.0))),
                    BinOp::Mul => Some(a.mul(&r.to_polynomial()?)),
                    BinOp::Div => {
                        let c = r.to_polynomial()?.as_constant()?;
                        (c != 0.0).then(|| a.scale(1.0 / c))
                    }
                    BinOp::Pow => {
                        let n = r.to_polynomial()?.as_constant()?;
                        (n >= 0.0 && n.fract() == 0.0 && n <= 64.0).then(|| a.pow(n as u32))
                    }
                }
            }
        }
    }
}

fn integer_exponent(e: &Expr) -> Option<i64> {
    if e.contains_var() {
        return None;
    }
    let v = e.eval(0.0).ok()?;
    (v.fract() == 0.0 && v.abs() <= 1.0e9).then_some(v as i64)
}

fn pow_jet(x: f64, base: Jet4, exponent: &Expr) -> Result<Jet4, EvalError> {
    if let Some(n) = integer_exponent(exponent) {
        if n < 0 && base.value() == 0.0 {
            return Err(EvalError::DivisionByZero { x });
        }
        return Ok(base.powi(n));
    }
    if base.value() <= 0.0 {
        return Err(EvalError::PowDomain {
            x,
            value: base.value(),
        });
    }
    let e = exponent.jet(x)?;
    Ok(base.powf(&e))
}

impl fmt::Display for Expr {
    /// Fully parenthesized form; re-parsing it yields the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var => write!(f, "x"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
