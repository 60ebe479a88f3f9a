//! Quantum- and thermally-corrected effective action for a one-dimensional
//! particle with coordinate-dependent mass.
//!
//! The crate is organized bottom-up:
//!
//! - [`expr`]: expressions in `x` with order-4 jet evaluation
//! - [`model`]: validated problem definition
//! - [`effective`]: local derivative-expansion coefficients, smearing, widths
//! - [`variational`]: self-consistent trial frequency, variational potential, tables
//! - [`dynamics`]: classical and effective equations of motion
//! - [`oracle`]: independent brute-force validators
//! - [`cli`]: config files, CSV output and the command implementations

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod effective;
pub mod expr;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod variational;
