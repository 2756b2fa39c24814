// NaN-rejecting `!(x > 0.0)` guards and full-precision reference constants are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod abel;
pub mod ad_system;
pub mod config;
pub mod error;
pub mod integrator;
pub mod kinetics;
pub mod numdiff;
pub mod quadrature;
pub mod roots;
pub mod special;
pub mod canonical;
pub mod harness;
