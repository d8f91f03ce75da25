//! Exact computation of cylinder-intersection norms for number-on-the-forehead
//! communication complexity.
//!
//! Everything is computed over exact rationals: the norm `mu` and its
//! approximate variants, the dual norm `mu*`, discrepancy, approximate degree
//! of Boolean functions with dual-polynomial witnesses, pattern tensors, and
//! auditable lower-bound certificates. Floating point only shows up when a
//! value is rendered for humans.

pub mod approxdeg;
pub mod boolfun;
pub mod certify;
pub mod cylinders;
mod error;
pub mod limits;
pub mod lp;
pub mod norms;
pub mod pattern;
pub mod rational;
pub mod tensors;

pub use error::{Error, Result};
pub use limits::Limits;
pub use rational::Rational;
