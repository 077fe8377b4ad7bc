//! Positive harmonic functions on the integer lattice `Z^d`.
//!
//! A probability measure `mu` on `Z^d` defines harmonic functions
//! `f(x) = sum_y mu(y) f(x + y)`. The positive characters `exp(x.s)` that are
//! harmonic are exactly the points of the level set `{s : Phi_mu(s) = 1}` of
//! the Laplace transform. This crate evaluates `Phi_mu` in the log domain with
//! certified truncation, explores the level set, and runs the experiments
//! around a measure whose level set is not closed.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod harmonic;
pub mod laplace;
pub mod levelset;
pub mod lognum;
pub mod measures;
pub mod real;

pub use error::{Error, Result};
pub use real::Real;

pub type SignedLog = lognum::SignedLog<f64>;
pub type LogAccumulator = lognum::LogAccumulator<f64>;
pub type LatticeMeasure = measures::LatticeMeasure<f64>;
pub type Exponent = measures::Exponent<f64>;
pub type LaplaceResult = laplace::LaplaceResult<f64>;
pub type LaplaceOptions = laplace::LaplaceOptions<f64>;
pub type CharacterMixture = harmonic::CharacterMixture<f64>;
pub type LevelTrace = levelset::LevelTrace<f64>;

pub type SignedLog32 = lognum::SignedLog<f32>;
pub type LatticeMeasure32 = measures::LatticeMeasure<f32>;
pub type Exponent32 = measures::Exponent<f32>;
pub type LaplaceResult32 = laplace::LaplaceResult<f32>;
