//! Exact computation of two-variable elliptic genera.
//!
//! The crate computes smooth, singular (Kawamata log-terminal pair) and
//! orbifold elliptic genera as truncated q,y-series from declarative
//! geometric models, and verifies the identities tying them together at
//! desk scale: the McKay correspondence for elliptic genera, blowup
//! invariance, the DMVV symmetric-product formula (including its extension
//! to pairs and the Hilbert-scheme corollary), and the toric theta lemmas
//! behind the toroidal pushforward.
//!
//! Layout:
//! - [`cyclotomic`], [`scalar`]: the coefficient domains (exact Q(zeta_N)
//!   and complex floats) behind a common [`scalar::Scalar`] trait;
//! - [`series`]: the truncated Puiseux-series kernel in q, y, p and
//!   nilpotent cohomology generators;
//! - [`theta`]: the reduced Jacobi theta function, its twisted factors, and
//!   a rapidly convergent numeric evaluator;
//! - [`geom`]: manifold models, Chern-root calculus, integration;
//! - [`genus`]: the genus formulas and the McKay / blowup / Jacobi checks;
//! - [`symprod`]: symmetric-product machinery and the DMVV identity;
//! - [`toroidal`]: lattices, fans, piecewise functions, pushforward, and
//!   the toric lemma verifiers;
//! - [`model_io`]: the sectioned text format for models and fans.

pub mod cyclotomic;
pub mod error;
pub mod fixtures;
pub mod genus;
pub mod geom;
pub mod model_io;
pub mod scalar;
pub mod series;
pub mod symprod;
pub mod theta;
pub mod toroidal;

pub use cyclotomic::CycRat;
pub use error::{Error, Result};
pub use scalar::{Scalar, C64};

/// Exact series over cyclotomic rationals: the default coefficient domain.
pub type ExactSeries = series::Series<CycRat>;

/// Series over complex floats, for the numeric evaluation paths.
pub type NumericSeries = series::Series<C64>;
