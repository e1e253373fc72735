//! Coefficient scalars for the series engine.
//!
//! Everything downstream of [`crate::series`] is generic over [`Scalar`],
//! with two implementations: [`CycRat`] (exact cyclotomic rationals, the
//! default domain) and [`C64`] (complex floats, used by the numeric
//! evaluation paths). Concrete series aliases live at the crate root.

use num_complex::Complex64;
use num_rational::{BigRational, Ratio};

use crate::cyclotomic::CycRat;
use crate::error::Result;

/// Ring-with-inverses interface needed by the series kernel.
pub trait Scalar: Clone + PartialEq + std::fmt::Display + std::fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplicative inverse; errors on zero (and only on zero: both
    /// implementations are fields).
    fn inv(&self) -> Result<Self>;
    fn from_rational(r: &BigRational) -> Self;
    /// e^{2 pi i a} for a rational a.
    fn root_of_unity(a: Ratio<i64>) -> Self;
    /// Embedding into complex floats (identity for [`C64`]).
    fn to_c64(&self) -> Complex64;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(v.into()))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&BigRational::new(num.into(), den.into()))
    }
}

impl Scalar for CycRat {
    fn zero() -> Self {
        CycRat::zero()
    }
    fn one() -> Self {
        CycRat::one()
    }
    fn is_zero(&self) -> bool {
        CycRat::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        CycRat::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        CycRat::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        CycRat::mul(self, other)
    }
    fn neg(&self) -> Self {
        CycRat::neg(self)
    }
    fn inv(&self) -> Result<Self> {
        CycRat::inv(self)
    }
    fn from_rational(r: &BigRational) -> Self {
        CycRat::from_rational(r.clone())
    }
    fn root_of_unity(a: Ratio<i64>) -> Self {
        CycRat::exp_2pi_i(&a)
    }
    fn to_c64(&self) -> Complex64 {
        self.embed()
    }
}

/// Complex floats as a series scalar.
///
/// Only exact zeros are pruned; no epsilon cleanup happens inside the
/// kernel, so numeric answers degrade gracefully instead of silently.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct C64(pub Complex64);

impl std::fmt::Display for C64 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:+e}{:+e}i", self.0.re, self.0.im)
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64(Complex64::new(0.0, 0.0))
    }
    fn one() -> Self {
        C64(Complex64::new(1.0, 0.0))
    }
    fn is_zero(&self) -> bool {
        self.0.re == 0.0 && self.0.im == 0.0
    }
    fn add(&self, other: &Self) -> Self {
        C64(self.0 + other.0)
    }
    fn sub(&self, other: &Self) -> Self {
        C64(self.0 - other.0)
    }
    fn mul(&self, other: &Self) -> Self {
        C64(self.0 * other.0)
    }
    fn neg(&self) -> Self {
        C64(-self.0)
    }
    fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(crate::error::Error::ZeroDivision("1/0 in C64".into()));
        }
        Ok(C64(self.0.inv()))
    }
    fn from_rational(r: &BigRational) -> Self {
        C64(Complex64::new(crate::cyclotomic::rat_to_f64(r), 0.0))
    }
    fn root_of_unity(a: Ratio<i64>) -> Self {
        let t = std::f64::consts::TAU * (*a.numer() as f64) / (*a.denom() as f64);
        C64(Complex64::new(t.cos(), t.sin()))
    }
    fn to_c64(&self) -> Complex64 {
        self.0
    }
}
