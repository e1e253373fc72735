//! Exact arithmetic in cyclotomic fields Q(zeta_N).
//!
//! An element is a vector of rationals of length deg Phi_N, reduced modulo
//! the N-th cyclotomic polynomial, so the representation is canonical and
//! the arithmetic is honest field arithmetic. Elements that happen to be
//! rational are demoted to conductor 1, which keeps the common case (plain
//! rational coefficients) cheap; mixed-conductor operations lift both sides
//! to the lcm.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

type Poly = Vec<BigRational>;

fn rat_i64(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Euler's totient, by trial division (conductors here are tiny).
pub fn euler_phi(n: u32) -> u32 {
    let mut n = n;
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Coefficients of the N-th cyclotomic polynomial, ascending degree.
///
/// Computed as (x^n - 1) / prod_{d | n, d < n} Phi_d with exact integer
/// division; the recursion bottoms out at Phi_1 = x - 1.
fn cyclotomic_int(n: u32) -> Vec<BigInt> {
    if n == 1 {
        return vec![BigInt::from(-1), BigInt::from(1)];
    }
    // x^n - 1
    let mut num = vec![BigInt::zero(); n as usize + 1];
    num[0] = BigInt::from(-1);
    num[n as usize] = BigInt::one();
    for d in 1..n {
        if n % d == 0 {
            let phi_d = cyclotomic_int(d);
            num = int_poly_exact_div(&num, &phi_d);
        }
    }
    num
}

/// Exact division of integer polynomials (panics if not exact, which cannot
/// happen for cyclotomic inputs).
fn int_poly_exact_div(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let dn = num.len() - 1;
    let dd = den.len() - 1;
    assert!(dn >= dd);
    let mut rem: Vec<BigInt> = num.to_vec();
    let mut quot = vec![BigInt::zero(); dn - dd + 1];
    for k in (0..=dn - dd).rev() {
        let c = rem[k + dd].clone() / den[dd].clone();
        quot[k] = c.clone();
        for i in 0..=dd {
            let t = &den[i] * &c;
            rem[k + i] -= t;
        }
    }
    assert!(rem.iter().all(|c| c.is_zero()), "non-exact division");
    quot
}

/// Precomputed reduction data for one conductor.
struct CycBasis {
    n: u32,
    phi: usize,
    /// zeta^k expressed in the power basis, for k = 0..n.
    zeta_pow: Vec<Poly>,
    /// Phi_n coefficients as rationals, ascending, monic.
    modulus: Poly,
}

impl CycBasis {
    fn new(n: u32) -> Self {
        let phi = euler_phi(n) as usize;
        let modulus: Poly = cyclotomic_int(n)
            .into_iter()
            .map(BigRational::from_integer)
            .collect();
        // x^k mod Phi_n for k = 0..n, built incrementally.
        let mut zeta_pow: Vec<Poly> = Vec::with_capacity(n as usize);
        let mut cur = vec![BigRational::zero(); phi];
        cur[0] = BigRational::one();
        for _ in 0..n {
            zeta_pow.push(cur.clone());
            // multiply by x, reduce the overflow of x^phi.
            let top = cur[phi - 1].clone();
            for i in (1..phi).rev() {
                cur[i] = cur[i - 1].clone();
            }
            cur[0] = BigRational::zero();
            if !top.is_zero() {
                for i in 0..phi {
                    let adj = &modulus[i] * &top;
                    cur[i] -= adj;
                }
            }
        }
        CycBasis { n, phi, zeta_pow, modulus }
    }
}

fn basis(n: u32) -> Arc<CycBasis> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<CycBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard.entry(n).or_insert_with(|| Arc::new(CycBasis::new(n))).clone()
}

/// An element of Q(zeta_N), stored reduced modulo Phi_N.
///
/// Conductor 1 is a plain rational; construction and arithmetic demote to
/// conductor 1 whenever the value is rational.
#[derive(Clone, PartialEq, Eq)]
pub struct CycRat {
    n: u32,
    c: Vec<BigRational>,
}

impl CycRat {
    pub fn zero() -> Self {
        CycRat { n: 1, c: vec![BigRational::zero()] }
    }

    pub fn one() -> Self {
        CycRat { n: 1, c: vec![BigRational::one()] }
    }

    pub fn from_rational(r: BigRational) -> Self {
        CycRat { n: 1, c: vec![r] }
    }

    pub fn from_i64(v: i64) -> Self {
        Self::from_rational(rat_i64(v))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// zeta_n^k, reduced (conductor may drop, e.g. zeta_2 = -1).
    pub fn root_of_unity(n: u32, k: i64) -> Self {
        assert!(n > 0);
        let k = k.rem_euclid(n as i64) as u32;
        let b = basis(n);
        CycRat { n, c: b.zeta_pow[k as usize].clone() }.demoted()
    }

    /// e^{2 pi i a} for rational a, landing in Q(zeta_denominator).
    pub fn exp_2pi_i(a: &num_rational::Ratio<i64>) -> Self {
        let den = *a.denom();
        let num = *a.numer();
        Self::root_of_unity(den as u32, num)
    }

    pub fn conductor(&self) -> u32 {
        self.n
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    pub fn is_rational(&self) -> bool {
        self.n == 1
    }

    /// The rational value, if the element is rational.
    pub fn as_rational(&self) -> Option<&BigRational> {
        if self.n == 1 {
            Some(&self.c[0])
        } else {
            None
        }
    }

    fn demoted(self) -> Self {
        if self.n != 1 && self.c[1..].iter().all(|x| x.is_zero()) {
            CycRat { n: 1, c: vec![self.c[0].clone()] }
        } else {
            self
        }
    }

    /// Re-express in Q(zeta_m); requires n | m.
    pub fn lift(&self, m: u32) -> Self {
        if self.n == m {
            return self.clone();
        }
        assert!(m % self.n == 0, "lift {} -> {} is not an inclusion", self.n, m);
        let b = basis(m);
        let step = (m / self.n) as usize;
        let mut out = vec![BigRational::zero(); b.phi];
        for (i, ci) in self.c.iter().enumerate() {
            if ci.is_zero() {
                continue;
            }
            let row = &b.zeta_pow[(i * step) % m as usize];
            for (o, r) in out.iter_mut().zip(row) {
                *o += ci * r;
            }
        }
        CycRat { n: m, c: out }
    }

    fn unify(a: &Self, b: &Self) -> (Self, Self, u32) {
        if a.n == b.n {
            return (a.clone(), b.clone(), a.n);
        }
        let m = (a.n as u64).lcm(&(b.n as u64)) as u32;
        (a.lift(m), b.lift(m), m)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (mut a, b, _) = Self::unify(self, other);
        for (x, y) in a.c.iter_mut().zip(&b.c) {
            *x += y;
        }
        a.demoted()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let (mut a, b, _) = Self::unify(self, other);
        for (x, y) in a.c.iter_mut().zip(&b.c) {
            *x -= y;
        }
        a.demoted()
    }

    pub fn neg(&self) -> Self {
        CycRat { n: self.n, c: self.c.iter().map(|x| -x).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        // rational fast paths
        if self.n == 1 {
            if self.c[0].is_zero() {
                return Self::zero();
            }
            let mut out = other.clone();
            for x in out.c.iter_mut() {
                *x *= &self.c[0];
            }
            return out;
        }
        if other.n == 1 {
            return other.mul(self);
        }
        let (a, b, m) = Self::unify(self, other);
        let bas = basis(m);
        let phi = bas.phi;
        let mut conv = vec![BigRational::zero(); 2 * phi - 1];
        for (i, ai) in a.c.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.c.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                conv[i + j] += ai * bj;
            }
        }
        // reduce x^{phi..} using zeta powers (k < n always holds: 2phi-2 < n
        // can fail, e.g. n = 3, phi = 2, 2phi-2 = 2 < 3 ok; in general
        // 2phi - 2 may exceed n, so reduce exponents mod n first via
        // zeta^n = 1).
        let mut out = vec![BigRational::zero(); phi];
        for (k, ck) in conv.into_iter().enumerate() {
            if ck.is_zero() {
                continue;
            }
            if k < phi {
                out[k] += ck;
            } else {
                let row = &bas.zeta_pow[k % m as usize];
                for (o, r) in out.iter_mut().zip(row) {
                    *o += &ck * r;
                }
            }
        }
        CycRat { n: m, c: out }.demoted()
    }

    /// Multiplicative inverse; errors on zero.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroDivision("inverse of zero".into()));
        }
        if self.n == 1 {
            return Ok(CycRat { n: 1, c: vec![self.c[0].recip()] });
        }
        let bas = basis(self.n);
        // extended Euclid in Q[x]: u * self + v * Phi = 1.
        let u = poly_ext_gcd_inverse(&self.c, &bas.modulus)?;
        let mut c = u;
        c.resize(bas.phi, BigRational::zero());
        Ok(CycRat { n: self.n, c }.demoted())
    }

    /// Numeric embedding zeta_N -> e^{2 pi i / N}.
    pub fn embed(&self) -> num_complex::Complex64 {
        use std::f64::consts::TAU;
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for (i, ci) in self.c.iter().enumerate() {
            if ci.is_zero() {
                continue;
            }
            let arg = TAU * (i as f64) / (self.n as f64);
            let v = rat_to_f64(ci);
            acc += num_complex::Complex64::new(arg.cos(), arg.sin()) * v;
        }
        acc
    }
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    // ToPrimitive on BigRational is exact enough for our desk-scale values.
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Returns u with u*a = 1 mod m (m monic, gcd(a, m) = 1 in Q[x]).
fn poly_ext_gcd_inverse(a: &Poly, m: &Poly) -> Result<Poly> {
    // classic iterative extended Euclid on (m, a), tracking only the
    // cofactor of a.
    let trim = |p: &mut Poly| {
        while p.len() > 1 && p.last().unwrap().is_zero() {
            p.pop();
        }
    };
    let mut r0 = m.clone();
    let mut r1 = a.clone();
    trim(&mut r0);
    trim(&mut r1);
    let mut t0: Poly = vec![BigRational::zero()];
    let mut t1: Poly = vec![BigRational::one()];
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, r) = poly_divmod(&r0, &r1);
        let t = poly_sub(&t0, &poly_mul(&q, &t1));
        r0 = r1;
        r1 = r;
        trim(&mut r1);
        t0 = t1;
        t1 = t;
    }
    // r0 is the gcd, a nonzero constant for a unit mod Phi.
    if r0.len() != 1 || r0[0].is_zero() {
        return Err(Error::ZeroDivision("element not invertible mod Phi_N".into()));
    }
    let scale = r0[0].recip();
    Ok(t0.into_iter().map(|c| c * &scale).collect())
}

fn poly_divmod(num: &Poly, den: &Poly) -> (Poly, Poly) {
    let dd = den.len() - 1;
    if num.len() - 1 < dd || (num.len() == 1 && num[0].is_zero()) {
        return (vec![BigRational::zero()], num.clone());
    }
    let mut rem = num.clone();
    let mut quot = vec![BigRational::zero(); num.len() - dd];
    let lead = den[dd].recip();
    for k in (0..=num.len() - 1 - dd).rev() {
        let c = &rem[k + dd] * &lead;
        if c.is_zero() {
            continue;
        }
        quot[k] = c.clone();
        for i in 0..=dd {
            let t = &den[i] * &c;
            rem[k + i] -= t;
        }
    }
    rem.truncate(dd.max(1));
    (quot, rem)
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_sub(a: &Poly, b: &Poly) -> Poly {
    let mut out = a.clone();
    if out.len() < b.len() {
        out.resize(b.len(), BigRational::zero());
    }
    for (i, bi) in b.iter().enumerate() {
        out[i] -= bi;
    }
    out
}

impl fmt::Display for CycRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n == 1 {
            return write!(f, "{}", self.c[0]);
        }
        let mut parts: Vec<String> = Vec::new();
        for (i, ci) in self.c.iter().enumerate() {
            if ci.is_zero() {
                continue;
            }
            let gen = if i == 0 {
                String::new()
            } else if i == 1 {
                format!("z{}", self.n)
            } else {
                format!("z{}^{}", self.n, i)
            };
            let body = if i == 0 {
                format!("{}", ci)
            } else if ci.is_one() {
                gen
            } else if (-ci).is_one() {
                format!("-{}", gen)
            } else {
                format!("{}*{}", ci, gen)
            };
            if parts.is_empty() {
                parts.push(body);
            } else if body.starts_with('-') {
                parts.push(format!(" - {}", &body[1..]));
            } else {
                parts.push(format!(" + {}", body));
            }
        }
        if parts.is_empty() {
            return write!(f, "0");
        }
        write!(f, "({})", parts.concat())
    }
}

impl fmt::Debug for CycRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
    }

    #[test]
    fn cyclotomic_polynomials_match_known_tables() {
        let as_i64 = |n: u32| -> Vec<i64> {
            cyclotomic_int(n).iter().map(|c| i64::try_from(c).unwrap()).collect()
        };
        assert_eq!(as_i64(1), vec![-1, 1]);
        assert_eq!(as_i64(2), vec![1, 1]);
        assert_eq!(as_i64(3), vec![1, 1, 1]);
        assert_eq!(as_i64(4), vec![1, 0, 1]);
        assert_eq!(as_i64(6), vec![1, -1, 1]);
        assert_eq!(as_i64(8), vec![1, 0, 0, 0, 1]);
        assert_eq!(as_i64(12), vec![1, 0, -1, 0, 1]);
        assert_eq!(as_i64(24), vec![1, 0, 0, 0, -1, 0, 0, 0, 1]);
    }

    #[test]
    fn conductor_two_degenerates_to_rationals() {
        let z = CycRat::root_of_unity(2, 1);
        assert!(z.is_rational());
        assert_eq!(z, CycRat::from_i64(-1));
        assert_eq!(CycRat::root_of_unity(1, 0), CycRat::one());
    }

    #[test]
    fn roots_of_unity_multiply_by_adding_exponents() {
        for n in [3u32, 4, 6, 8, 12, 24] {
            let z = CycRat::root_of_unity(n, 1);
            let mut acc = CycRat::one();
            for k in 1..=n as i64 {
                acc = acc.mul(&z);
                assert_eq!(acc, CycRat::root_of_unity(n, k), "n={} k={}", n, k);
            }
            assert_eq!(acc, CycRat::one(), "zeta_{}^{} = 1", n, n);
        }
    }

    #[test]
    fn sum_of_all_nth_roots_vanishes() {
        for n in [3u32, 4, 5, 6, 8, 12] {
            let mut acc = CycRat::zero();
            for k in 0..n as i64 {
                acc = acc.add(&CycRat::root_of_unity(n, k));
            }
            assert!(acc.is_zero(), "sum of {}-th roots", n);
        }
    }

    #[test]
    fn field_inverse_round_trips() {
        let a = CycRat::root_of_unity(12, 5)
            .add(&CycRat::from_ratio(3, 2))
            .sub(&CycRat::root_of_unity(12, 2).mul(&CycRat::from_i64(2)));
        let inv = a.inv().unwrap();
        assert_eq!(a.mul(&inv), CycRat::one());
        assert!(CycRat::zero().inv().is_err());
    }

    #[test]
    fn mixed_conductor_arithmetic_lifts_to_lcm() {
        let a = CycRat::root_of_unity(3, 1);
        let b = CycRat::root_of_unity(4, 1);
        let prod = a.mul(&b);
        // zeta_3 * zeta_4 = zeta_12^{4+3}
        assert_eq!(prod, CycRat::root_of_unity(12, 7));
        assert!(close(prod.embed(), a.embed() * b.embed(), 1e-12));
    }

    #[test]
    fn embedding_is_a_field_homomorphism() {
        let a = CycRat::root_of_unity(8, 3).add(&CycRat::from_ratio(1, 3));
        let b = CycRat::root_of_unity(6, 1).sub(&CycRat::from_i64(2));
        assert!(close(a.add(&b).embed(), a.embed() + b.embed(), 1e-12));
        assert!(close(a.mul(&b).embed(), a.embed() * b.embed(), 1e-12));
        assert!(close(a.inv().unwrap().embed(), a.embed().inv(), 1e-12));
    }
}
