//! Truncated multivariate Puiseux series in q, y, p and nilpotent
//! cohomology generators.
//!
//! Terms live in a sparse map keyed by exponents; the canonical key order
//! (q, then y, then p, then generator multidegree) makes iteration, text
//! output and minimal-term selection deterministic. All operations truncate
//! to the window: a product term falling outside is discarded, never
//! wrapped. q-exponents are rationals with denominator dividing D and are
//! bounded below by `q_floor` (0 in every formula implemented here),
//! y-exponents are symmetric around 0, p-exponents are small non-negative
//! integers, and nilpotent multidegrees are capped by the ambient dimension
//! (per product factor and in total), since integration only ever reads top
//! degree.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Ratio;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Rat = Ratio<i64>;

pub fn rat(n: i64, d: i64) -> Rat {
    Ratio::new(n, d)
}

// ---------------------------------------------------------------------------
// Nilpotent generator context
// ---------------------------------------------------------------------------

/// Graded nilpotent generators (Chern classes, divisor classes, the formal
/// Chern-root slot). Each generator belongs to a degree group: a product
/// model gets one group per factor, with the factor dimension as group cap.
/// Monomials above a group cap integrate to zero against everything and are
/// dropped eagerly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NilpCtx {
    names: Vec<String>,
    degrees: Vec<u32>,
    groups: Vec<u32>,
    group_caps: Vec<u32>,
    total_cap: u32,
}

impl NilpCtx {
    pub fn empty() -> Arc<Self> {
        Arc::new(NilpCtx {
            names: vec![],
            degrees: vec![],
            groups: vec![],
            group_caps: vec![],
            total_cap: 0,
        })
    }

    /// One degree group holding all generators (a plain manifold model).
    pub fn simple(gens: &[(&str, u32)], cap: u32) -> Arc<Self> {
        Arc::new(NilpCtx {
            names: gens.iter().map(|(n, _)| n.to_string()).collect(),
            degrees: gens.iter().map(|(_, d)| *d).collect(),
            groups: vec![0; gens.len()],
            group_caps: vec![cap],
            total_cap: cap,
        })
    }

    /// A single degree-1 slot variable, used for Chern-root expansions.
    pub fn slot(cap: u32) -> Arc<Self> {
        Self::simple(&[("x", 1)], cap)
    }

    /// Explicit construction with degree groups (product models).
    pub fn grouped(
        names: Vec<String>,
        degrees: Vec<u32>,
        groups: Vec<u32>,
        group_caps: Vec<u32>,
    ) -> Arc<Self> {
        assert_eq!(names.len(), degrees.len());
        assert_eq!(names.len(), groups.len());
        let total_cap = group_caps.iter().sum();
        Arc::new(NilpCtx { names, degrees, groups, group_caps, total_cap })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn total_cap(&self) -> u32 {
        self.total_cap
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn weighted_degree(&self, m: &Monomial) -> u32 {
        m.0.iter()
            .zip(&self.degrees)
            .map(|(e, d)| *e as u32 * d)
            .sum()
    }

    fn mono_in_caps(&self, m: &Monomial) -> bool {
        let mut per_group = vec![0u32; self.group_caps.len()];
        let mut total = 0u32;
        for ((e, d), g) in m.0.iter().zip(&self.degrees).zip(&self.groups) {
            let w = *e as u32 * d;
            per_group[*g as usize] += w;
            total += w;
        }
        total <= self.total_cap
            && per_group.iter().zip(&self.group_caps).all(|(v, c)| v <= c)
    }
}

/// Exponent vector over the generators of a [`NilpCtx`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(SmallVec<[u8; 8]>);

impl Monomial {
    pub fn unit(ctx: &NilpCtx) -> Self {
        Monomial(SmallVec::from_elem(0, ctx.len()))
    }

    pub fn gen(ctx: &NilpCtx, idx: usize) -> Self {
        let mut m = Self::unit(ctx);
        m.0[idx] = 1;
        m
    }

    pub fn from_exponents(exps: &[u8]) -> Self {
        Monomial(SmallVec::from_slice(exps))
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|e| *e == 0)
    }

    fn checked_add(&self, other: &Self) -> Option<Self> {
        let mut out = self.0.clone();
        for (a, b) in out.iter_mut().zip(&other.0) {
            *a = a.checked_add(*b)?;
        }
        Some(Monomial(out))
    }
}

// ---------------------------------------------------------------------------
// Keys and truncation window
// ---------------------------------------------------------------------------

/// Exponent key of one term: (q, y, p, nilpotent multidegree), compared in
/// that order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Key {
    pub q: Rat,
    pub y: Rat,
    pub p: u32,
    pub m: Monomial,
}

impl Key {
    pub fn zero(ctx: &NilpCtx) -> Self {
        Key { q: Rat::from_integer(0), y: Rat::from_integer(0), p: 0, m: Monomial::unit(ctx) }
    }
}

/// Truncation window (D, Q, W, P, degree caps, q_floor). Two series can be
/// combined only when their windows (including the generator context)
/// agree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trunc {
    pub q_max: Rat,
    pub q_floor: Rat,
    pub y_window: Rat,
    pub p_max: u32,
    pub denom: i64,
    pub nilp: Arc<NilpCtx>,
}

impl Trunc {
    pub fn new(q_max: i64, y_window: i64, denom: i64, nilp: Arc<NilpCtx>) -> Self {
        Trunc {
            q_max: Rat::from_integer(q_max),
            q_floor: Rat::from_integer(0),
            y_window: Rat::from_integer(y_window),
            p_max: 0,
            denom,
            nilp,
        }
    }

    pub fn with_p(mut self, p_max: u32) -> Self {
        self.p_max = p_max;
        self
    }

    pub fn with_nilp(mut self, nilp: Arc<NilpCtx>) -> Self {
        self.nilp = nilp;
        self
    }

    /// Whether a key is inside the window and on the exponent grid.
    pub fn contains(&self, k: &Key) -> bool {
        k.q >= self.q_floor
            && k.q <= self.q_max
            && k.y.abs() <= self.y_window
            && k.p <= self.p_max
            && self.on_grid(k)
            && self.nilp.mono_in_caps(&k.m)
    }

    fn on_grid(&self, k: &Key) -> bool {
        self.denom % *k.q.denom() == 0 && self.denom % *k.y.denom() == 0
    }

    /// Conservative bound on how many strictly-positive keys can be
    /// accumulated before leaving the window; used as a safety valve for
    /// Neumann/exp/log iteration.
    fn iteration_cap(&self) -> usize {
        let qs = ((self.q_max - self.q_floor) * Rat::from_integer(self.denom))
            .to_integer()
            .unsigned_abs() as usize;
        let ys = (self.y_window * Rat::from_integer(self.denom)).to_integer().unsigned_abs()
            as usize
            * 2;
        qs + ys + ys * qs + self.p_max as usize + self.nilp.total_cap() as usize + 4
    }
}

// ---------------------------------------------------------------------------
// Series
// ---------------------------------------------------------------------------

/// A truncated Puiseux series with scalar coefficients of type `S`.
///
/// Immutable in spirit: all operations return new values, so sharing across
/// threads is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<S: Scalar> {
    trunc: Trunc,
    terms: BTreeMap<Key, S>,
}

impl<S: Scalar> Series<S> {
    pub fn zero(trunc: &Trunc) -> Self {
        Series { trunc: trunc.clone(), terms: BTreeMap::new() }
    }

    pub fn one(trunc: &Trunc) -> Self {
        Self::constant(trunc, S::one())
    }

    pub fn constant(trunc: &Trunc, c: S) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Key::zero(&trunc.nilp), c);
        }
        Series { trunc: trunc.clone(), terms }
    }

    /// Single term; errors if the key is off-grid. Keys outside the window
    /// yield the zero series (truncation, not an error).
    pub fn term(trunc: &Trunc, key: Key, c: S) -> Result<Self> {
        if !trunc.on_grid(&key) {
            return Err(Error::BadExponent(format!(
                "exponent denominators of q^{} y^{} do not divide D={}",
                key.q, key.y, trunc.denom
            )));
        }
        let mut s = Self::zero(trunc);
        if trunc.contains(&key) && !c.is_zero() {
            s.terms.insert(key, c);
        }
        Ok(s)
    }

    pub fn q_pow(trunc: &Trunc, e: Rat) -> Result<Self> {
        let mut k = Key::zero(&trunc.nilp);
        k.q = e;
        Self::term(trunc, k, S::one())
    }

    pub fn y_pow(trunc: &Trunc, e: Rat) -> Result<Self> {
        let mut k = Key::zero(&trunc.nilp);
        k.y = e;
        Self::term(trunc, k, S::one())
    }

    pub fn p_pow(trunc: &Trunc, e: u32) -> Result<Self> {
        let mut k = Key::zero(&trunc.nilp);
        k.p = e;
        Self::term(trunc, k, S::one())
    }

    pub fn gen(trunc: &Trunc, idx: usize) -> Result<Self> {
        let mut k = Key::zero(&trunc.nilp);
        k.m = Monomial::gen(&trunc.nilp, idx);
        Self::term(trunc, k, S::one())
    }

    pub fn trunc(&self) -> &Trunc {
        &self.trunc
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &S)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&Key::zero(&self.trunc.nilp))
                .map(|c| *c == S::one())
                .unwrap_or(false)
    }

    fn check_compat(&self, other: &Self) -> Result<()> {
        if self.trunc != other.trunc {
            return Err(Error::ParamMismatch(
                "series have different truncation windows".into(),
            ));
        }
        Ok(())
    }

    /// Stored coefficient at `key`, or zero inside the window; querying
    /// outside the window is an error, because the series knows nothing
    /// about truncated-away terms.
    pub fn coefficient(&self, key: &Key) -> Result<S> {
        if !self.trunc.contains(key) {
            return Err(Error::OutOfWindow(format!(
                "q^{} y^{} p^{}",
                key.q, key.y, key.p
            )));
        }
        Ok(self.terms.get(key).cloned().unwrap_or_else(S::zero))
    }

    /// Coefficient of q^a y^b at trivial p and nilpotent part.
    pub fn coeff_qy(&self, a: Rat, b: Rat) -> Result<S> {
        let mut k = Key::zero(&self.trunc.nilp);
        k.q = a;
        k.y = b;
        self.coefficient(&k)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            add_into(&mut out.terms, k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let terms = self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect();
        Series { trunc: self.trunc.clone(), terms }
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero(&self.trunc);
        }
        let terms = self
            .terms
            .iter()
            .map(|(k, v)| (k.clone(), v.mul(c)))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        Series { trunc: self.trunc.clone(), terms }
    }

    /// Window-truncated convolution. Deterministic: exact accumulation into
    /// a key-ordered map is independent of iteration order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compat(other)?;
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out: BTreeMap<Key, S> = BTreeMap::new();
        let t = &self.trunc;
        for (k1, c1) in &small.terms {
            for (k2, c2) in &large.terms {
                let q = k1.q + k2.q;
                if q > t.q_max || q < t.q_floor {
                    continue;
                }
                let y = k1.y + k2.y;
                if y.abs() > t.y_window {
                    continue;
                }
                let p = k1.p + k2.p;
                if p > t.p_max {
                    continue;
                }
                let m = match k1.m.checked_add(&k2.m) {
                    Some(m) if t.nilp.mono_in_caps(&m) => m,
                    _ => continue,
                };
                add_into(&mut out, Key { q, y, p, m }, c1.mul(c2));
            }
        }
        Ok(Series { trunc: t.clone(), terms: out })
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = Self::one(&self.trunc);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Multiplicative inverse via Neumann iteration around the minimal term.
    ///
    /// The minimal term under the canonical order must be invertible: no
    /// nilpotent part, no p part, and a q-exponent whose negative is still
    /// representable. All other expansion is handled by window truncation
    /// (the expansion convention around y = 0 of the genus formulas).
    pub fn invert(&self) -> Result<Self> {
        let (k0, c0) = self
            .terms
            .iter()
            .next()
            .ok_or_else(|| Error::NotInvertible("zero series".into()))?;
        if !k0.m.is_unit() {
            return Err(Error::NotInvertible(format!(
                "minimal term has nilpotent part {:?}",
                k0.m
            )));
        }
        if k0.p != 0 {
            return Err(Error::NotInvertible("minimal term has a p factor".into()));
        }
        if -k0.q < self.trunc.q_floor || -k0.q > self.trunc.q_max {
            return Err(Error::NotInvertible(format!(
                "minimal q-exponent {} cannot be negated in the window",
                k0.q
            )));
        }
        let c0_inv = c0
            .inv()
            .map_err(|_| Error::NotInvertible("leading coefficient is not a unit".into()))?;
        let mut tk = Key::zero(&self.trunc.nilp);
        tk.q = -k0.q;
        tk.y = -k0.y;
        let t_inv = Self::term(&self.trunc, tk, c0_inv)?;
        // r = a / t - 1 has strictly positive keys.
        let r = t_inv.mul(self)?.sub(&Self::one(&self.trunc))?;
        let minus_r = r.neg();
        let mut acc = Self::one(&self.trunc);
        let mut pw = Self::one(&self.trunc);
        let cap = self.trunc.iteration_cap();
        for _ in 0..cap {
            pw = pw.mul(&minus_r)?;
            if pw.is_zero() {
                return acc.mul(&t_inv);
            }
            acc = acc.add(&pw)?;
        }
        Err(Error::NotInvertible(
            "Neumann iteration did not terminate in the window".into(),
        ))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.mul(&other.invert()?)
    }

    /// exp of a series with zero constant term.
    pub fn exp(&self) -> Result<Self> {
        let zk = Key::zero(&self.trunc.nilp);
        if self.terms.contains_key(&zk) {
            return Err(Error::ExpLog("exp needs zero constant term".into()));
        }
        let mut acc = Self::one(&self.trunc).add(self)?;
        let mut pw = self.clone();
        let cap = self.trunc.iteration_cap();
        for k in 2..2 + cap as i64 {
            pw = pw.mul(self)?.scale(&S::from_ratio(1, k));
            if pw.is_zero() {
                return Ok(acc);
            }
            acc = acc.add(&pw)?;
        }
        Err(Error::ExpLog("exp does not terminate in the window".into()))
    }

    /// log of a series with constant term one.
    pub fn log(&self) -> Result<Self> {
        let zk = Key::zero(&self.trunc.nilp);
        if self.terms.get(&zk).map(|c| *c != S::one()).unwrap_or(true) {
            return Err(Error::ExpLog("log needs constant term one".into()));
        }
        let r = self.sub(&Self::one(&self.trunc))?;
        let mut acc = r.clone();
        let mut pw = r.clone();
        let cap = self.trunc.iteration_cap();
        for k in 2..2 + cap as i64 {
            pw = pw.mul(&r)?;
            if pw.is_zero() {
                return Ok(acc);
            }
            let sign = if k % 2 == 0 { -1 } else { 1 };
            acc = acc.add(&pw.scale(&S::from_ratio(sign, k)))?;
        }
        Err(Error::ExpLog("log does not terminate in the window".into()))
    }

    /// Exponent rescaling q -> q^r, y -> y^s for positive rationals r, s.
    /// The result is re-truncated; a denominator leaving the grid is an
    /// error.
    pub fn substitute_scale(&self, r: Rat, s: Rat) -> Result<Self> {
        if r <= Rat::from_integer(0) || s <= Rat::from_integer(0) {
            return Err(Error::BadExponent("scale factors must be positive".into()));
        }
        self.map_exponents(|k| Key { q: k.q * r, y: k.y * s, p: k.p, m: k.m.clone() })
    }

    /// y -> y^{-1}; used for parity checks.
    pub fn y_flip(&self) -> Self {
        self.map_exponents(|k| Key { q: k.q, y: -k.y, p: k.p, m: k.m.clone() })
            .expect("y-flip stays on grid")
    }

    fn map_exponents(&self, f: impl Fn(&Key) -> Key) -> Result<Self> {
        let mut out = Self::zero(&self.trunc);
        for (k, c) in &self.terms {
            let nk = f(k);
            if !self.trunc.on_grid(&nk) {
                return Err(Error::BadExponent(format!(
                    "rescaled exponent q^{} y^{} leaves the 1/{} grid",
                    nk.q, nk.y, self.trunc.denom
                )));
            }
            if self.trunc.contains(&nk) {
                add_into(&mut out.terms, nk, c.clone());
            }
        }
        Ok(out)
    }

    /// Root-of-unity comb: keeps terms whose q-exponent is an integer
    /// divisible by j, divides that exponent by j, and scales by j. This is
    /// the exact form of sum_{s=0}^{j-1} e^{2 pi i m s / j} = j [j | m].
    pub fn comb_select(&self, j: u32) -> Result<Self> {
        if j == 0 {
            return Err(Error::BadExponent("comb divisor must be positive".into()));
        }
        if j == 1 {
            return Ok(self.clone());
        }
        let jr = Rat::from_integer(j as i64);
        let scale = S::from_i64(j as i64);
        let mut out = Self::zero(&self.trunc);
        for (k, c) in &self.terms {
            if !k.q.is_integer() || k.q.numer() % (j as i64) != 0 {
                continue;
            }
            let nk = Key { q: k.q / jr, y: k.y, p: k.p, m: k.m.clone() };
            if self.trunc.contains(&nk) {
                add_into(&mut out.terms, nk, c.mul(&scale));
            }
        }
        Ok(out)
    }

    /// Re-truncate into a sub-window of the current one.
    pub fn truncate_to(&self, t: &Trunc) -> Result<Self> {
        if t.q_max > self.trunc.q_max
            || t.q_floor < self.trunc.q_floor
            || t.y_window > self.trunc.y_window
            || t.p_max > self.trunc.p_max
            || t.nilp != self.trunc.nilp
        {
            return Err(Error::ParamMismatch(
                "truncate_to requires a sub-window with the same generators".into(),
            ));
        }
        let mut out = Self::zero(t);
        for (k, c) in &self.terms {
            if t.contains(k) {
                out.terms.insert(k.clone(), c.clone());
            }
        }
        Ok(out)
    }

    /// Restrict to terms selected by a key predicate (same window).
    pub fn filter(&self, pred: impl Fn(&Key) -> bool) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(k, _)| pred(k))
            .map(|(k, c)| (k.clone(), c.clone()))
            .collect();
        Series { trunc: self.trunc.clone(), terms }
    }

    /// Map coefficients into another scalar type (e.g. exact -> complex).
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Series<T> {
        let terms = self
            .terms
            .iter()
            .map(|(k, c)| (k.clone(), f(c)))
            .filter(|(_, c): &(Key, T)| !c.is_zero())
            .collect();
        Series { trunc: self.trunc.clone(), terms }
    }

    /// Numeric evaluation at q = e^{2 pi i tau}, y = e^{2 pi i z}, with
    /// given values for p and the nilpotent generators (the truncated
    /// series is evaluated as a plain polynomial in those).
    pub fn eval_c64(&self, z: Complex64, tau: Complex64, gens: &[Complex64], p: Complex64) -> Complex64 {
        let tau_2pi_i = Complex64::new(0.0, std::f64::consts::TAU) * tau;
        let z_2pi_i = Complex64::new(0.0, std::f64::consts::TAU) * z;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in &self.terms {
            let mut v = c.to_c64();
            let qe = rat_f64(k.q);
            let ye = rat_f64(k.y);
            v *= (tau_2pi_i * qe + z_2pi_i * ye).exp();
            if k.p > 0 {
                v *= p.powu(k.p);
            }
            for (g, e) in gens.iter().zip(k.m.exponents()) {
                if *e > 0 {
                    v *= g.powu(*e as u32);
                }
            }
            acc += v;
        }
        acc
    }

    /// Canonical sorted text form, one term per line (the golden-file
    /// format): `coeff * q^(a) y^(b) p^c gen^d ...`.
    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return "0\n".into();
        }
        let mut out = String::new();
        for (k, c) in &self.terms {
            let mut factors: Vec<String> = Vec::new();
            if k.q != Rat::from_integer(0) {
                factors.push(format!("q^({})", k.q));
            }
            if k.y != Rat::from_integer(0) {
                factors.push(format!("y^({})", k.y));
            }
            if k.p > 0 {
                factors.push(format!("p^{}", k.p));
            }
            for (name, e) in self.trunc.nilp.names().iter().zip(k.m.exponents()) {
                match e {
                    0 => {}
                    1 => factors.push(name.clone()),
                    _ => factors.push(format!("{}^{}", name, e)),
                }
            }
            if factors.is_empty() {
                let _ = writeln!(out, "{}", c);
            } else {
                let _ = writeln!(out, "{} * {}", c, factors.join(" "));
            }
        }
        out
    }
}

fn rat_f64(r: Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn add_into<S: Scalar>(map: &mut BTreeMap<Key, S>, k: Key, c: S) {
    if c.is_zero() {
        return;
    }
    match map.entry(k) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            let sum = e.get().add(&c);
            if sum.is_zero() {
                e.remove();
            } else {
                *e.get_mut() = sum;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::CycRat;

    type S = Series<CycRat>;

    fn t(q: i64, w: i64, d: i64) -> Trunc {
        Trunc::new(q, w, d, NilpCtx::empty())
    }

    fn qpow(tr: &Trunc, n: i64, d: i64) -> S {
        S::q_pow(tr, rat(n, d)).unwrap()
    }

    fn ypow(tr: &Trunc, n: i64, d: i64) -> S {
        S::y_pow(tr, rat(n, d)).unwrap()
    }

    #[test]
    fn additive_identity_and_simple_sum() {
        let tr = t(6, 6, 1);
        let s = S::one(&tr).add(&qpow(&tr, 2, 1)).unwrap();
        assert_eq!(s.add(&S::zero(&tr)).unwrap(), s);
        // (1+q) + (1-q) = 2
        let a = S::one(&tr).add(&qpow(&tr, 1, 1)).unwrap();
        let b = S::one(&tr).sub(&qpow(&tr, 1, 1)).unwrap();
        assert_eq!(a.add(&b).unwrap(), S::constant(&tr, CycRat::from_i64(2)));
    }

    #[test]
    fn mismatched_windows_are_rejected() {
        let a = S::one(&t(4, 6, 1));
        let b = S::one(&t(6, 6, 1));
        assert!(matches!(a.add(&b), Err(Error::ParamMismatch(_))));
        assert!(matches!(a.mul(&b), Err(Error::ParamMismatch(_))));
    }

    #[test]
    fn geometric_series_inverts_one_minus_qy() {
        let tr = t(8, 8, 1);
        let qy = qpow(&tr, 1, 1).mul(&ypow(&tr, 1, 1)).unwrap();
        let f = S::one(&tr).sub(&qy).unwrap();
        let inv = f.invert().unwrap();
        // sum_{k} q^k y^k inside the window
        for k in 0..=8 {
            assert_eq!(
                inv.coeff_qy(rat(k, 1), rat(k, 1)).unwrap(),
                CycRat::one(),
                "k={}",
                k
            );
        }
        assert!(f.mul(&inv).unwrap().is_one());
    }

    #[test]
    fn invert_one_minus_q_gives_full_comb() {
        let tr = t(7, 2, 1);
        let f = S::one(&tr).sub(&qpow(&tr, 1, 1)).unwrap();
        let inv = f.invert().unwrap();
        for k in 0..=7 {
            assert_eq!(inv.coeff_qy(rat(k, 1), rat(0, 1)).unwrap(), CycRat::one());
        }
        assert_eq!(inv.len(), 8);
        assert!(S::one(&tr).invert().unwrap().is_one());
    }

    #[test]
    fn invert_reduced_sine_factor_expands_around_y_zero() {
        // 1/(y^{1/2} - y^{-1/2}) = -y^{1/2} (1 + y + y^2 + ...), the Laurent
        // expansion around y = 0; checked against a float evaluation below.
        let tr = t(2, 9, 2);
        let f = ypow(&tr, 1, 2).sub(&ypow(&tr, -1, 2)).unwrap();
        let inv = f.invert().unwrap();
        for k in 0..=8 {
            assert_eq!(
                inv.coeff_qy(rat(0, 1), rat(2 * k + 1, 2)).unwrap(),
                CycRat::from_i64(-1),
                "coefficient of y^{}/2",
                2 * k + 1
            );
        }
        // the round trip is exact away from the y-window edge: the last kept
        // term of the inverse times y^{1/2} parks a remainder on the edge.
        let inner = t(2, 8, 2);
        assert_eq!(
            f.mul(&inv).unwrap().truncate_to(&inner).unwrap(),
            S::one(&inner)
        );
        // float check at y = 0.3 (q irrelevant): 1/(y^{1/2}-y^{-1/2})
        let y: f64 = 0.3;
        let exact = 1.0 / (y.sqrt() - 1.0 / y.sqrt());
        let approx: f64 = (0..=8).map(|k| -y.sqrt() * y.powi(k)).sum();
        assert!((exact - approx).abs() < 1e-4, "{} vs {}", exact, approx);
    }

    #[test]
    fn exp_log_round_trip_and_known_log() {
        let tr = t(6, 4, 1).with_p(4);
        // log(1 - pq) = -sum (pq)^k / k
        let pq = qpow(&tr, 1, 1).mul(&S::p_pow(&tr, 1).unwrap()).unwrap();
        let f = S::one(&tr).sub(&pq).unwrap();
        let lg = f.log().unwrap();
        for k in 1..=4u32 {
            let mut key = Key::zero(&tr.nilp);
            key.q = rat(k as i64, 1);
            key.p = k;
            assert_eq!(
                lg.coefficient(&key).unwrap(),
                CycRat::from_ratio(-1, k as i64),
                "k={}",
                k
            );
        }
        assert_eq!(lg.exp().unwrap(), f);
        let back = S::one(&tr).add(&pq).unwrap().log().unwrap().exp().unwrap();
        assert_eq!(back, S::one(&tr).add(&pq).unwrap());
        assert!(S::zero(&tr).exp().unwrap().is_one());
    }

    #[test]
    fn exp_product_identity_on_a_small_coefficient_table() {
        // exp(-sum_{j,m,l,k} c(m j, l) (p^j y^l q^m)^k / k) equals
        // prod (1 - p^j y^l q^m)^{-c(m j, l)} for a small table c.
        let tr = t(4, 6, 1).with_p(3);
        let table: Vec<(i64, i64, i64)> = vec![(0, -1, 2), (1, 0, 3), (1, 1, -2), (2, 0, 1)];
        // arg = sum over j and (m,l) of c(m j, l) * -log(1 - p^j y^l q^m),
        // assembled by hand as sum_k (p^j y^l q^m)^k / k.
        let mut arg = S::zero(&tr);
        let mut product = S::one(&tr);
        for j in 1..=3i64 {
            for (m, l, c) in &table {
                // c is read at (m * j, l): same table, scaled index.
                let mj = m * j;
                let cv = table
                    .iter()
                    .find(|(a, b, _)| *a == mj && b == l)
                    .map(|(_, _, v)| *v)
                    .unwrap_or(if mj == *m { *c } else { 0 });
                if cv == 0 {
                    continue;
                }
                let base = S::p_pow(&tr, j as u32)
                    .unwrap()
                    .mul(&ypow(&tr, *l, 1))
                    .unwrap()
                    .mul(&qpow(&tr, *m, 1))
                    .unwrap();
                let mut pw = base.clone();
                let mut k = 1i64;
                while !pw.is_zero() {
                    arg = arg
                        .add(&pw.scale(&CycRat::from_ratio(cv, k)))
                        .unwrap();
                    pw = pw.mul(&base).unwrap();
                    k += 1;
                }
                let factor = S::one(&tr).sub(&base).unwrap();
                let powed = if cv < 0 {
                    factor.pow((-cv) as u32).unwrap()
                } else {
                    factor.invert().unwrap().pow(cv as u32).unwrap()
                };
                product = product.mul(&powed).unwrap();
            }
        }
        assert_eq!(arg.exp().unwrap(), product);
    }

    #[test]
    fn substitute_scale_examples_and_round_trip() {
        let tr = t(6, 8, 2);
        let s = ypow(&tr, 1, 1).add(&ypow(&tr, -1, 1)).unwrap();
        assert_eq!(s.substitute_scale(rat(1, 1), rat(1, 1)).unwrap(), s);
        let doubled = s.substitute_scale(rat(1, 1), rat(2, 1)).unwrap();
        assert_eq!(doubled, ypow(&tr, 2, 1).add(&ypow(&tr, -2, 1)).unwrap());
        // q -> q^{1/2} then q -> q^2 is the identity on a random-ish series
        let f = S::one(&tr)
            .add(&qpow(&tr, 1, 1).scale(&CycRat::from_i64(3)))
            .unwrap()
            .add(&qpow(&tr, 3, 1).mul(&ypow(&tr, -2, 1)).unwrap())
            .unwrap();
        let rt = f
            .substitute_scale(rat(1, 2), rat(1, 1))
            .unwrap()
            .substitute_scale(rat(2, 1), rat(1, 1))
            .unwrap();
        assert_eq!(rt, f);
        // denominator overflow is an error
        assert!(matches!(
            f.substitute_scale(rat(1, 4), rat(1, 1)),
            Err(Error::BadExponent(_))
        ));
    }

    #[test]
    fn comb_select_examples() {
        let tr = t(6, 2, 1);
        let s = qpow(&tr, 1, 1)
            .add(&qpow(&tr, 2, 1))
            .unwrap()
            .add(&qpow(&tr, 3, 1))
            .unwrap();
        assert_eq!(s.comb_select(1).unwrap(), s);
        let picked = s.comb_select(2).unwrap();
        assert_eq!(
            picked,
            qpow(&tr, 1, 1).scale(&CycRat::from_i64(2))
        );
    }

    #[test]
    fn comb_select_matches_root_of_unity_averaging() {
        // sum_{s=0}^{j-1} (q -> q^{1/j} zeta_j^{-s}) equals comb_select(j),
        // where the root of unity scales each term by zeta_j^{-s m}.
        let base = t(6, 4, 1);
        for j in 2..=4u32 {
            let fine = Trunc::new(6, 4, j as i64, NilpCtx::empty());
            let s = qpow(&base, 1, 1)
                .scale(&CycRat::from_i64(5))
                .add(&qpow(&base, 2, 1).mul(&ypow(&base, 1, 1)).unwrap())
                .unwrap()
                .add(&qpow(&base, 3, 1).scale(&CycRat::from_i64(-7)))
                .unwrap()
                .add(&qpow(&base, 4, 1).mul(&ypow(&base, -3, 1)).unwrap())
                .unwrap();
            let mut averaged = Series::<CycRat>::zero(&fine);
            for sh in 0..j {
                let mut twisted = Series::<CycRat>::zero(&fine);
                for (k, c) in s.terms() {
                    let m = k.q.to_integer();
                    let tw = CycRat::root_of_unity(j, -(sh as i64) * m);
                    let mut nk = k.clone();
                    nk.q = k.q / Rat::from_integer(j as i64);
                    twisted = twisted
                        .add(&Series::term(&fine, nk, c.mul(&tw)).unwrap())
                        .unwrap();
                }
                averaged = averaged.add(&twisted).unwrap();
            }
            // comb_select output lives on the integer grid; re-express the
            // averaged series there for comparison.
            let comb = s.comb_select(j).unwrap();
            for (k, c) in comb.terms() {
                assert_eq!(&averaged.coefficient(k).unwrap(), c, "j={}", j);
            }
            assert_eq!(averaged.len(), comb.len(), "j={}", j);
        }
    }

    #[test]
    fn coefficient_outside_window_errors() {
        let tr = t(4, 4, 1);
        let s = S::one(&tr);
        assert_eq!(
            s.coeff_qy(rat(0, 1), rat(0, 1)).unwrap(),
            CycRat::one()
        );
        assert_eq!(s.coeff_qy(rat(3, 1), rat(1, 1)).unwrap(), CycRat::zero());
        assert!(matches!(
            s.coeff_qy(rat(5, 1), rat(0, 1)),
            Err(Error::OutOfWindow(_))
        ));
    }

    #[test]
    fn truncation_consistency_of_mul() {
        // mul at Q=10 then truncate to Q=5 equals mul at Q=5.
        let big = t(10, 6, 1);
        let small = t(5, 6, 1);
        let a = S::one(&big)
            .add(&qpow(&big, 1, 1).mul(&ypow(&big, 1, 1)).unwrap())
            .unwrap()
            .add(&qpow(&big, 3, 1).scale(&CycRat::from_i64(-2)))
            .unwrap();
        let b = S::one(&big)
            .add(&qpow(&big, 2, 1).mul(&ypow(&big, -1, 1)).unwrap())
            .unwrap()
            .add(&qpow(&big, 4, 1))
            .unwrap();
        let coarse = a.mul(&b).unwrap().truncate_to(&small).unwrap();
        let direct = a
            .truncate_to(&small)
            .unwrap()
            .mul(&b.truncate_to(&small).unwrap())
            .unwrap();
        assert_eq!(coarse, direct);
        // and for add
        let cs = a.add(&b).unwrap().truncate_to(&small).unwrap();
        let ds = a
            .truncate_to(&small)
            .unwrap()
            .add(&b.truncate_to(&small).unwrap())
            .unwrap();
        assert_eq!(cs, ds);
    }

    #[test]
    fn nilpotent_caps_truncate_products() {
        let ctx = NilpCtx::simple(&[("h", 1)], 2);
        let tr = Trunc::new(4, 4, 1, ctx);
        let h = S::gen(&tr, 0).unwrap();
        let h2 = h.mul(&h).unwrap();
        assert_eq!(h2.len(), 1);
        assert!(h2.mul(&h).unwrap().is_zero(), "h^3 exceeds the cap");
    }

    #[test]
    fn canonical_text_form() {
        let ctx = NilpCtx::simple(&[("h", 1)], 2);
        let tr = Trunc::new(4, 4, 2, ctx);
        let s = S::one(&tr)
            .add(&S::gen(&tr, 0).unwrap().scale(&CycRat::from_i64(3)))
            .unwrap()
            .add(
                &S::q_pow(&tr, rat(1, 2))
                    .unwrap()
                    .mul(&S::y_pow(&tr, rat(-1, 1)).unwrap())
                    .unwrap()
                    .scale(&CycRat::from_ratio(-1, 2)),
            )
            .unwrap();
        assert_eq!(s.to_text(), "1\n3 * h\n-1/2 * q^(1/2) y^(-1)\n");
    }
}
