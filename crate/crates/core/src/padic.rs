//! Capped-precision arithmetic in `Q_p` and in totally ramified extensions
//! `K = Q_p[π]/(E(π))` with `E` Eisenstein.
//!
//! Every [`Qp`] carries its own absolute precision: the value is known modulo
//! `p^prec`. Operations propagate precision with the usual `O(p^k)` rules.
//! A [`LocalField`] fixes a nominal precision `N`; scalars are created with
//! `N` guard digits on top of that, and a zero decision is only accepted when
//! the value is known to vanish modulo `p^N`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub(crate) fn ppow(p: u64, k: i64) -> BigInt {
    debug_assert!(k >= 0);
    num_traits::pow(BigInt::from(p), k as usize)
}

/// Splits `n = p^v * m` with `p ∤ m`. `n` must be nonzero.
fn split_p(n: &BigInt, p: u64) -> (i64, BigInt) {
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            break;
        }
        m = q;
        v += 1;
    }
    (v, m)
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let g = a.extended_gcd(m);
    debug_assert!(g.gcd.is_one() || (-&g.gcd).is_one());
    let x = if g.gcd.is_negative() { -g.x } else { g.x };
    x.mod_floor(m)
}

/// p-adic valuation of a nonzero rational.
pub fn rational_valuation(q: &BigRational, p: u64) -> i64 {
    split_p(q.numer(), p).0 - split_p(q.denom(), p).0
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// An element of `Q_p` known modulo `p^prec`.
///
/// Nonzero values are stored as `p^val * unit` with `p ∤ unit` and
/// `0 < unit < p^(prec - val)`. Zero is stored with `val == prec`.
#[derive(Clone, PartialEq, Eq)]
pub struct Qp {
    p: u64,
    val: i64,
    unit: BigInt,
    prec: i64,
}

impl Qp {
    pub fn zero(p: u64, prec: i64) -> Qp {
        Qp { p, val: prec, unit: BigInt::zero(), prec }
    }

    fn normalized(p: u64, val: i64, raw: BigInt, prec: i64) -> Qp {
        if val >= prec {
            return Qp::zero(p, prec);
        }
        let raw = raw.mod_floor(&ppow(p, prec - val));
        if raw.is_zero() {
            return Qp::zero(p, prec);
        }
        let (v, unit) = split_p(&raw, p);
        Qp { p, val: val + v, unit, prec }
    }

    pub fn from_rational(p: u64, q: &BigRational, prec: i64) -> Qp {
        if q.is_zero() {
            return Qp::zero(p, prec);
        }
        let (vn, un) = split_p(q.numer(), p);
        let (vd, ud) = split_p(q.denom(), p);
        let val = vn - vd;
        if val >= prec {
            return Qp::zero(p, prec);
        }
        let m = ppow(p, prec - val);
        let unit = (un * mod_inverse(&ud, &m)).mod_floor(&m);
        Qp { p, val, unit, prec }
    }

    pub fn from_int(p: u64, n: i64, prec: i64) -> Qp {
        Qp::from_rational(p, &BigRational::from_integer(BigInt::from(n)), prec)
    }

    /// Builds `p^val * Σ digits[i] p^i` known to absolute precision `val + digits.len()`.
    pub fn from_digits(p: u64, val: i64, digits: &[u64]) -> Result<Qp> {
        let mut raw = BigInt::zero();
        for &d in digits.iter().rev() {
            if d >= p {
                return Err(Error::Invalid(format!("digit {d} out of range for p = {p}")));
            }
            raw = raw * BigInt::from(p) + BigInt::from(d);
        }
        Ok(Qp::normalized(p, val, raw, val + digits.len() as i64))
    }

    /// Treats the stored representative as exact and raises the precision to `prec`.
    pub fn lifted(&self, prec: i64) -> Qp {
        if prec <= self.prec {
            return self.clone();
        }
        if self.is_zero() {
            return Qp::zero(self.p, prec);
        }
        Qp { prec, ..self.clone() }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    /// Valuation of a nonzero value, `None` when zero at the tracked precision.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Lower bound for the valuation: the true valuation when nonzero, the precision otherwise.
    pub fn val_bound(&self) -> i64 {
        self.val
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn unit(&self) -> &BigInt {
        &self.unit
    }

    /// Little-endian base-p digits of the unit part; `prec - val` of them.
    pub fn digits(&self) -> Vec<u64> {
        if self.is_zero() {
            return Vec::new();
        }
        let pb = BigInt::from(self.p);
        let mut out = Vec::with_capacity((self.prec - self.val) as usize);
        let mut u = self.unit.clone();
        for _ in 0..(self.prec - self.val) {
            let (q, r) = u.div_rem(&pb);
            out.push(r.to_u64().unwrap());
            u = q;
        }
        out
    }

    pub fn with_precision(&self, prec: i64) -> Qp {
        let prec = prec.min(self.prec);
        Qp::normalized(self.p, self.val, self.unit.clone(), prec)
    }

    pub fn neg(&self) -> Qp {
        if self.is_zero() {
            return self.clone();
        }
        let m = ppow(self.p, self.prec - self.val);
        Qp { p: self.p, val: self.val, unit: m - &self.unit, prec: self.prec }
    }

    pub fn add(&self, other: &Qp) -> Qp {
        debug_assert_eq!(self.p, other.p);
        let prec = self.prec.min(other.prec);
        let v = self.val.min(other.val);
        if v >= prec {
            return Qp::zero(self.p, prec);
        }
        let mut raw = BigInt::zero();
        if !self.is_zero() {
            raw += &self.unit * ppow(self.p, self.val - v);
        }
        if !other.is_zero() {
            raw += &other.unit * ppow(self.p, other.val - v);
        }
        Qp::normalized(self.p, v, raw, prec)
    }

    pub fn sub(&self, other: &Qp) -> Qp {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Qp) -> Qp {
        debug_assert_eq!(self.p, other.p);
        let prec = (self.val + other.prec).min(other.val + self.prec);
        if self.is_zero() || other.is_zero() {
            return Qp::zero(self.p, prec);
        }
        Qp::normalized(self.p, self.val + other.val, &self.unit * &other.unit, prec)
    }

    /// Exact multiplication by a rational constant.
    pub fn mul_rational(&self, q: &BigRational) -> Qp {
        if q.is_zero() {
            return Qp::zero(self.p, i64::MAX / 4);
        }
        let (vn, un) = split_p(q.numer(), self.p);
        let (vd, ud) = split_p(q.denom(), self.p);
        let shift = vn - vd;
        if self.is_zero() {
            return Qp::zero(self.p, self.prec + shift);
        }
        let m = ppow(self.p, self.prec - self.val);
        let factor = (un * mod_inverse(&ud, &m)).mod_floor(&m);
        Qp::normalized(self.p, self.val + shift, &self.unit * factor, self.prec + shift)
    }

    pub fn inv(&self) -> Option<Qp> {
        if self.is_zero() {
            return None;
        }
        let rel = self.prec - self.val;
        let m = ppow(self.p, rel);
        Some(Qp { p: self.p, val: -self.val, unit: mod_inverse(&self.unit, &m), prec: rel - self.val })
    }

    /// Residue class modulo `p` of a value with nonnegative valuation.
    pub fn residue(&self) -> u64 {
        if self.is_zero() || self.val > 0 {
            return 0;
        }
        debug_assert!(self.val == 0);
        (&self.unit % BigInt::from(self.p)).to_u64().unwrap()
    }

    /// True when `self ≡ other (mod p^n)` is certain.
    pub fn eq_mod(&self, other: &Qp, n: i64) -> bool {
        let d = self.sub(other);
        if d.is_zero() {
            d.prec >= n
        } else {
            d.val >= n
        }
    }

    /// Best rational approximation `a/b` with `|a|, |b| ≤ sqrt(p^k / 2)` where `k` is the
    /// relative precision, if one exists.
    pub fn rational_reconstruction(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        let m = ppow(self.p, self.prec - self.val);
        let bound = (&m / BigInt::from(2)).sqrt();
        let (mut r0, mut r1) = (m.clone(), self.unit.clone());
        let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
        while r1 > bound {
            let q = &r0 / &r1;
            let r2 = &r0 - &q * &r1;
            let t2 = &t0 - &q * &t1;
            r0 = std::mem::replace(&mut r1, r2);
            t0 = std::mem::replace(&mut t1, t2);
        }
        if t1.is_zero() || t1.abs() > bound || !r1.gcd(&t1).is_one() {
            return None;
        }
        let q = BigRational::new(r1, t1);
        let scale = if self.val >= 0 {
            BigRational::from_integer(ppow(self.p, self.val))
        } else {
            BigRational::new(BigInt::one(), ppow(self.p, -self.val))
        };
        Some(q * scale)
    }
}

impl fmt::Debug for Qp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "O({}^{})", self.p, self.prec)
        } else {
            write!(f, "{}^{}*{} + O({}^{})", self.p, self.val, self.unit, self.p, self.prec)
        }
    }
}

struct FieldInner {
    p: u64,
    precision: i64,
    working: i64,
    /// Monic Eisenstein polynomial, low-to-high including the leading 1; empty for `Q_p`.
    eisenstein: Vec<BigRational>,
    /// `π^e = Σ_k reduction[k] π^k`.
    reduction: Vec<Qp>,
    branch: Qp,
    branch_rational: Option<BigRational>,
}

/// The field `K`: prime, nominal precision, Eisenstein polynomial and log branch `c = log(p)`.
#[derive(Clone)]
pub struct LocalField(Arc<FieldInner>);

impl fmt::Debug for LocalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalField")
            .field("p", &self.0.p)
            .field("precision", &self.0.precision)
            .field("e", &self.degree())
            .field("branch", &self.0.branch)
            .finish()
    }
}

impl PartialEq for LocalField {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p
            && self.0.precision == other.0.precision
            && self.0.eisenstein == other.0.eisenstein
            && self.0.branch.eq_mod(&other.0.branch, self.0.precision)
    }
}

impl LocalField {
    /// `Q_p` at nominal precision `precision` with branch `log(p) = 0`.
    pub fn qp(p: u64, precision: i64) -> Result<LocalField> {
        LocalField::new(p, precision, Vec::new(), BigRational::zero())
    }

    pub fn new(p: u64, precision: i64, eisenstein: Vec<BigRational>, branch: BigRational) -> Result<LocalField> {
        let working = 2 * precision + 16;
        let b = Qp::from_rational(p, &branch, working);
        let mut f = LocalField::build(p, precision, eisenstein, b)?;
        Arc::get_mut(&mut f.0).unwrap().branch_rational = Some(branch);
        Ok(f)
    }

    /// Like [`LocalField::new`] with a p-adic (not necessarily rational) branch value.
    pub fn with_padic_branch(p: u64, precision: i64, eisenstein: Vec<BigRational>, branch: Qp) -> Result<LocalField> {
        LocalField::build(p, precision, eisenstein, branch)
    }

    fn build(p: u64, precision: i64, eisenstein: Vec<BigRational>, branch: Qp) -> Result<LocalField> {
        if !is_prime(p) {
            return Err(Error::Invalid(format!("{p} is not prime")));
        }
        if precision < 1 {
            return Err(Error::Invalid("precision must be positive".into()));
        }
        if branch.prime() != p {
            return Err(Error::Invalid("branch lives over a different prime".into()));
        }
        let working = 2 * precision + 16;
        let mut reduction = Vec::new();
        if !eisenstein.is_empty() {
            let e = eisenstein.len() - 1;
            if e == 0 || !eisenstein[e].is_one() {
                return Err(Error::Invalid("Eisenstein polynomial must be monic of degree >= 1".into()));
            }
            if eisenstein[0].is_zero() || rational_valuation(&eisenstein[0], p) != 1 {
                return Err(Error::Invalid("Eisenstein constant term must have valuation 1".into()));
            }
            for a in &eisenstein[1..e] {
                if !a.is_zero() && rational_valuation(a, p) < 1 {
                    return Err(Error::Invalid("Eisenstein middle coefficients must be divisible by p".into()));
                }
            }
            reduction = eisenstein[..e].iter().map(|a| Qp::from_rational(p, &(-a), working + 8)).collect();
        }
        Ok(LocalField(Arc::new(FieldInner {
            p,
            precision,
            working,
            eisenstein,
            reduction,
            branch: branch.with_precision(working),
            branch_rational: None,
        })))
    }

    /// Same field with a different log branch `c = log(p)`.
    pub fn with_branch(&self, branch: &BigRational) -> LocalField {
        LocalField::new(self.p(), self.precision(), self.0.eisenstein.clone(), branch.clone()).unwrap()
    }

    pub fn with_branch_qp(&self, branch: &Qp) -> LocalField {
        LocalField::build(self.p(), self.precision(), self.0.eisenstein.clone(), branch.clone()).unwrap()
    }

    pub fn p(&self) -> u64 {
        self.0.p
    }

    /// Nominal absolute precision `N`.
    pub fn precision(&self) -> i64 {
        self.0.precision
    }

    /// Absolute precision at which fresh constants are created.
    pub fn working_precision(&self) -> i64 {
        self.0.working
    }

    /// Ramification index `e = [K : Q_p]`.
    pub fn degree(&self) -> usize {
        if self.0.eisenstein.is_empty() {
            1
        } else {
            self.0.eisenstein.len() - 1
        }
    }

    pub fn eisenstein(&self) -> &[BigRational] {
        &self.0.eisenstein
    }

    pub fn branch(&self) -> Scalar {
        Scalar::from_qp(self, self.0.branch.clone())
    }

    pub fn branch_qp(&self) -> &Qp {
        &self.0.branch
    }

    pub fn branch_rational(&self) -> Option<&BigRational> {
        self.0.branch_rational.as_ref()
    }

    /// Arithmetic compatibility: same prime and same Eisenstein polynomial.
    pub fn same_arithmetic(&self, other: &LocalField) -> bool {
        self.0.p == other.0.p && self.0.eisenstein == other.0.eisenstein
    }

    pub fn zero(&self) -> Scalar {
        let w = self.working_precision();
        Scalar { field: self.clone(), c: vec![Qp::zero(self.p(), w); self.degree()] }
    }

    pub fn one(&self) -> Scalar {
        self.from_int(1)
    }

    pub fn from_int(&self, n: i64) -> Scalar {
        self.from_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_rational(&self, q: &BigRational) -> Scalar {
        Scalar::from_qp(self, Qp::from_rational(self.p(), q, self.working_precision()))
    }

    pub fn from_ratio(&self, num: i64, den: i64) -> Scalar {
        self.from_rational(&BigRational::new(num.into(), den.into()))
    }

    /// `p^k` as an element of `K`.
    pub fn p_power(&self, k: i64) -> Scalar {
        let q = if k >= 0 {
            BigRational::from_integer(ppow(self.p(), k))
        } else {
            BigRational::new(BigInt::one(), ppow(self.p(), -k))
        };
        self.from_rational(&q)
    }

    /// The uniformizer `π` (equal to `p` when `K = Q_p`).
    pub fn uniformizer(&self) -> Scalar {
        let e = self.degree();
        if self.0.eisenstein.is_empty() {
            return self.from_int(self.p() as i64);
        }
        if e == 1 {
            // π is the root of π + a_0
            return Scalar::from_qp(self, self.0.reduction[0].clone());
        }
        let mut s = self.zero();
        s.c[1] = Qp::from_int(self.p(), 1, self.working_precision());
        s
    }
}

/// An element of `K`, stored by its coordinates on the basis `1, π, ..., π^(e-1)`.
#[derive(Clone)]
pub struct Scalar {
    field: LocalField,
    c: Vec<Qp>,
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.len() == 1 {
            if let Some(q) = self.c[0].with_precision(self.field.precision()).rational_reconstruction() {
                return write!(f, "{q} (+O(p^{}))", self.c[0].precision());
            }
            return write!(f, "{:?}", self.c[0]);
        }
        f.debug_list().entries(self.c.iter()).finish()
    }
}

impl Scalar {
    pub fn from_qp(field: &LocalField, x: Qp) -> Scalar {
        let mut c = vec![Qp::zero(field.p(), field.working_precision()); field.degree()];
        c[0] = x;
        Scalar { field: field.clone(), c }
    }

    pub fn from_coords(field: &LocalField, c: Vec<Qp>) -> Result<Scalar> {
        if c.len() != field.degree() {
            return Err(Error::Invalid(format!("expected {} π-coordinates, got {}", field.degree(), c.len())));
        }
        if c.iter().any(|x| x.prime() != field.p()) {
            return Err(Error::Invalid("coordinate over a different prime".into()));
        }
        Ok(Scalar { field: field.clone(), c })
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn coords(&self) -> &[Qp] {
        &self.c
    }

    pub fn zero_like(&self) -> Scalar {
        self.field.zero()
    }

    pub fn one_like(&self) -> Scalar {
        self.field.one()
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(Qp::is_zero)
    }

    /// Lies in `K_0 = Q_p` (all higher π-coordinates vanish at precision).
    pub fn in_base_field(&self) -> bool {
        self.c[1..].iter().all(Qp::is_zero)
    }

    pub fn base_coord(&self) -> &Qp {
        &self.c[0]
    }

    fn e(&self) -> i64 {
        self.c.len() as i64
    }

    /// Absolute precision in units of `ν_K` (so `ν_K(p) = 1`).
    pub fn precision(&self) -> Ratio<i64> {
        let e = self.e();
        self.c
            .iter()
            .enumerate()
            .map(|(k, x)| Ratio::new(x.precision() * e + k as i64, e))
            .min()
            .unwrap()
    }

    /// Lower bound on `ν_K`, exact when the scalar is nonzero and the bound is attained.
    pub fn val_bound(&self) -> Ratio<i64> {
        let e = self.e();
        self.c
            .iter()
            .enumerate()
            .map(|(k, x)| Ratio::new(x.val_bound() * e + k as i64, e))
            .min()
            .unwrap()
    }

    /// `ν_K(self)` normalized by `ν_K(p) = 1`.
    pub fn valuation(&self) -> Result<Ratio<i64>> {
        if self.is_zero() {
            return Err(Error::ZeroValuation("value is zero at the tracked precision".into()));
        }
        let e = self.e();
        let mut best: Option<Ratio<i64>> = None;
        for (k, x) in self.c.iter().enumerate() {
            if let Some(v) = x.valuation() {
                let v = Ratio::new(v * e + k as i64, e);
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        let best = best.unwrap();
        if self.precision() <= best {
            return Err(Error::InsufficientPrecision("valuation is not determined".into()));
        }
        Ok(best)
    }

    /// Zero modulo `p^N`: below the nominal precision nothing distinguishes it from zero.
    pub fn is_negligible(&self) -> bool {
        self.is_zero() || self.val_bound() >= Ratio::from_integer(self.field.precision())
    }

    /// Zero test that refuses to decide when the value is not known modulo `p^N`.
    pub fn is_zero_decided(&self) -> Result<bool> {
        if !self.is_negligible() {
            return Ok(false);
        }
        if self.precision() < Ratio::from_integer(self.field.precision()) {
            return Err(Error::InsufficientPrecision(format!(
                "zero test at precision {} below nominal {}",
                self.precision(),
                self.field.precision()
            )));
        }
        Ok(true)
    }

    /// True when `self ≡ other` coordinatewise modulo `p^n`.
    pub fn eq_mod(&self, other: &Scalar, n: i64) -> bool {
        self.c.iter().zip(&other.c).all(|(a, b)| a.eq_mod(b, n))
    }

    /// Equality modulo `p^N` for the nominal precision `N`.
    pub fn eq_prec(&self, other: &Scalar) -> bool {
        self.eq_mod(other, self.field.precision())
    }

    pub fn with_precision(&self, prec: i64) -> Scalar {
        Scalar { field: self.field.clone(), c: self.c.iter().map(|x| x.with_precision(prec)).collect() }
    }

    pub fn neg(&self) -> Scalar {
        Scalar { field: self.field.clone(), c: self.c.iter().map(Qp::neg).collect() }
    }

    pub fn add(&self, o: &Scalar) -> Scalar {
        debug_assert!(self.field.same_arithmetic(&o.field));
        Scalar { field: self.field.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, o: &Scalar) -> Scalar {
        debug_assert!(self.field.same_arithmetic(&o.field));
        Scalar { field: self.field.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn mul(&self, o: &Scalar) -> Scalar {
        debug_assert!(self.field.same_arithmetic(&o.field));
        let e = self.c.len();
        if e == 1 {
            return Scalar { field: self.field.clone(), c: vec![self.c[0].mul(&o.c[0])] };
        }
        let p = self.field.p();
        let w = self.field.working_precision() + 8;
        let mut conv = vec![Qp::zero(p, w); 2 * e - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                conv[i + j] = conv[i + j].add(&a.mul(b));
            }
        }
        for deg in (e..2 * e - 1).rev() {
            let top = std::mem::replace(&mut conv[deg], Qp::zero(p, w));
            for (k, r) in self.field.0.reduction.iter().enumerate() {
                conv[deg - e + k] = conv[deg - e + k].add(&top.mul(r));
            }
        }
        conv.truncate(e);
        Scalar { field: self.field.clone(), c: conv }
    }

    /// Multiplication by an element of `Q_p`.
    pub fn scale_qp(&self, q: &Qp) -> Scalar {
        Scalar { field: self.field.clone(), c: self.c.iter().map(|x| x.mul(q)).collect() }
    }

    /// Exact multiplication by a rational constant.
    pub fn mul_rational(&self, q: &BigRational) -> Scalar {
        if q.is_zero() {
            return self.field.zero();
        }
        Scalar { field: self.field.clone(), c: self.c.iter().map(|x| x.mul_rational(q)).collect() }
    }

    pub fn div_int(&self, k: i64) -> Scalar {
        self.mul_rational(&BigRational::new(BigInt::one(), BigInt::from(k)))
    }

    pub fn pow(&self, mut k: u64) -> Scalar {
        let mut base = self.clone();
        let mut acc = self.one_like();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    pub fn inv(&self) -> Result<Scalar> {
        if self.is_zero() {
            return Err(Error::InsufficientPrecision("inverse of a value indistinguishable from zero".into()));
        }
        let e = self.c.len();
        if e == 1 {
            return Ok(Scalar { field: self.field.clone(), c: vec![self.c[0].inv().unwrap()] });
        }
        // Solve (multiplication by self) y = 1 over Q_p.
        let mut basis = self.field.zero();
        let mut cols = Vec::with_capacity(e);
        for j in 0..e {
            basis.c = vec![Qp::zero(self.field.p(), self.field.working_precision() + 8); e];
            basis.c[j] = Qp::from_int(self.field.p(), 1, self.field.working_precision() + 8);
            cols.push(self.mul(&basis).c);
        }
        let mut rhs = vec![Qp::zero(self.field.p(), self.field.working_precision() + 8); e];
        rhs[0] = Qp::from_int(self.field.p(), 1, self.field.working_precision() + 8);
        let y = solve_qp_square(cols, rhs)?;
        Ok(Scalar { field: self.field.clone(), c: y })
    }

    pub fn div(&self, o: &Scalar) -> Result<Scalar> {
        Ok(self.mul(&o.inv()?))
    }

    /// Residue in `F_p` of an element of `O_K`.
    pub fn residue(&self) -> u64 {
        self.c[0].residue()
    }
}

/// Solves a square system over `Q_p` given by columns, with minimal-valuation pivoting.
fn solve_qp_square(cols: Vec<Vec<Qp>>, rhs: Vec<Qp>) -> Result<Vec<Qp>> {
    let n = rhs.len();
    // a[r][c]
    let mut a: Vec<Vec<Qp>> = (0..n).map(|r| (0..n).map(|c| cols[c][r].clone()).collect()).collect();
    let mut b = rhs;
    for col in 0..n {
        let piv = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .min_by_key(|&r| (a[r][col].val_bound(), r))
            .ok_or_else(|| Error::InsufficientPrecision("singular multiplication matrix".into()))?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].inv().unwrap();
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].mul(&inv);
                for c in col..n {
                    let t = f.mul(&a[col][c]);
                    a[r][c] = a[r][c].sub(&t);
                }
                let t = f.mul(&b[col]);
                b[r] = b[r].sub(&t);
            }
        }
    }
    Ok((0..n).map(|i| b[i].mul(&a[i][i].inv().unwrap())).collect())
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        Scalar::add(self, o)
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        Scalar::sub(self, o)
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        Scalar::mul(self, o)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::neg(self)
    }
}

/// Teichmüller lift of the residue `r mod p`: the unique `(p-1)`-th root of unity
/// congruent to `r`, computed by iterating `x ↦ x^p` to its fixed point.
pub fn teichmuller(field: &LocalField, r: u64) -> Result<Scalar> {
    let p = field.p();
    if r.is_multiple_of(p) {
        return Err(Error::Domain(format!("Teichmüller lift of {r} ≡ 0 mod {p}")));
    }
    let w = field.working_precision();
    let mut x = Qp::from_int(p, (r % p) as i64, w);
    loop {
        let mut y = Qp::from_int(p, 1, w);
        for _ in 0..p {
            y = y.mul(&x);
        }
        if y == x {
            break;
        }
        x = y;
    }
    Ok(Scalar::from_qp(field, x))
}

/// The p-adic logarithm on `O_K^×`, trivial on Teichmüller representatives.
pub fn unit_log(u: &Scalar) -> Result<Scalar> {
    let field = u.field().clone();
    let v = u.valuation().map_err(|_| Error::NotAUnit("zero is not a unit".into()))?;
    if !v.is_zero() {
        return Err(Error::NotAUnit(format!("valuation {v} != 0")));
    }
    let omega = teichmuller(&field, u.residue())?;
    // ω^{-1} = ω^{p-2}
    let one_unit = u.mul(&omega.pow(field.p() - 2));
    log_one_unit(&one_unit)
}

/// `Σ (-1)^{n+1} (u-1)^n / n` for a 1-unit `u`.
fn log_one_unit(u: &Scalar) -> Result<Scalar> {
    let field = u.field().clone();
    let y = u.sub(&field.one());
    if y.is_zero() {
        return Ok(field.zero().with_precision(y.precision().floor().to_integer()));
    }
    let vy = y.valuation()?;
    debug_assert!(vy > Ratio::zero());
    let target = Ratio::from_integer(field.working_precision());
    let p = field.p() as f64;
    let mut acc = field.zero();
    let mut power = field.one();
    let mut n: i64 = 1;
    loop {
        // every term with index >= n has valuation >= n·ν(y) - log_p(n)
        let lower = vy * n - Ratio::from_integer(((n as f64).ln() / p.ln()).floor() as i64);
        if lower >= target && n > 1 {
            break;
        }
        power = power.mul(&y);
        let term = power.div_int(n);
        acc = if n % 2 == 1 { acc.add(&term) } else { acc.sub(&term) };
        n += 1;
    }
    Ok(acc)
}

/// The extension of [`unit_log`] to `K^×` with `log(p) = c`, `c` the field's branch.
pub fn branch_log(y: &Scalar) -> Result<Scalar> {
    let field = y.field().clone();
    if y.is_zero() {
        return Err(Error::ZeroValuation("log of zero".into()));
    }
    let v = y.valuation()?;
    let e = field.degree() as i64;
    let m = (v * e).to_integer();
    let pi = field.uniformizer();
    let log_pi = log_uniformizer(&field)?;
    let pi_m = if m >= 0 { pi.pow(m as u64) } else { pi.inv()?.pow((-m) as u64) };
    let unit = y.div(&pi_m)?;
    Ok(log_pi.mul(&field.from_int(m)).add(&unit_log(&unit)?))
}

/// `log(π) = (c + log(π^e / p)) / e`.
pub fn log_uniformizer(field: &LocalField) -> Result<Scalar> {
    let e = field.degree() as i64;
    let pi = field.uniformizer();
    let ratio = pi.pow(e as u64).div(&field.from_int(field.p() as i64))?;
    Ok(field.branch().add(&unit_log(&ratio)?).div_int(e))
}

pub fn scalar_from_rational(field: &LocalField, q: &BigRational) -> Scalar {
    field.from_rational(q)
}

/// Parses `"a/b"` or `"a"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Invalid(format!("malformed rational {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: BigInt = b.trim().parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(Error::Invalid(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(a, b))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn rational_images() {
        let k = LocalField::qp(5, 10).unwrap();
        let one = k.from_int(1);
        assert_eq!(one.valuation().unwrap(), Ratio::from_integer(0));
        assert_eq!(one.coords()[0].digits()[..3], [1, 0, 0]);
        let ten = k.from_int(10);
        assert_eq!(ten.valuation().unwrap(), Ratio::from_integer(1));
        assert_eq!(ten.coords()[0].digits()[..2], [2, 0]);
        // 1/2 mod 5^N: oracle is the modular inverse of 2
        let half = k.from_rational(&q(1, 2));
        let w = k.working_precision();
        let m = ppow(5, w);
        let inv2 = (&m + 1) / 2;
        assert_eq!(half.coords()[0].unit(), &inv2);
        assert_eq!(half.coords()[0].digits()[..4], [3, 2, 2, 2]);
    }

    #[test]
    fn valuations() {
        let k = LocalField::qp(5, 10).unwrap();
        assert_eq!(k.from_int(5).valuation().unwrap(), Ratio::from_integer(1));
        assert_eq!(k.from_rational(&q(1, 25)).valuation().unwrap(), Ratio::from_integer(-2));
        let ram = LocalField::new(5, 10, vec![q(-5, 1), q(0, 1), q(1, 1)], q(0, 1)).unwrap();
        assert_eq!(ram.uniformizer().valuation().unwrap(), Ratio::new(1, 2));
        let pi = ram.uniformizer();
        assert!(pi.mul(&pi).eq_prec(&ram.from_int(5)));
        assert!(k.zero().valuation().is_err());
    }

    #[test]
    fn field_axioms() {
        let k = LocalField::qp(5, 10).unwrap();
        let x = k.from_rational(&q(7, 3));
        assert!(x.add(&x.neg()).is_zero());
        let p = k.from_int(5);
        assert!(p.mul(&p.inv().unwrap()).eq_prec(&k.one()));
        assert!(k.from_int(2).inv().unwrap().eq_prec(&k.from_rational(&q(1, 2))));
    }

    #[test]
    fn ramified_inverse() {
        let ram = LocalField::new(3, 12, vec![q(-3, 1), q(3, 1), q(1, 1)], q(0, 1)).unwrap();
        let pi = ram.uniformizer();
        let x = pi.add(&ram.from_int(2)).mul(&pi);
        let y = x.inv().unwrap();
        assert!(x.mul(&y).eq_prec(&ram.one()));
    }

    #[test]
    fn teichmuller_lifts() {
        let k = LocalField::qp(5, 10).unwrap();
        assert!(teichmuller(&k, 1).unwrap().eq_prec(&k.one()));
        // Hensel oracle: iterate x -> x^5 mod 5^3 starting from 2
        let mut x: u64 = 2;
        for _ in 0..10 {
            x = x.pow(5) % 125;
        }
        let w = teichmuller(&k, 2).unwrap();
        assert_eq!(w.coords()[0].digits()[..3], [x % 5, (x / 5) % 5, x / 25]);
        assert_eq!(w.coords()[0].digits()[..3], [2, 1, 2]);
        let k3 = LocalField::qp(3, 10).unwrap();
        assert!(teichmuller(&k3, 2).unwrap().eq_prec(&k3.from_int(-1)));
        for r in 1..5 {
            let t = teichmuller(&k, r).unwrap();
            assert!(t.pow(4).eq_prec(&k.one()));
        }
        assert!(teichmuller(&k, 5).is_err());
    }

    #[test]
    fn unit_log_values() {
        let k = LocalField::qp(5, 10).unwrap();
        assert!(unit_log(&teichmuller(&k, 2).unwrap()).unwrap().is_zero());
        assert!(unit_log(&k.one()).unwrap().is_zero());
        // oracle: 5 - 25/2 + 125/3 - ... reduced mod 5^3 is 5·(1 + 2·5)
        let l = unit_log(&k.from_int(6)).unwrap();
        assert!(l.eq_mod(&k.from_int(5 * 11), 3));
        assert!(matches!(unit_log(&k.from_int(5)), Err(Error::NotAUnit(_))));
    }

    #[test]
    fn branch_log_values() {
        let k = LocalField::new(5, 10, vec![], q(3, 7)).unwrap();
        assert!(branch_log(&k.from_int(5)).unwrap().eq_prec(&k.from_rational(&q(3, 7))));
        let u = k.from_int(7);
        assert!(branch_log(&u).unwrap().eq_prec(&unit_log(&u).unwrap()));
        let k0 = LocalField::qp(5, 10).unwrap();
        assert!(branch_log(&k0.from_int(50)).unwrap().eq_prec(&unit_log(&k0.from_int(2)).unwrap()));
        assert!(matches!(branch_log(&k0.zero()), Err(Error::ZeroValuation(_))));
    }

    #[test]
    fn rational_reconstruction_roundtrip() {
        for (a, b) in [(0, 1), (3, 7), (-22, 5), (125, 4), (1, 250)] {
            let x = Qp::from_rational(5, &q(a, b), 20);
            assert_eq!(x.rational_reconstruction().unwrap(), q(a, b));
        }
    }

    #[test]
    fn precision_tracking() {
        let x = Qp::from_int(5, 1, 10);
        let y = Qp::from_int(5, 1, 6);
        assert_eq!(x.sub(&y).precision(), 6);
        let p = Qp::from_int(5, 5, 10);
        assert_eq!(p.inv().unwrap().precision(), 8);
        assert_eq!(x.mul_rational(&q(1, 5)).precision(), 9);
    }
}
