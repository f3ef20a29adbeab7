//! `K_st = K[X]`, with `X` standing for `log_st(p)`.

use crate::matrix::{Mat, Ring};
use crate::padic::Scalar;

/// A polynomial in `X = log_st(p)` with coefficients in `K`, lowest degree first.
#[derive(Clone, Debug)]
pub struct KstPoly {
    coeffs: Vec<Scalar>,
    zero: Scalar,
}

impl KstPoly {
    pub fn constant(c: &Scalar) -> KstPoly {
        KstPoly { coeffs: vec![c.clone()], zero: c.zero_like() }.trimmed()
    }

    /// The indeterminate `X`.
    pub fn x(zero: &Scalar) -> KstPoly {
        KstPoly { coeffs: vec![zero.zero_like(), zero.one_like()], zero: zero.zero_like() }
    }

    pub fn from_coeffs(zero: &Scalar, coeffs: Vec<Scalar>) -> KstPoly {
        KstPoly { coeffs, zero: zero.zero_like() }.trimmed()
    }

    fn trimmed(mut self) -> KstPoly {
        while self.coeffs.last().is_some_and(Scalar::is_zero) {
            self.coeffs.pop();
        }
        self
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    /// Coefficient of `X^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> Scalar {
        self.coeffs.get(k).cloned().unwrap_or_else(|| self.zero.clone())
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        self.coeffs.iter().rev().fold(self.zero.clone(), |acc, c| acc.mul(x).add(c))
    }

    /// Coefficientwise equality modulo `p^N`.
    pub fn eq_prec(&self, other: &KstPoly) -> bool {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n).all(|k| self.coeff(k).eq_prec(&other.coeff(k)))
    }
}

impl Ring for KstPoly {
    fn zero_like(&self) -> Self {
        KstPoly { coeffs: Vec::new(), zero: self.zero.clone() }
    }
    fn one_like(&self) -> Self {
        KstPoly::constant(&self.zero.one_like())
    }
    fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        KstPoly { coeffs: (0..n).map(|k| self.coeff(k).add(&o.coeff(k))).collect(), zero: self.zero.clone() }
            .trimmed()
    }
    fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    fn mul(&self, o: &Self) -> Self {
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return self.zero_like();
        }
        let mut out = vec![self.zero.clone(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        KstPoly { coeffs: out, zero: self.zero.clone() }.trimmed()
    }
    fn neg(&self) -> Self {
        KstPoly { coeffs: self.coeffs.iter().map(Scalar::neg).collect(), zero: self.zero.clone() }
    }
    fn div_int(&self, k: i64) -> Self {
        KstPoly { coeffs: self.coeffs.iter().map(|c| c.div_int(k)).collect(), zero: self.zero.clone() }
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

pub fn lift_matrix(m: &Mat<Scalar>) -> Mat<KstPoly> {
    let zero = m.template().or_else(|| m.entries().next()).expect("field template").zero_like();
    m.map(KstPoly::constant).with_template(&KstPoly::constant(&zero))
}

pub fn eval_matrix(m: &Mat<KstPoly>, x: &Scalar) -> Mat<Scalar> {
    m.map(|p| p.eval(x)).with_template(&x.zero_like())
}

pub fn mat_eq_prec(a: &Mat<KstPoly>, b: &Mat<KstPoly>) -> bool {
    a.rows() == b.rows() && a.cols() == b.cols() && a.entries().zip(b.entries()).all(|(x, y)| x.eq_prec(y))
}
