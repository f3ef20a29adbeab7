//! Dense matrices over a commutative ring, plus the finite-series exponential and
//! logarithm of nilpotent / unipotent matrices.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::padic::Scalar;

/// Ring operations needed by [`Mat`]. Constants are produced from an existing element so
/// that context-carrying types (p-adic scalars know their field) need no global state.
pub trait Ring: Clone {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Division by a nonzero integer (exact in characteristic zero).
    fn div_int(&self, k: i64) -> Self;
    /// Structural zero test at the tracked precision / tolerance.
    fn is_zero(&self) -> bool;
}

impl Ring for Scalar {
    fn zero_like(&self) -> Self {
        Scalar::zero_like(self)
    }
    fn one_like(&self) -> Self {
        Scalar::one_like(self)
    }
    fn add(&self, o: &Self) -> Self {
        Scalar::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Scalar::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Scalar::mul(self, o)
    }
    fn neg(&self) -> Self {
        Scalar::neg(self)
    }
    fn div_int(&self, k: i64) -> Self {
        Scalar::div_int(self, k)
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
}

impl Ring for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one_like(&self) -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div_int(&self, k: i64) -> Self {
        self / k as f64
    }
    fn is_zero(&self) -> bool {
        self.norm() == 0.0
    }
}

/// Row-major dense matrix.
#[derive(Clone)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
    // a ring element used to produce zeros for empty products
    tpl: Option<T>,
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl<T: Clone> Mat<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Mat<T> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        let tpl = data.first().cloned();
        Mat { rows, cols, data, tpl }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Mat<T>> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Invalid("ragged matrix rows".into()));
        }
        let data: Vec<T> = rows.into_iter().flatten().collect();
        let tpl = data.first().cloned();
        Ok(Mat { rows: r, cols: c, data, tpl })
    }

    /// Matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_columns(rows: usize, cols: &[Vec<T>]) -> Mat<T> {
        Mat::from_fn(rows, cols.len(), |r, c| cols[c][r].clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> Vec<T> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone()).inherit(&self.tpl)
    }

    fn inherit(mut self, t: &Option<T>) -> Mat<T> {
        if self.tpl.is_none() {
            self.tpl = t.clone();
        }
        self
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Mat<U> {
        let data: Vec<U> = self.data.iter().map(f).collect();
        let tpl = data.first().cloned();
        Mat { rows: self.rows, cols: self.cols, data, tpl }
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Mat<T> {
        Mat::from_fn(rows.len(), cols.len(), |r, c| self.get(rows[r], cols[c]).clone()).inherit(&self.tpl)
    }

    pub fn select_columns(&self, cols: &[usize]) -> Mat<T> {
        Mat::from_fn(self.rows, cols.len(), |r, c| self.get(r, cols[c]).clone()).inherit(&self.tpl)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Mat<T> {
        Mat::from_fn(rows.len(), self.cols, |r, c| self.get(rows[r], c).clone()).inherit(&self.tpl)
    }

    pub fn hstack(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.rows, other.rows);
        Mat::from_fn(self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self.get(r, c).clone()
            } else {
                other.get(r, c - self.cols).clone()
            }
        })
        .inherit(&self.tpl)
        .inherit(&other.tpl)
    }

    pub fn vstack(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.cols);
        Mat::from_fn(self.rows + other.rows, self.cols, |r, c| {
            if r < self.rows {
                self.get(r, c).clone()
            } else {
                other.get(r - self.rows, c).clone()
            }
        })
        .inherit(&self.tpl)
        .inherit(&other.tpl)
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    /// Attaches a ring element used as a template for zeros of empty products.
    pub fn with_template(mut self, t: &T) -> Mat<T> {
        self.tpl = Some(t.clone());
        self
    }

    pub fn template(&self) -> Option<&T> {
        self.tpl.as_ref()
    }
}

impl<T: Ring> Mat<T> {
    pub fn zeros_like(zero: &T, rows: usize, cols: usize) -> Mat<T> {
        let z = zero.zero_like();
        Mat { rows, cols, data: vec![z.clone(); rows * cols], tpl: Some(z) }
    }

    pub fn identity_like(one: &T, n: usize) -> Mat<T> {
        let (z, o) = (one.zero_like(), one.one_like());
        Mat::from_fn(n, n, |r, c| if r == c { o.clone() } else { z.clone() }).with_template(&z)
    }

    pub fn diagonal(entries: &[T]) -> Mat<T> {
        let n = entries.len();
        Mat::from_fn(n, n, |r, c| if r == c { entries[r].clone() } else { entries[r].zero_like() })
    }

    pub fn mul(&self, o: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, o.rows, "matrix product dimension mismatch");
        let tpl = self.tpl.clone().or_else(|| o.tpl.clone());
        let out = Mat::from_fn(self.rows, o.cols, |r, c| {
            let mut acc: Option<T> = None;
            for k in 0..self.cols {
                let t = self.get(r, k).mul(o.get(k, c));
                acc = Some(match acc {
                    None => t,
                    Some(a) => a.add(&t),
                });
            }
            acc.unwrap_or_else(|| tpl.as_ref().expect("empty product without a template").zero_like())
        });
        match &tpl {
            Some(t) if out.tpl.is_none() => out.with_template(t),
            _ => out,
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        let col = Mat::from_columns(v.len(), &[v.to_vec()]);
        self.mul(&col).column(0)
    }

    pub fn add(&self, o: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        let data: Vec<T> = self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect();
        Mat { rows: self.rows, cols: self.cols, data, tpl: self.tpl.clone().or_else(|| o.tpl.clone()) }
    }

    pub fn sub(&self, o: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        let data: Vec<T> = self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b)).collect();
        Mat { rows: self.rows, cols: self.cols, data, tpl: self.tpl.clone().or_else(|| o.tpl.clone()) }
    }

    pub fn neg(&self) -> Mat<T> {
        self.map(T::neg)
    }

    pub fn scale(&self, s: &T) -> Mat<T> {
        self.map(|x| x.mul(s))
    }

    pub fn div_int(&self, k: i64) -> Mat<T> {
        self.map(|x| x.div_int(k))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(T::is_zero)
    }

    /// Kronecker product; index `(a, b)` of the result is `a * other.dim + b`.
    pub fn kron(&self, o: &Mat<T>) -> Mat<T> {
        Mat::from_fn(self.rows * o.rows, self.cols * o.cols, |r, c| {
            self.get(r / o.rows, c / o.cols).mul(o.get(r % o.rows, c % o.cols))
        })
    }

    fn sample(&self) -> &T {
        self.data.first().or(self.tpl.as_ref()).expect("matrix must carry a ring element")
    }
}

/// `exp(x)` for nilpotent `x`, summed until the powers of `x` vanish.
///
/// Fails with [`Error::NotUnipotent`] if `x^n ≠ 0` for `n = dim`.
pub fn nilpotent_exp<T: Ring>(x: &Mat<T>) -> Result<Mat<T>> {
    assert!(x.is_square());
    let n = x.rows();
    if n == 0 {
        return Ok(x.clone());
    }
    let one = x.sample().one_like();
    let mut acc = Mat::identity_like(&one, n);
    let mut term = Mat::identity_like(&one, n);
    for k in 1..=n as i64 {
        term = term.mul(x).div_int(k);
        if term.is_zero() {
            return Ok(acc);
        }
        acc = acc.add(&term);
    }
    Err(Error::NotUnipotent("matrix is not nilpotent".into()))
}

/// `log(u) = Σ_{k≥1} (-1)^{k+1} (u - 1)^k / k` for unipotent `u`.
pub fn nilpotent_log<T: Ring>(u: &Mat<T>) -> Result<Mat<T>> {
    assert!(u.is_square());
    let n = u.rows();
    if n == 0 {
        return Ok(u.clone());
    }
    let one = u.sample().one_like();
    let x = u.sub(&Mat::identity_like(&one, n));
    let mut acc = Mat::zeros_like(&one, n, n);
    let mut power = Mat::identity_like(&one, n);
    for k in 1..=n as i64 {
        power = power.mul(&x);
        if power.is_zero() {
            return Ok(acc);
        }
        let term = power.div_int(k);
        acc = if k % 2 == 1 { acc.add(&term) } else { acc.sub(&term) };
    }
    if power.mul(&x).is_zero() {
        Ok(acc)
    } else {
        Err(Error::NotUnipotent("u - 1 is not nilpotent".into()))
    }
}

/// Block-strict lower triangularity with respect to a grading: the entry `(r, c)` may be
/// nonzero only if `deg[r] > deg[c]`.
pub fn strictly_raises_degree<T: Ring>(x: &Mat<T>, deg: &[i64]) -> bool {
    (0..x.rows()).all(|r| (0..x.cols()).all(|c| deg[r] > deg[c] || x.get(r, c).is_zero()))
}
