//! Linear algebra over `K` by Gauss–Jordan elimination.
//!
//! Pivots are chosen column by column as the entry of minimal valuation among the
//! remaining rows, ties broken by the lowest row index, so every output is
//! deterministic. A column is declared pivot-free only when all candidate entries are
//! known to vanish modulo `p^N`; otherwise [`Error::InsufficientPrecision`] is raised.
//!
//! Subspaces are passed around as lists of column vectors.

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::padic::{LocalField, Scalar};

pub type Vector = Vec<Scalar>;

/// Reduced row echelon form together with its pivot columns.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub rref: Mat<Scalar>,
    pub pivots: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

pub fn echelon(a: &Mat<Scalar>) -> Result<Echelon> {
    let (rows, cols) = (a.rows(), a.cols());
    let mut m = a.to_rows();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut best: Option<usize> = None;
        for i in r..rows {
            if m[i][c].is_negligible() {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => m[i][c].val_bound() < m[b][c].val_bound(),
            };
            if better {
                best = Some(i);
            }
        }
        let Some(piv) = best else {
            for row in m.iter().skip(r) {
                row[c].is_zero_decided()?;
            }
            continue;
        };
        m.swap(r, piv);
        let inv = m[r][c].inv()?;
        for k in c..cols {
            m[r][k] = m[r][k].mul(&inv);
        }
        for i in 0..rows {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            for k in c..cols {
                let t = f.mul(&m[r][k]);
                m[i][k] = m[i][k].sub(&t);
            }
        }
        pivots.push(c);
        r += 1;
    }
    // remaining rows must be zero to be trusted
    for row in m.iter().skip(r) {
        for x in row {
            x.is_zero_decided()?;
        }
    }
    let rref = if rows == 0 || cols == 0 {
        Mat::zeros_like(&zero_of(a), rows, cols)
    } else {
        Mat::from_rows(m)?
    };
    Ok(Echelon { rref, pivots })
}

fn zero_of(a: &Mat<Scalar>) -> Scalar {
    a.template().or_else(|| a.entries().next()).expect("matrix without a field template").zero_like()
}

pub fn rank(a: &Mat<Scalar>) -> Result<usize> {
    Ok(echelon(a)?.rank())
}

/// Builds the `n × k` matrix whose columns are `cols`.
pub fn columns_to_mat(field: &LocalField, n: usize, cols: &[Vector]) -> Mat<Scalar> {
    if cols.is_empty() || n == 0 {
        return Mat::zeros_like(&field.zero(), n, cols.len());
    }
    Mat::from_columns(n, cols).with_template(&field.zero())
}

/// Canonical basis of the right kernel (the reduced echelon kernel basis).
pub fn kernel(a: &Mat<Scalar>) -> Result<Vec<Vector>> {
    let ech = echelon(a)?;
    let zero = zero_of(a);
    let one = zero.one_like();
    let free: Vec<usize> = (0..a.cols()).filter(|c| !ech.pivots.contains(c)).collect();
    Ok(free
        .iter()
        .map(|&f| {
            let mut v = vec![zero.clone(); a.cols()];
            v[f] = one.clone();
            for (i, &pc) in ech.pivots.iter().enumerate() {
                v[pc] = ech.rref.get(i, f).neg();
            }
            v
        })
        .collect())
}

/// The unique `x` with `a x = b`; errors when `a` lacks full column rank or the system
/// is inconsistent.
pub fn solve(a: &Mat<Scalar>, b: &Mat<Scalar>) -> Result<Mat<Scalar>> {
    assert_eq!(a.rows(), b.rows());
    let n = a.cols();
    let zero = zero_of(a);
    if n == 0 {
        if !b.is_zero() {
            return Err(Error::Domain("inconsistent linear system".into()));
        }
        return Ok(Mat::zeros_like(&zero, 0, b.cols()));
    }
    let aug = a.hstack(b);
    let ech = echelon(&aug)?;
    if ech.pivots.iter().any(|&p| p >= n) {
        return Err(Error::Domain("inconsistent linear system".into()));
    }
    if ech.rank() != n {
        return Err(Error::Domain("linear system has no unique solution".into()));
    }
    Ok(Mat::from_fn(n, b.cols(), |r, c| ech.rref.get(r, n + c).clone()).with_template(&zero))
}

pub fn inverse(a: &Mat<Scalar>) -> Result<Mat<Scalar>> {
    assert!(a.is_square());
    let zero = zero_of(a);
    let id = Mat::identity_like(&zero.one_like(), a.rows());
    solve(a, &id).map_err(|e| match e {
        Error::Domain(_) => Error::Domain("matrix is singular".into()),
        other => other,
    })
}

/// A maximal independent subset of `vectors`, in order.
pub fn independent_subset(field: &LocalField, n: usize, vectors: &[Vector]) -> Result<Vec<Vector>> {
    if vectors.is_empty() {
        return Ok(Vec::new());
    }
    let ech = echelon(&columns_to_mat(field, n, vectors))?;
    Ok(ech.pivots.iter().map(|&c| vectors[c].clone()).collect())
}

pub fn span_rank(field: &LocalField, n: usize, vectors: &[Vector]) -> Result<usize> {
    if vectors.is_empty() || n == 0 {
        return Ok(0);
    }
    rank(&columns_to_mat(field, n, vectors))
}

/// Basis of `span(a) ∩ span(b)`. `a` must be linearly independent.
pub fn intersect(field: &LocalField, n: usize, a: &[Vector], b: &[Vector]) -> Result<Vec<Vector>> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let ma = columns_to_mat(field, n, a);
    let mb = columns_to_mat(field, n, b);
    let joint = ma.hstack(&mb.neg());
    let ker = kernel(&joint)?;
    let vecs: Vec<Vector> = ker.iter().map(|k| ma.mul_vec(&k[..a.len()])).collect();
    independent_subset(field, n, &vecs)
}

/// Rows spanning the annihilator of `span(cols)` in the dual space.
pub fn annihilator(field: &LocalField, n: usize, cols: &[Vector]) -> Result<Vec<Vector>> {
    if cols.is_empty() {
        return Ok((0..n)
            .map(|i| (0..n).map(|j| if i == j { field.one() } else { field.zero() }).collect())
            .collect());
    }
    kernel(&columns_to_mat(field, n, cols).transpose())
}

/// Is `v` in the span of `basis`?
pub fn in_span(field: &LocalField, n: usize, basis: &[Vector], v: &Vector) -> Result<bool> {
    let r0 = span_rank(field, n, basis)?;
    let mut ext = basis.to_vec();
    ext.push(v.clone());
    Ok(span_rank(field, n, &ext)? == r0)
}

pub fn span_contains(field: &LocalField, n: usize, big: &[Vector], small: &[Vector]) -> Result<bool> {
    let r0 = span_rank(field, n, big)?;
    let mut ext = big.to_vec();
    ext.extend_from_slice(small);
    Ok(span_rank(field, n, &ext)? == r0)
}

pub fn span_eq(field: &LocalField, n: usize, a: &[Vector], b: &[Vector]) -> Result<bool> {
    Ok(span_rank(field, n, a)? == span_rank(field, n, b)? && span_contains(field, n, a, b)?)
}

/// Extends independent `vectors` to a basis of `K^n` with standard unit vectors.
pub fn extend_to_basis(field: &LocalField, n: usize, vectors: &[Vector]) -> Result<Vec<Vector>> {
    let mut all = vectors.to_vec();
    for i in 0..n {
        all.push(unit_vector(field, n, i));
    }
    independent_subset(field, n, &all)
}

pub fn unit_vector(field: &LocalField, n: usize, i: usize) -> Vector {
    (0..n).map(|j| if i == j { field.one() } else { field.zero() }).collect()
}

/// Entrywise equality modulo `p^N`.
pub fn mat_eq_prec(a: &Mat<Scalar>, b: &Mat<Scalar>) -> bool {
    a.rows() == b.rows()
        && a.cols() == b.cols()
        && a.entries().zip(b.entries()).all(|(x, y)| x.eq_prec(y))
}

/// Entrywise zero test modulo `p^N`.
pub fn mat_is_zero_prec(a: &Mat<Scalar>) -> bool {
    a.entries().all(|x| x.eq_prec(&x.zero_like()))
}
