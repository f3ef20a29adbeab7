//! Real mixed Tate Hodge structures, the automorphism `d = a_F̄ a_F^{-1}` and
//! single-valued polylogarithm values.
//!
//! Floating point throughout. Graded pieces are ordered by co-weight `i` of
//! `Gr^W_{-2i}` ascending (that is, by weight descending), so `d - 1` is strictly
//! lower triangular in block form.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matrix::{nilpotent_exp, nilpotent_log, Mat};

/// Tolerance for rank decisions on complex matrices.
pub const RANK_TOL: f64 = 1e-9;

/// A real vector space with an increasing even weight filtration and a decreasing
/// Hodge filtration on its complexification.
#[derive(Clone, Debug)]
pub struct RealMths {
    pub dim: usize,
    /// `(2i, basis of W_{2i})`, any order; `W_n` is the largest listed step `<= n`.
    pub weights: Vec<(i64, Vec<Vec<f64>>)>,
    /// `(p, basis of F^p)`; `F^p` is the smallest listed step `>= p`.
    pub hodge: Vec<(i64, Vec<Vec<Complex64>>)>,
}

/// `d` on `⊕ Gr^W`, with the co-weight of each basis vector.
#[derive(Clone, Debug)]
pub struct ArchD {
    pub coweights: Vec<i64>,
    pub d: Mat<Complex64>,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cmat(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Mat<Complex64> {
    Mat::from_fn(rows, cols, f).with_template(&c(0.0))
}

fn conj(m: &Mat<Complex64>) -> Mat<Complex64> {
    m.map(|x| x.conj()).with_template(&c(0.0))
}

/// Largest absolute entry.
pub fn max_norm(m: &Mat<Complex64>) -> f64 {
    m.entries().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Reduced row echelon form with partial pivoting; entries below `tol` count as zero.
fn rref(a: &Mat<Complex64>, tol: f64) -> (Vec<Vec<Complex64>>, Vec<usize>) {
    let (rows, cols) = (a.rows(), a.cols());
    let mut m = a.to_rows();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        let (best, size) = (r..rows).map(|i| (i, m[i][col].norm())).fold((r, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if size <= tol {
            continue;
        }
        m.swap(r, best);
        let inv = c(1.0) / m[r][col];
        for k in 0..cols {
            m[r][k] *= inv;
        }
        for i in 0..rows {
            if i != r {
                let f = m[i][col];
                if f != c(0.0) {
                    for k in 0..cols {
                        let t = f * m[r][k];
                        m[i][k] -= t;
                    }
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    (m, pivots)
}

fn columns(n: usize, cols: &[Vec<Complex64>]) -> Mat<Complex64> {
    cmat(n, cols.len(), |r, k| cols[k][r])
}

fn rank(n: usize, cols: &[Vec<Complex64>]) -> usize {
    if cols.is_empty() {
        return 0;
    }
    rref(&columns(n, cols), RANK_TOL).1.len()
}

fn kernel(a: &Mat<Complex64>) -> Vec<Vec<Complex64>> {
    let (m, pivots) = rref(a, RANK_TOL);
    (0..a.cols())
        .filter(|f| !pivots.contains(f))
        .map(|f| {
            let mut v = vec![c(0.0); a.cols()];
            v[f] = c(1.0);
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[i][f];
            }
            v
        })
        .collect()
}

/// Inverse by Gauss–Jordan; `None` if singular.
pub fn inverse(a: &Mat<Complex64>) -> Option<Mat<Complex64>> {
    let n = a.rows();
    let aug = a.hstack(&Mat::identity_like(&c(1.0), n));
    let (m, pivots) = rref(&aug, 1e-13);
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    Some(cmat(n, n, |r, k| m[r][n + k]))
}

impl RealMths {
    fn weight_at(&self, n: i64) -> Vec<Vec<Complex64>> {
        self.weights
            .iter()
            .filter(|(s, _)| *s <= n)
            .max_by_key(|(s, _)| *s)
            .map(|(_, b)| b.iter().map(|v| v.iter().map(|&x| c(x)).collect()).collect())
            .unwrap_or_default()
    }

    fn hodge_at(&self, p: i64) -> Vec<Vec<Complex64>> {
        self.hodge.iter().filter(|(s, _)| *s >= p).min_by_key(|(s, _)| *s).map(|(_, b)| b.clone()).unwrap_or_default()
    }

    /// Real basis adapted to `W`, weights descending, with the weight of each vector.
    fn adapted_basis(&self) -> Result<(Vec<Vec<Complex64>>, Vec<i64>)> {
        let mut steps: Vec<i64> = self.weights.iter().map(|(s, _)| *s).collect();
        steps.sort_unstable();
        let mut basis: Vec<Vec<Complex64>> = Vec::new();
        let mut wts = Vec::new();
        for s in steps {
            for v in self.weight_at(s) {
                let mut ext = basis.clone();
                ext.push(v.clone());
                if rank(self.dim, &ext) > basis.len() {
                    basis.push(v);
                    wts.push(s);
                }
            }
        }
        if basis.len() != self.dim {
            return Err(Error::NotMths("weight filtration is not exhaustive".into()));
        }
        basis.reverse();
        wts.reverse();
        Ok((basis, wts))
    }

    /// Checks the shape of the data, the filtrations, and the mixed Tate condition
    /// `Gr_F^p Gr^W_n = 0` unless `n = 2p`.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        for (s, b) in &self.weights {
            if s % 2 != 0 {
                return Err(Error::Invalid(format!("weight step {s} is odd")));
            }
            if b.iter().any(|v| v.len() != d) {
                return Err(Error::Invalid(format!("weight step {s} has a vector of the wrong length")));
            }
        }
        for (s, b) in &self.hodge {
            if b.iter().any(|v| v.len() != d) {
                return Err(Error::Invalid(format!("Hodge step {s} has a vector of the wrong length")));
            }
        }
        if d == 0 {
            return Ok(());
        }
        let mut wsteps: Vec<i64> = self.weights.iter().map(|(s, _)| *s).collect();
        wsteps.sort_unstable();
        for w in wsteps.windows(2) {
            let (lo, hi) = (self.weight_at(w[0]), self.weight_at(w[1]));
            let mut joint = hi.clone();
            joint.extend(lo);
            if rank(d, &joint) != rank(d, &hi) {
                return Err(Error::NotMths(format!("W_{} is not contained in W_{}", w[0], w[1])));
            }
        }
        let mut hsteps: Vec<i64> = self.hodge.iter().map(|(s, _)| *s).collect();
        hsteps.sort_unstable();
        let Some(&hlo) = hsteps.first() else {
            return Err(Error::NotMths("no Hodge filtration".into()));
        };
        if rank(d, &self.hodge_at(hlo)) != d {
            return Err(Error::NotMths("Hodge filtration is not exhaustive".into()));
        }
        for w in hsteps.windows(2) {
            let (big, small) = (self.hodge_at(w[0]), self.hodge_at(w[1]));
            let mut joint = big.clone();
            joint.extend(small);
            if rank(d, &joint) != rank(d, &big) {
                return Err(Error::NotMths(format!("F^{} is not contained in F^{}", w[1], w[0])));
            }
        }
        self.adapted_basis()?;
        let hhi = *hsteps.last().unwrap();
        for &n in wsteps.iter() {
            let below = self.weight_at(n - 1);
            let gr = rank(d, &self.weight_at(n)) - rank(d, &below);
            for p in hlo..=hhi + 1 {
                // dim of the image of F^p ∩ W_n in Gr^W_n
                let inter = intersect(d, &self.weight_at(n), &self.hodge_at(p));
                let mut joint = below.clone();
                joint.extend(inter);
                let img = rank(d, &joint) - rank(d, &below);
                let expected = if 2 * p <= n { gr } else { 0 };
                if img != expected {
                    return Err(Error::NotMths(format!("Gr_F^{p} Gr^W_{n} has the wrong dimension")));
                }
            }
        }
        Ok(())
    }
}

fn intersect(n: usize, a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let ma = columns(n, a);
    let joint = ma.hstack(&columns(n, b).neg());
    kernel(&joint).iter().map(|k| ma.mul_vec(&k[..a.len()])).collect()
}

/// `d = a_F̄ a_F^{-1}` on `⊕ Gr^W` in the adapted real basis.
pub fn compute_d(h: &RealMths) -> Result<ArchD> {
    h.validate()?;
    let n = h.dim;
    let (adapted, wts) = h.adapted_basis()?;
    let coweights: Vec<i64> = wts.iter().map(|w| -w / 2).collect();
    if n == 0 {
        return Ok(ArchD { coweights, d: cmat(0, 0, |_, _| c(0.0)) });
    }
    let a = columns(n, &adapted);
    let a_inv = inverse(&a).ok_or_else(|| Error::NotMths("adapted basis is singular".into()))?;
    let mut b_cols: Vec<Vec<Complex64>> = Vec::new();
    let mut g_cols: Vec<Vec<Complex64>> = Vec::new();
    let mut distinct = wts.clone();
    distinct.dedup();
    for &w in &distinct {
        let f: Vec<Vec<Complex64>> = h.hodge_at(w / 2).iter().map(|v| a_inv.mul_vec(v)).collect();
        if f.is_empty() {
            return Err(Error::NotMths(format!("F^{} is zero", w / 2)));
        }
        let fm = columns(n, &f);
        let above: Vec<usize> = (0..n).filter(|&k| wts[k] > w).collect();
        let ys = if above.is_empty() {
            (0..f.len()).map(|j| (0..f.len()).map(|i| c(if i == j { 1.0 } else { 0.0 })).collect()).collect()
        } else {
            kernel(&fm.select_rows(&above))
        };
        let inter: Vec<Vec<Complex64>> = ys.iter().map(|y| fm.mul_vec(y)).collect();
        let graded: Vec<usize> = (0..n).filter(|&k| wts[k] == w).collect();
        let indep = rref(&columns(n, &inter), RANK_TOL).1;
        if indep.len() != graded.len() {
            return Err(Error::NotMths(format!("F ∩ W_{w} does not split Gr^W_{w}")));
        }
        for &k in &indep {
            let v = inter[k].clone();
            let g = (0..n).map(|r| if wts[r] == w { v[r] } else { c(0.0) }).collect();
            b_cols.push(v);
            g_cols.push(g);
        }
    }
    let b = columns(n, &b_cols);
    let g = columns(n, &g_cols);
    let a_f = g.mul(&inverse(&b).ok_or_else(|| Error::NotMths("a_F is singular".into()))?);
    let a_fbar = conj(&g).mul(&inverse(&conj(&b)).ok_or_else(|| Error::NotMths("a_F̄ is singular".into()))?);
    let a_f_inv = inverse(&a_f).ok_or_else(|| Error::NotMths("a_F is singular".into()))?;
    let d = a_fbar.mul(&a_f_inv);
    Ok(ArchD { coweights, d })
}

impl ArchD {
    /// `‖d - 1‖` on the blocks that must vanish or be the identity.
    pub fn unipotence_defect(&self) -> f64 {
        let n = self.coweights.len();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for k in 0..n {
                if self.coweights[r] <= self.coweights[k] {
                    let target = if r == k { c(1.0) } else { c(0.0) };
                    worst = worst.max((self.d.get(r, k) - target).norm());
                }
            }
        }
        worst
    }

    /// `‖d·conj(d) - 1‖`.
    pub fn reality_defect(&self) -> f64 {
        let n = self.coweights.len();
        max_norm(&self.d.mul(&conj(&self.d)).sub(&Mat::identity_like(&c(1.0), n)))
    }

    /// `d` with the diagonal blocks set to exactly the identity and the upper blocks to
    /// exactly zero, so that powers of `d - 1` vanish exactly.
    pub fn cleaned(&self, tol: f64) -> Result<Mat<Complex64>> {
        if self.unipotence_defect() > tol {
            return Err(Error::NotUnipotent(format!("d - 1 is not strictly lower (defect {:e})", self.unipotence_defect())));
        }
        let w = &self.coweights;
        Ok(cmat(w.len(), w.len(), |r, k| {
            if w[r] > w[k] {
                *self.d.get(r, k)
            } else if r == k {
                c(1.0)
            } else {
                c(0.0)
            }
        }))
    }
}

/// `ε = log(d)`.
pub fn epsilon_arch(h: &RealMths) -> Result<Mat<Complex64>> {
    let d = compute_d(h)?;
    nilpotent_log(&d.cleaned(1e-8)?)
}

/// `exp` of a strictly block-lower matrix, after zeroing its structural entries.
pub fn exp_strict(x: &Mat<Complex64>, coweights: &[i64]) -> Result<Mat<Complex64>> {
    let cleaned = cmat(x.rows(), x.cols(), |r, k| if coweights[r] > coweights[k] { *x.get(r, k) } else { c(0.0) });
    nilpotent_exp(&cleaned)
}

pub const POLYLOG_RADIUS: f64 = 0.95;

/// `Li_k(z) = Σ_{m ≥ 1} z^m / m^k` for `|z| ≤ 0.95`, with `Li_0(z) = z/(1-z)`.
pub fn polylog(k: u32, z: Complex64, tol: f64) -> Result<Complex64> {
    let r = z.norm();
    if !(r <= POLYLOG_RADIUS) {
        return Err(Error::Domain(format!("|z| = {r} outside the series disk of radius {POLYLOG_RADIUS}")));
    }
    if k == 0 {
        return Ok(z / (c(1.0) - z));
    }
    if r == 0.0 {
        return Ok(c(0.0));
    }
    let mut sum = c(0.0);
    let mut power = c(1.0);
    let mut m: u64 = 1;
    loop {
        power *= z;
        sum += power / (m as f64).powi(k as i32);
        // the tail after term m is at most |z|^{m+1} / (1 - |z|)
        if r.powi((m + 1) as i32) / (1.0 - r) < tol {
            return Ok(sum);
        }
        m += 1;
    }
}

/// Which value `b_1` takes; the other Bernoulli numbers are convention-free.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum B1 {
    MinusHalf,
    PlusHalf,
}

/// Bernoulli numbers `b_0, ..., b_n` from `Σ_{j ≤ m} C(m+1, j) b_j = 0`.
pub fn bernoulli(n: usize, b1: B1) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    b.push(BigRational::one());
    for m in 1..=n {
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one();
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bj;
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    if n >= 1 && b1 == B1::PlusHalf {
        b[1] = -b[1].clone();
    }
    b
}

/// Conventions for [`bd_value`] left open by the formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BdConventions {
    pub b1: B1,
    /// Sum `ℓ = 0..=k` (true) or `ℓ = 0..k-1` (false).
    pub include_top: bool,
    /// Choice of the square root of `-1`: `+1` for `i`, `-1` for `-i`.
    pub sqrt_minus_one: i8,
}

impl Default for BdConventions {
    fn default() -> Self {
        BdConventions { b1: B1::MinusHalf, include_top: false, sqrt_minus_one: 1 }
    }
}

/// `2i Σ_ℓ b_ℓ (log zz̄)^ℓ / ℓ! · Im Li_{k-ℓ}(z)` for even `k`, with `Re` for odd `k`.
pub fn bd_value(k: u32, z: Complex64, tol: f64, conv: BdConventions) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if z == c(0.0) || z == c(1.0) {
        return Err(Error::Domain("z must avoid 0 and 1".into()));
    }
    let top = if conv.include_top { k } else { k - 1 };
    let b = bernoulli(top as usize, conv.b1);
    let log_zz = (z * z.conj()).re.ln();
    let mut sum = 0.0;
    let mut fact = 1.0;
    for l in 0..=top {
        if l > 0 {
            fact *= l as f64;
        }
        let li = polylog(k - l, z, tol)?;
        let part = if k.is_multiple_of(2) { li.im } else { li.re };
        sum += b[l as usize].to_f64().unwrap() * log_zz.powi(l as i32) / fact * part;
    }
    Ok(Complex64::new(0.0, 2.0 * conv.sqrt_minus_one as f64) * sum)
}
