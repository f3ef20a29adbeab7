//! Filtered (φ, N)-modules as matrix data.
//!
//! A module is a `K_0`-space `M = K_0^d` (here `K_0 = Q_p`) with a linear Frobenius `φ`,
//! a monodromy operator `N` with `Nφ = pφN`, and a descending filtration of
//! `M_K = K^d` given by explicit bases at listed steps. A step that is not listed
//! inherits the span of the next listed step above it; everything above the highest
//! listed step is zero, and the lowest listed step must span `M_K`.
//!
//! Slopes follow the Frobenius eigenvalue: `M_n = ker(φ - p^n)`. The Tate object
//! `K(n)` has `φ = p^{-n}` and its filtration jumps at `-n`, so both its slope and its
//! Hodge jump are `-n`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, columns_to_mat, Vector};
use crate::matrix::Mat;
use crate::padic::{LocalField, Scalar};

/// Descending filtration, stored as `(step, basis)` pairs sorted by increasing step.
#[derive(Clone, Debug)]
pub struct Filtration {
    steps: Vec<(i64, Vec<Vector>)>,
}

impl Filtration {
    pub fn new(mut steps: Vec<(i64, Vec<Vector>)>) -> Result<Filtration> {
        steps.sort_by_key(|(s, _)| *s);
        if steps.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Invalid("filtration lists a step twice".into()));
        }
        Ok(Filtration { steps })
    }

    pub fn empty() -> Filtration {
        Filtration { steps: Vec::new() }
    }

    pub fn steps(&self) -> &[(i64, Vec<Vector>)] {
        &self.steps
    }

    /// Basis of `F^j`: the span of the smallest listed step `>= j`, or nothing.
    pub fn at(&self, j: i64) -> &[Vector] {
        self.steps.iter().find(|(s, _)| *s >= j).map_or(&[], |(_, b)| b.as_slice())
    }

    pub fn lowest(&self) -> Option<i64> {
        self.steps.first().map(|(s, _)| *s)
    }

    pub fn highest(&self) -> Option<i64> {
        self.steps.last().map(|(s, _)| *s)
    }

    /// Collapses a dense description `F^lo, F^{lo+1}, ..., F^hi` (with `F^{hi+1} = 0`)
    /// to the steps where the dimension drops.
    fn from_dense(field: &LocalField, dim: usize, lo: i64, dense: Vec<Vec<Vector>>) -> Result<Filtration> {
        let mut ranks = Vec::with_capacity(dense.len() + 1);
        for b in &dense {
            ranks.push(linalg::span_rank(field, dim, b)?);
        }
        ranks.push(0);
        let mut steps = Vec::new();
        for (k, b) in dense.into_iter().enumerate() {
            if ranks[k] != ranks[k + 1] {
                steps.push((lo + k as i64, b));
            }
        }
        Ok(Filtration { steps })
    }

    fn map_vectors(&self, f: impl Fn(&Vector) -> Vector) -> Filtration {
        Filtration { steps: self.steps.iter().map(|(s, b)| (*s, b.iter().map(&f).collect())).collect() }
    }
}

/// A filtered (φ, N)-module.
#[derive(Clone, Debug)]
pub struct FilPhiNModule {
    field: LocalField,
    dim: usize,
    phi: Mat<Scalar>,
    monodromy: Mat<Scalar>,
    filtration: Filtration,
}

/// Outcome of [`FilPhiNModule::validate`]; an empty violation list means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The multiset of slopes or Hodge jumps, sorted increasingly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polygon(pub Vec<i64>);

/// Bases of the slope components `M_n`, in the coordinates of the module.
#[derive(Clone, Debug)]
pub struct SlopeDecomposition {
    pub components: BTreeMap<i64, Vec<Vector>>,
}

impl SlopeDecomposition {
    /// Basis vectors ordered by decreasing slope (that is, increasing degree).
    pub fn ordered(&self) -> Vec<(i64, Vector)> {
        self.components.iter().rev().flat_map(|(s, b)| b.iter().map(move |v| (*s, v.clone()))).collect()
    }

    pub fn dim(&self, slope: i64) -> usize {
        self.components.get(&slope).map_or(0, Vec::len)
    }
}

/// The module rewritten in its slope basis.
#[derive(Clone, Debug)]
pub(crate) struct SlopeFrame {
    /// Columns: slope basis in module coordinates, decreasing slope.
    pub basis: Mat<Scalar>,
    pub slopes: Vec<i64>,
    /// `N` in slope coordinates.
    pub monodromy: Mat<Scalar>,
    /// Filtration in slope coordinates.
    pub filtration: Filtration,
}

impl SlopeFrame {
    fn indices(&self, pred: impl Fn(i64) -> bool) -> Vec<usize> {
        (0..self.slopes.len()).filter(|&k| pred(self.slopes[k])).collect()
    }
}

/// Result of [`kernel`]: the kernel module and its inclusion into the source.
#[derive(Clone, Debug)]
pub struct SubObject {
    pub module: FilPhiNModule,
    pub inclusion: Mat<Scalar>,
}

/// Result of [`cokernel`]: the cokernel module and the projection from the target.
#[derive(Clone, Debug)]
pub struct QuotientObject {
    pub module: FilPhiNModule,
    pub projection: Mat<Scalar>,
}

impl FilPhiNModule {
    pub fn new(field: &LocalField, phi: Mat<Scalar>, monodromy: Mat<Scalar>, filtration: Filtration) -> Result<FilPhiNModule> {
        let dim = phi.rows();
        if !phi.is_square() || monodromy.rows() != dim || monodromy.cols() != dim {
            return Err(Error::Invalid("phi and N must be square of the same size".into()));
        }
        for (s, b) in filtration.steps() {
            if b.iter().any(|v| v.len() != dim) {
                return Err(Error::Invalid(format!("filtration step {s} has a vector of the wrong length")));
            }
        }
        let z = field.zero();
        Ok(FilPhiNModule {
            field: field.clone(),
            dim,
            phi: phi.with_template(&z),
            monodromy: monodromy.with_template(&z),
            filtration,
        })
    }

    /// The Tate object `K(n) = (K_0, p^{-n}, jump at -n)`.
    pub fn tate(field: &LocalField, n: i64) -> FilPhiNModule {
        let phi = Mat::diagonal(&[field.p_power(-n)]);
        let zero = Mat::zeros_like(&field.zero(), 1, 1);
        let fil = Filtration { steps: vec![(-n, vec![vec![field.one()]])] };
        FilPhiNModule::new(field, phi, zero, fil).unwrap()
    }

    pub fn zero_module(field: &LocalField) -> FilPhiNModule {
        let z = Mat::zeros_like(&field.zero(), 0, 0);
        FilPhiNModule::new(field, z.clone(), z, Filtration::empty()).unwrap()
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phi(&self) -> &Mat<Scalar> {
        &self.phi
    }

    pub fn monodromy(&self) -> &Mat<Scalar> {
        &self.monodromy
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    /// Same data with the field replaced (used when the log branch changes).
    pub fn with_field(&self, field: &LocalField) -> FilPhiNModule {
        FilPhiNModule { field: field.clone(), ..self.clone() }
    }

    pub fn with_filtration(&self, filtration: Filtration) -> Result<FilPhiNModule> {
        FilPhiNModule::new(&self.field, self.phi.clone(), self.monodromy.clone(), filtration)
    }

    /// Dimension of `F^j`.
    pub fn fil_dim(&self, j: i64) -> Result<usize> {
        linalg::span_rank(&self.field, self.dim, self.filtration.at(j))
    }

    fn zero_mat(&self, r: usize, c: usize) -> Mat<Scalar> {
        Mat::zeros_like(&self.field.zero(), r, c)
    }

    fn identity(&self) -> Mat<Scalar> {
        Mat::identity_like(&self.field.one(), self.dim)
    }

    /// Checks `Nφ = pφN`, that `φ` and `N` are defined over `K_0`, that `φ` is
    /// bijective, and that the filtration is descending, exhaustive and separated.
    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        let d = self.dim;
        if self.phi.entries().chain(self.monodromy.entries()).any(|x| !x.in_base_field()) {
            v.push("phi or N has entries outside K_0".to_string());
        }
        match linalg::rank(&self.phi) {
            Ok(r) if r == d => {}
            Ok(_) => v.push("phi is not bijective".into()),
            Err(e) => v.push(format!("phi rank undecidable: {e}")),
        }
        let p = self.field.from_int(self.field.p() as i64);
        let lhs = self.monodromy.mul(&self.phi);
        let rhs = self.phi.mul(&self.monodromy).scale(&p);
        if !linalg::mat_eq_prec(&lhs, &rhs) {
            v.push("N·phi != p·phi·N".into());
        }
        let steps = self.filtration.steps();
        if d > 0 {
            match steps.first() {
                None => v.push("filtration lists no step".into()),
                Some((s, b)) => match linalg::span_rank(&self.field, d, b) {
                    Ok(r) if r == d => {}
                    Ok(r) => v.push(format!("lowest step {s} spans dimension {r}, not {d}")),
                    Err(e) => v.push(format!("rank at step {s} undecidable: {e}")),
                },
            }
        }
        for (s, b) in steps {
            match linalg::span_rank(&self.field, d, b) {
                Ok(r) if r == b.len() => {}
                Ok(_) => v.push(format!("basis at step {s} is linearly dependent")),
                Err(e) => v.push(format!("rank at step {s} undecidable: {e}")),
            }
        }
        for w in steps.windows(2) {
            match linalg::span_contains(&self.field, d, &w[0].1, &w[1].1) {
                Ok(true) => {}
                Ok(false) => v.push(format!("step {} is not contained in step {}", w[1].0, w[0].0)),
                Err(e) => v.push(format!("containment of step {} undecidable: {e}", w[1].0)),
            }
        }
        ValidationReport { violations: v }
    }

    /// Decomposes `M = ⊕ M_n` with `φ = p^n` on `M_n`.
    ///
    /// Candidate slopes range over `[min ν(φ), -min ν(φ^{-1})]`, which contains the
    /// valuation of every eigenvalue.
    pub fn slope_decomposition(&self) -> Result<SlopeDecomposition> {
        let d = self.dim;
        let mut components = BTreeMap::new();
        if d == 0 {
            return Ok(SlopeDecomposition { components });
        }
        let inv = linalg::inverse(&self.phi).map_err(|e| match e {
            Error::InsufficientPrecision(_) => e,
            _ => Error::NotMixedTatePhi("phi is not invertible".into()),
        })?;
        let min_val = |m: &Mat<Scalar>| {
            m.entries().filter(|x| !x.is_zero()).map(|x| x.val_bound().floor().to_integer()).min().unwrap_or(0)
        };
        let lo = min_val(&self.phi);
        let hi = -min_val(&inv);
        let mut total = 0;
        for n in lo..=hi {
            let shifted = self.phi.sub(&self.identity().scale(&self.field.p_power(n)));
            let ker = linalg::kernel(&shifted)?;
            if !ker.is_empty() {
                total += ker.len();
                components.insert(n, ker);
            }
        }
        if total != d {
            return Err(Error::NotMixedTatePhi(format!(
                "p-power eigenspaces span dimension {total} of {d}; phi is not diagonalizable with p-power eigenvalues"
            )));
        }
        Ok(SlopeDecomposition { components })
    }

    pub(crate) fn slope_frame(&self) -> Result<SlopeFrame> {
        let dec = self.slope_decomposition()?;
        let ordered = dec.ordered();
        let slopes: Vec<i64> = ordered.iter().map(|(s, _)| *s).collect();
        let cols: Vec<Vector> = ordered.into_iter().map(|(_, v)| v).collect();
        let basis = columns_to_mat(&self.field, self.dim, &cols);
        if self.dim == 0 {
            return Ok(SlopeFrame { basis, slopes, monodromy: self.monodromy.clone(), filtration: Filtration::empty() });
        }
        let inv = linalg::inverse(&basis)?;
        let monodromy = inv.mul(&self.monodromy).mul(&basis);
        let filtration = self.filtration.map_vectors(|v| inv.mul_vec(v));
        Ok(SlopeFrame { basis, slopes, monodromy, filtration })
    }

    /// Range of steps outside which both the filtration and the slope condition are trivial.
    fn step_range(&self, slopes: &[i64]) -> Option<(i64, i64)> {
        let lo = slopes.iter().copied().chain(self.filtration.lowest()).min()?;
        let hi = slopes.iter().copied().chain(self.filtration.highest()).max()?;
        Some((lo, hi + 1))
    }

    /// Property (1) and (2): `φ` is diagonal with p-power eigenvalues, and for every `i`
    /// the projection `F^i → M_{≥i} ⊗ K` is an isomorphism.
    pub fn is_mixed_tate(&self) -> Result<bool> {
        let frame = match self.slope_frame() {
            Ok(f) => f,
            Err(Error::NotMixedTatePhi(_)) => return Ok(false),
            Err(e) => return Err(e),
        };
        let Some((lo, hi)) = self.step_range(&frame.slopes) else {
            return Ok(true);
        };
        for i in lo..=hi {
            let rows = frame.indices(|s| s >= i);
            let fi = frame.filtration.at(i);
            if linalg::span_rank(&self.field, self.dim, fi)? != rows.len() {
                return Ok(false);
            }
            if rows.is_empty() {
                continue;
            }
            let proj = columns_to_mat(&self.field, self.dim, fi).select_rows(&rows);
            if linalg::rank(&proj)? != rows.len() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn newton_polygon(&self) -> Result<Polygon> {
        let dec = self.slope_decomposition()?;
        let mut out = Vec::new();
        for (s, b) in &dec.components {
            out.extend(std::iter::repeat_n(*s, b.len()));
        }
        Ok(Polygon(out))
    }

    /// Hodge jumps `j` with multiplicity `dim F^j - dim F^{j+1}`.
    pub fn hodge_polygon(&self) -> Result<Polygon> {
        let mut out = Vec::new();
        let (Some(lo), Some(hi)) = (self.filtration.lowest(), self.filtration.highest()) else {
            return Ok(Polygon(out));
        };
        let mut prev = self.fil_dim(lo)?;
        for j in lo..=hi {
            let next = self.fil_dim(j + 1)?;
            out.extend(std::iter::repeat_n(j, prev - next));
            prev = next;
        }
        Ok(Polygon(out))
    }

    fn require_mixed_tate(&self) -> Result<SlopeFrame> {
        let frame = self.slope_frame()?;
        if !self.is_mixed_tate()? {
            return Err(Error::NotMixedTate("the filtration does not split the slope filtration".into()));
        }
        Ok(frame)
    }

    /// Submodule spanned by the slope basis vectors with index set `idx`, with the
    /// intersected filtration.
    fn restrict_to(&self, frame: &SlopeFrame, idx: &[usize]) -> Result<FilPhiNModule> {
        let k = idx.len();
        if k == 0 {
            return Ok(FilPhiNModule::zero_module(&self.field));
        }
        let phi = Mat::diagonal(&idx.iter().map(|&i| self.field.p_power(frame.slopes[i])).collect::<Vec<_>>());
        let monodromy = frame.monodromy.submatrix(idx, idx);
        let units: Vec<Vector> = idx.iter().map(|&i| linalg::unit_vector(&self.field, self.dim, i)).collect();
        let (lo, hi) = self.step_range(&frame.slopes).unwrap();
        let mut dense = Vec::new();
        for j in lo..=hi {
            let inter = linalg::intersect(&self.field, self.dim, &units, frame.filtration.at(j))?;
            dense.push(inter.iter().map(|v| idx.iter().map(|&i| v[i].clone()).collect()).collect());
        }
        let fil = Filtration::from_dense(&self.field, k, lo, dense)?;
        FilPhiNModule::new(&self.field, phi, monodromy, fil)
    }

    /// `W_{2i}`: the slope-`≤ i` part with restricted `φ`, `N` and intersected filtration,
    /// written in its slope basis.
    pub fn weight_sub(&self, i: i64) -> Result<FilPhiNModule> {
        let frame = self.require_mixed_tate()?;
        let idx = frame.indices(|s| s <= i);
        self.restrict_to(&frame, &idx)
    }

    /// `gr^W_{2i}`: the slope-`i` part with the filtration jumping only at `i`.
    pub fn gr_weight(&self, i: i64) -> Result<FilPhiNModule> {
        let frame = self.require_mixed_tate()?;
        let k = frame.indices(|s| s == i).len();
        if k == 0 {
            return Ok(FilPhiNModule::zero_module(&self.field));
        }
        let phi = Mat::diagonal(&vec![self.field.p_power(i); k]);
        let basis: Vec<Vector> = (0..k).map(|j| linalg::unit_vector(&self.field, k, j)).collect();
        FilPhiNModule::new(&self.field, phi, self.zero_mat(k, k), Filtration { steps: vec![(i, basis)] })
    }

    /// Exactness of `0 → W_{2(i-1)} → W_{2i} → gr^W_{2i} → 0` as φ-modules and
    /// strictly on every filtration step.
    pub fn check_weight_exactness(&self, i: i64) -> Result<bool> {
        let frame = self.require_mixed_tate()?;
        let w = self.weight_sub(i)?;
        let w_prev = self.weight_sub(i - 1)?;
        let gr = self.gr_weight(i)?;
        if w.dim() != w_prev.dim() + gr.dim() {
            return Ok(false);
        }
        // W_{2i} is written in the slope basis restricted to slopes <= i, so the inclusion of
        // W_{2(i-1)} is onto the leading block when slopes are ordered decreasingly... check it.
        let idx_i = frame.indices(|s| s <= i);
        let idx_prev = frame.indices(|s| s < i);
        if !idx_prev.iter().all(|k| idx_i.contains(k)) {
            return Ok(false);
        }
        // φ-compatibility: the quotient carries φ = p^i.
        let slopes_w: Vec<i64> = idx_i.iter().map(|&k| frame.slopes[k]).collect();
        if slopes_w.iter().filter(|&&s| s == i).count() != gr.dim() {
            return Ok(false);
        }
        let (lo, hi) = match self.step_range(&frame.slopes) {
            Some(r) => r,
            None => return Ok(true),
        };
        for j in lo - 1..=hi + 1 {
            if w.fil_dim(j)? != w_prev.fil_dim(j)? + gr.fil_dim(j)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Criterion by the weight filtration: every graded piece `W_{2i}/W_{2(i-1)}` with
    /// the induced filtration is a sum of copies of `K(-i)`.
    pub fn mt_criterion(&self) -> Result<bool> {
        let frame = match self.slope_frame() {
            Ok(f) => f,
            Err(Error::NotMixedTatePhi(_)) => return Ok(false),
            Err(e) => return Err(e),
        };
        let Some((lo, hi)) = self.step_range(&frame.slopes) else {
            return Ok(true);
        };
        let distinct: Vec<i64> = {
            let mut s = frame.slopes.clone();
            s.dedup();
            s
        };
        for &i in &distinct {
            let below: Vec<Vector> =
                frame.indices(|s| s <= i).iter().map(|&k| linalg::unit_vector(&self.field, self.dim, k)).collect();
            let graded = frame.indices(|s| s == i);
            for j in lo..=hi {
                let sub = linalg::intersect(&self.field, self.dim, &below, frame.filtration.at(j))?;
                let image: Vec<Vector> =
                    sub.iter().map(|v| graded.iter().map(|&k| v[k].clone()).collect()).collect();
                let r = linalg::span_rank(&self.field, graded.len(), &image)?;
                let expected = if j <= i { graded.len() } else { 0 };
                if r != expected {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn is_crystalline(&self) -> bool {
        linalg::mat_is_zero_prec(&self.monodromy)
    }

    /// Rewrites the module in the basis given by the columns of `s` (over `K_0`).
    pub fn change_basis(&self, s: &Mat<Scalar>) -> Result<FilPhiNModule> {
        let inv = linalg::inverse(s)?;
        let phi = inv.mul(&self.phi).mul(s);
        let monodromy = inv.mul(&self.monodromy).mul(s);
        let fil = self.filtration.map_vectors(|v| inv.mul_vec(v));
        FilPhiNModule::new(&self.field, phi, monodromy, fil)
    }

    /// Entrywise equality of `φ`, `N` and equality of every filtration step as subspaces.
    pub fn same_as(&self, other: &FilPhiNModule) -> Result<bool> {
        if self.dim != other.dim
            || !linalg::mat_eq_prec(&self.phi, &other.phi)
            || !linalg::mat_eq_prec(&self.monodromy, &other.monodromy)
        {
            return Ok(false);
        }
        let steps: Vec<i64> = self
            .filtration
            .steps()
            .iter()
            .chain(other.filtration.steps())
            .flat_map(|(s, _)| [*s, *s + 1])
            .collect();
        for j in steps {
            if !linalg::span_eq(&self.field, self.dim, self.filtration.at(j), other.filtration.at(j))? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Dense description of a filtration over a range covering both inputs.
fn joint_range(a: &Filtration, b: &Filtration) -> Option<(i64, i64)> {
    let lo = a.lowest().into_iter().chain(b.lowest()).min()?;
    let hi = a.highest().into_iter().chain(b.highest()).max()?;
    Some((lo, hi))
}

pub fn direct_sum(a: &FilPhiNModule, b: &FilPhiNModule) -> Result<FilPhiNModule> {
    let field = a.field();
    let (da, db) = (a.dim(), b.dim());
    let n = da + db;
    let block = |x: &Mat<Scalar>, y: &Mat<Scalar>| {
        Mat::from_fn(n, n, |r, c| {
            if r < da && c < da {
                x.get(r, c).clone()
            } else if r >= da && c >= da {
                y.get(r - da, c - da).clone()
            } else {
                field.zero()
            }
        })
        .with_template(&field.zero())
    };
    let phi = block(a.phi(), b.phi());
    let mon = block(a.monodromy(), b.monodromy());
    let fil = match joint_range(a.filtration(), b.filtration()) {
        None => Filtration::empty(),
        Some((lo, hi)) => {
            let mut dense = Vec::new();
            for j in lo..=hi {
                let mut vs: Vec<Vector> = Vec::new();
                for v in a.filtration().at(j) {
                    let mut w = v.clone();
                    w.extend((0..db).map(|_| field.zero()));
                    vs.push(w);
                }
                for v in b.filtration().at(j) {
                    let mut w: Vector = (0..da).map(|_| field.zero()).collect();
                    w.extend(v.iter().cloned());
                    vs.push(w);
                }
                dense.push(vs);
            }
            Filtration::from_dense(field, n, lo, dense)?
        }
    };
    FilPhiNModule::new(field, phi, mon, fil)
}

/// Basis of `Hom(M, M')`: `K_0`-matrices `f` with `fφ = φ'f`, `fN = N'f` and
/// `f(F^i) ⊆ F'^i` for all `i`.
pub fn hom_space(m: &FilPhiNModule, m2: &FilPhiNModule) -> Result<Vec<Mat<Scalar>>> {
    let field = m.field();
    if !field.same_arithmetic(m2.field()) {
        return Err(Error::Invalid("modules over different fields".into()));
    }
    let (d, d2) = (m.dim(), m2.dim());
    let nvars = d * d2;
    if nvars == 0 {
        return Ok(Vec::new());
    }
    let var = |r: usize, c: usize| r * d + c;
    let mut eqs: Vec<Vector> = Vec::new();
    for (a, a2) in [(m.phi(), m2.phi()), (m.monodromy(), m2.monodromy())] {
        // (f a - a2 f)[r][c]
        for r in 0..d2 {
            for c in 0..d {
                let mut row = vec![field.zero(); nvars];
                for k in 0..d {
                    row[var(r, k)] = row[var(r, k)].add(a.get(k, c));
                }
                for k in 0..d2 {
                    row[var(k, c)] = row[var(k, c)].sub(a2.get(r, k));
                }
                eqs.push(row);
            }
        }
    }
    let e = field.degree();
    if let Some((lo, hi)) = joint_range(m.filtration(), m2.filtration()) {
        for j in lo..=hi + 1 {
            let src = m.filtration().at(j);
            if src.is_empty() {
                continue;
            }
            let ann = linalg::annihilator(field, d2, m2.filtration().at(j))?;
            for alpha in &ann {
                for w in src {
                    // α·(f w) = Σ α_r f_rc w_c; split each K-coefficient into π-coordinates
                    let mut rows = vec![vec![field.zero(); nvars]; e];
                    for r in 0..d2 {
                        for c in 0..d {
                            let coeff = alpha[r].mul(&w[c]);
                            for (k, q) in coeff.coords().iter().enumerate() {
                                rows[k][var(r, c)] = Scalar::from_qp(field, q.clone());
                            }
                        }
                    }
                    eqs.extend(rows);
                }
            }
        }
    }
    let sys = Mat::from_rows(eqs)?.with_template(&field.zero());
    let ker = linalg::kernel(&sys)?;
    Ok(ker
        .into_iter()
        .map(|v| Mat::from_fn(d2, d, |r, c| v[var(r, c)].clone()).with_template(&field.zero()))
        .collect())
}

/// Checks that `f` is a morphism `M → M'`.
pub fn is_morphism(m: &FilPhiNModule, m2: &FilPhiNModule, f: &Mat<Scalar>) -> Result<bool> {
    let field = m.field();
    if f.rows() != m2.dim() || f.cols() != m.dim() {
        return Ok(false);
    }
    if !linalg::mat_eq_prec(&f.mul(m.phi()), &m2.phi().mul(f))
        || !linalg::mat_eq_prec(&f.mul(m.monodromy()), &m2.monodromy().mul(f))
    {
        return Ok(false);
    }
    if let Some((lo, hi)) = joint_range(m.filtration(), m2.filtration()) {
        for j in lo..=hi + 1 {
            let images: Vec<Vector> = m.filtration().at(j).iter().map(|v| f.mul_vec(v)).collect();
            if !linalg::span_contains(field, m2.dim(), m2.filtration().at(j), &images)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Kernel of a morphism, with the intersected filtration.
pub fn kernel(m: &FilPhiNModule, m2: &FilPhiNModule, f: &Mat<Scalar>) -> Result<SubObject> {
    let field = m.field();
    let d = m.dim();
    if d == 0 {
        return Ok(SubObject { module: FilPhiNModule::zero_module(field), inclusion: Mat::zeros_like(&field.zero(), 0, 0) });
    }
    let ker = if m2.dim() == 0 {
        (0..d).map(|i| linalg::unit_vector(field, d, i)).collect()
    } else {
        linalg::kernel(f)?
    };
    let k = ker.len();
    let inc = columns_to_mat(field, d, &ker);
    if k == 0 {
        return Ok(SubObject { module: FilPhiNModule::zero_module(field), inclusion: inc });
    }
    let phi = linalg::solve(&inc, &m.phi().mul(&inc))?;
    let mon = linalg::solve(&inc, &m.monodromy().mul(&inc))?;
    let fil = match (m.filtration().lowest(), m.filtration().highest()) {
        (Some(lo), Some(hi)) => {
            let mut dense = Vec::new();
            for j in lo..=hi {
                let inter = linalg::intersect(field, d, &ker, m.filtration().at(j))?;
                let mut coords = Vec::new();
                for v in &inter {
                    let col = columns_to_mat(field, d, std::slice::from_ref(v));
                    coords.push(linalg::solve(&inc, &col)?.column(0));
                }
                dense.push(coords);
            }
            Filtration::from_dense(field, k, lo, dense)?
        }
        _ => Filtration::empty(),
    };
    Ok(SubObject { module: FilPhiNModule::new(field, phi, mon, fil)?, inclusion: inc })
}

/// Cokernel of a morphism, with the image filtration.
pub fn cokernel(m: &FilPhiNModule, m2: &FilPhiNModule, f: &Mat<Scalar>) -> Result<QuotientObject> {
    let field = m2.field();
    let d2 = m2.dim();
    let image = if m.dim() == 0 { Vec::new() } else { linalg::independent_subset(field, d2, &f.columns())? };
    let r = image.len();
    let full = linalg::extend_to_basis(field, d2, &image)?;
    let complement: Vec<Vector> = full[r..].to_vec();
    let q = d2 - r;
    if q == 0 {
        return Ok(QuotientObject {
            module: FilPhiNModule::zero_module(field),
            projection: Mat::zeros_like(&field.zero(), 0, d2),
        });
    }
    let b = columns_to_mat(field, d2, &full);
    let binv = linalg::inverse(&b)?;
    let rows: Vec<usize> = (r..d2).collect();
    let proj = binv.select_rows(&rows);
    let c = columns_to_mat(field, d2, &complement);
    let phi = proj.mul(m2.phi()).mul(&c);
    let mon = proj.mul(m2.monodromy()).mul(&c);
    let fil = match (m2.filtration().lowest(), m2.filtration().highest()) {
        (Some(lo), Some(hi)) => {
            let mut dense = Vec::new();
            for j in lo..=hi {
                let imgs: Vec<Vector> = m2.filtration().at(j).iter().map(|v| proj.mul_vec(v)).collect();
                dense.push(linalg::independent_subset(field, q, &imgs)?);
            }
            Filtration::from_dense(field, q, lo, dense)?
        }
        _ => Filtration::empty(),
    };
    Ok(QuotientObject { module: FilPhiNModule::new(field, phi, mon, fil)?, projection: proj })
}

fn kron_vec(a: &Vector, b: &Vector) -> Vector {
    a.iter().flat_map(|x| b.iter().map(move |y| x.mul(y))).collect()
}

/// `M ⊗ M'` with `N = N⊗1 + 1⊗N'` and `F^i = Σ_{a+b=i} F^a ⊗ F'^b`.
pub fn tensor(m: &FilPhiNModule, m2: &FilPhiNModule) -> Result<FilPhiNModule> {
    let field = m.field();
    let n = m.dim() * m2.dim();
    let phi = m.phi().kron(m2.phi());
    let id1 = Mat::identity_like(&field.one(), m.dim());
    let id2 = Mat::identity_like(&field.one(), m2.dim());
    let mon = m.monodromy().kron(&id2).add(&id1.kron(m2.monodromy()));
    let fa = m.filtration();
    let fb = m2.filtration();
    let fil = match (fa.lowest(), fa.highest(), fb.lowest(), fb.highest()) {
        (Some(la), Some(ha), Some(lb), Some(hb)) if n > 0 => {
            let mut dense = Vec::new();
            for i in la + lb..=ha + hb {
                let mut vs = Vec::new();
                for a in la..=ha {
                    for u in fa.at(a) {
                        for w in fb.at(i - a) {
                            vs.push(kron_vec(u, w));
                        }
                    }
                }
                dense.push(linalg::independent_subset(field, n, &vs)?);
            }
            Filtration::from_dense(field, n, la + lb, dense)?
        }
        _ => Filtration::empty(),
    };
    FilPhiNModule::new(field, phi.with_template(&field.zero()), mon.with_template(&field.zero()), fil)
}

/// `M^∨` with `φ^∨ = (φ^{-1})^T`, `N^∨ = -N^T` and `F^i(M^∨) = (F^{1-i})^⊥`.
pub fn dual(m: &FilPhiNModule) -> Result<FilPhiNModule> {
    let field = m.field();
    let d = m.dim();
    if d == 0 {
        return Ok(m.clone());
    }
    let phi = linalg::inverse(m.phi())?.transpose();
    let mon = m.monodromy().transpose().neg();
    let f = m.filtration();
    let fil = match (f.lowest(), f.highest()) {
        (Some(lo), Some(hi)) => {
            let mut dense = Vec::new();
            for i in -hi..=1 - lo {
                dense.push(linalg::annihilator(field, d, f.at(1 - i))?);
            }
            Filtration::from_dense(field, d, -hi, dense)?
        }
        _ => Filtration::empty(),
    };
    FilPhiNModule::new(field, phi, mon, fil)
}

pub fn tate_twist(m: &FilPhiNModule, n: i64) -> Result<FilPhiNModule> {
    tensor(m, &FilPhiNModule::tate(m.field(), n))
}

/// Looks for an isomorphism `M → M'` among a few seeded random combinations of a basis
/// of `Hom(M, M')`.
pub fn find_isomorphism(m: &FilPhiNModule, m2: &FilPhiNModule) -> Result<Option<Mat<Scalar>>> {
    if m.dim() != m2.dim() {
        return Ok(None);
    }
    if m.dim() == 0 {
        return Ok(Some(Mat::zeros_like(&m.field().zero(), 0, 0)));
    }
    let homs = hom_space(m, m2)?;
    if homs.is_empty() {
        return Ok(None);
    }
    let back = hom_space(m2, m)?;
    if back.is_empty() {
        return Ok(None);
    }
    let field = m.field();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..8 {
        let mut f = Mat::zeros_like(&field.zero(), m2.dim(), m.dim());
        for h in &homs {
            f = f.add(&h.scale(&field.from_int(rng.gen_range(-50..=50))));
        }
        if linalg::rank(&f)? == m.dim() {
            let inv = linalg::inverse(&f)?;
            if is_morphism(m2, m, &inv)? {
                return Ok(Some(f));
            }
        }
    }
    Ok(None)
}

pub fn is_isomorphic(m: &FilPhiNModule, m2: &FilPhiNModule) -> Result<bool> {
    Ok(find_isomorphism(m, m2)?.is_some())
}

/// Dimension of `M_n` for each slope, as a quick summary.
pub fn slope_dims(m: &FilPhiNModule) -> Result<BTreeMap<i64, usize>> {
    Ok(m.slope_decomposition()?.components.iter().map(|(s, b)| (*s, b.len())).collect())
}

impl Polygon {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of entries (the endpoint height of the polygon).
    pub fn total(&self) -> i64 {
        self.0.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> LocalField {
        LocalField::qp(5, 12).unwrap()
    }

    fn v(k: &LocalField, xs: &[i64]) -> Vector {
        xs.iter().map(|&x| k.from_int(x)).collect()
    }

    fn m(k: &LocalField, rows: &[&[i64]]) -> Mat<Scalar> {
        Mat::from_rows(rows.iter().map(|r| r.iter().map(|&x| k.from_int(x)).collect()).collect()).unwrap()
    }

    /// K(0) ⊕ K(1) on basis (e0, e1) with a line at F^0.
    fn two_dim(k: &LocalField, line: Vector, zero_step: i64) -> FilPhiNModule {
        let phi = Mat::diagonal(&[k.one(), k.p_power(-1)]);
        let fil = Filtration::new(vec![(-1, vec![v(k, &[1, 0]), v(k, &[0, 1])]), (zero_step, vec![line])]).unwrap();
        FilPhiNModule::new(k, phi, Mat::zeros_like(&k.zero(), 2, 2), fil).unwrap()
    }

    #[test]
    fn tate_objects_are_valid_and_mixed_tate() {
        let k = field();
        for n in -2..=3 {
            let t = FilPhiNModule::tate(&k, n);
            assert!(t.validate().is_valid());
            assert!(t.is_mixed_tate().unwrap());
            assert!(t.mt_criterion().unwrap());
            assert_eq!(t.newton_polygon().unwrap(), Polygon(vec![-n]));
            assert_eq!(t.hodge_polygon().unwrap(), Polygon(vec![-n]));
            let dec = t.slope_decomposition().unwrap();
            assert_eq!(dec.dim(-n), 1);
        }
    }

    #[test]
    fn monodromy_relation_violation_is_reported() {
        let k = field();
        let phi = Mat::diagonal(&[k.one(), k.p_power(-1)]);
        // N e1 = e0 raises the slope: N·phi != p·phi·N
        let n = m(&k, &[&[0, 1], &[0, 0]]);
        let fil = Filtration::new(vec![(0, vec![v(&k, &[1, 0]), v(&k, &[0, 1])])]).unwrap();
        let bad = FilPhiNModule::new(&k, phi, n, fil).unwrap();
        let rep = bad.validate();
        assert!(!rep.is_valid());
        assert!(rep.violations.iter().any(|s| s.contains("N·phi")));
    }

    #[test]
    fn filtration_must_be_exhaustive() {
        let k = field();
        let phi = Mat::diagonal(&[k.one(), k.one()]);
        let fil = Filtration::new(vec![(0, vec![v(&k, &[1, 0])])]).unwrap();
        let bad = FilPhiNModule::new(&k, phi, Mat::zeros_like(&k.zero(), 2, 2), fil).unwrap();
        assert!(!bad.validate().is_valid());
    }

    #[test]
    fn direct_sum_slopes() {
        let k = field();
        let s = direct_sum(&FilPhiNModule::tate(&k, 0), &FilPhiNModule::tate(&k, 1)).unwrap();
        assert!(s.validate().is_valid());
        let dec = s.slope_decomposition().unwrap();
        assert_eq!(dec.components.keys().copied().collect::<Vec<_>>(), vec![-1, 0]);
        assert!(s.is_mixed_tate().unwrap());
        let ordered = dec.ordered();
        assert_eq!(ordered[0].0, 0);
        assert!(ordered[0].1[0].eq_prec(&k.one()));
    }

    #[test]
    fn non_diagonalizable_phi_is_rejected() {
        let k = field();
        let phi = m(&k, &[&[1, 1], &[0, 1]]);
        let fil = Filtration::new(vec![(0, vec![v(&k, &[1, 0]), v(&k, &[0, 1])])]).unwrap();
        let md = FilPhiNModule::new(&k, phi, Mat::zeros_like(&k.zero(), 2, 2), fil).unwrap();
        assert!(matches!(md.slope_decomposition(), Err(Error::NotMixedTatePhi(_))));
        let phi = m(&k, &[&[2, 0], &[0, 1]]);
        let md2 = md.change_basis(&Mat::identity_like(&k.one(), 2)).unwrap();
        let md2 = FilPhiNModule::new(&k, phi, md2.monodromy().clone(), md2.filtration().clone()).unwrap();
        assert!(matches!(md2.slope_decomposition(), Err(Error::NotMixedTatePhi(_))));
        assert!(!md2.is_mixed_tate().unwrap());
    }

    #[test]
    fn wrong_step_dimensions_break_mixed_tate() {
        let k = field();
        // F^0 = span(e1) projects to zero in M_{>=0} = span(e0)
        let bad = two_dim(&k, v(&k, &[0, 1]), 0);
        assert!(bad.validate().is_valid());
        assert!(!bad.is_mixed_tate().unwrap());
        assert!(!bad.mt_criterion().unwrap());
        // jump put at step 1: dim F^1 = 1 but M_{>=1} = 0
        let bad2 = two_dim(&k, v(&k, &[1, 3]), 1);
        assert!(!bad2.is_mixed_tate().unwrap());
        assert!(!bad2.mt_criterion().unwrap());
        assert_ne!(bad2.newton_polygon().unwrap(), bad2.hodge_polygon().unwrap());
        let good = two_dim(&k, v(&k, &[1, 3]), 0);
        assert!(good.is_mixed_tate().unwrap());
        assert_eq!(good.newton_polygon().unwrap(), good.hodge_polygon().unwrap());
    }

    #[test]
    fn weight_filtration_pieces() {
        let k = field();
        let md = two_dim(&k, v(&k, &[1, 3]), 0);
        let w0 = md.weight_sub(0).unwrap();
        assert_eq!(w0.dim(), 2);
        let wm1 = md.weight_sub(-1).unwrap();
        assert_eq!(wm1.dim(), 1);
        assert!(is_isomorphic(&wm1, &FilPhiNModule::tate(&k, 1)).unwrap());
        assert_eq!(md.weight_sub(-5).unwrap().dim(), 0);
        let gr = md.gr_weight(-1).unwrap();
        assert!(is_isomorphic(&gr, &FilPhiNModule::tate(&k, 1)).unwrap());
        for i in -2..=1 {
            assert!(md.check_weight_exactness(i).unwrap());
        }
    }

    #[test]
    fn homs_between_tate_objects() {
        let k = field();
        let t0 = FilPhiNModule::tate(&k, 0);
        let t1 = FilPhiNModule::tate(&k, 1);
        assert_eq!(hom_space(&t1, &t1).unwrap().len(), 1);
        assert_eq!(hom_space(&t0, &t1).unwrap().len(), 0);
        assert!(is_isomorphic(&t0, &t0).unwrap());
    }

    #[test]
    fn tensor_and_dual() {
        let k = field();
        for (a, b) in [(0, 1), (2, -1), (-3, -2)] {
            let t = tensor(&FilPhiNModule::tate(&k, a), &FilPhiNModule::tate(&k, b)).unwrap();
            assert!(t.validate().is_valid());
            assert!(is_isomorphic(&t, &FilPhiNModule::tate(&k, a + b)).unwrap());
        }
        for n in -2..=2 {
            let d = dual(&FilPhiNModule::tate(&k, n)).unwrap();
            assert!(d.same_as(&FilPhiNModule::tate(&k, -n)).unwrap());
        }
        let md = two_dim(&k, v(&k, &[1, 3]), 0);
        let dd = dual(&dual(&md).unwrap()).unwrap();
        assert!(dd.same_as(&md).unwrap());
        assert!(dual(&md).unwrap().is_mixed_tate().unwrap());
    }

    #[test]
    fn kernel_of_identity_is_zero() {
        let k = field();
        let md = two_dim(&k, v(&k, &[1, 3]), 0);
        let id = Mat::identity_like(&k.one(), 2);
        let ker = kernel(&md, &md, &id).unwrap();
        assert_eq!(ker.module.dim(), 0);
        let cok = cokernel(&md, &md, &id).unwrap();
        assert_eq!(cok.module.dim(), 0);
    }
}
