//! The crystalline point `η`, its semistable variant `η_st`, and extensions of Tate objects.
//!
//! All matrices here are written in the slope basis of the module (the canonical kernel
//! bases of `φ - p^n`, ordered by decreasing slope). For `v ∈ M_i`, `η(v)` is the unique
//! vector of `F^i M_K` whose projection to `M_{≥i} ⊗ K` is `v`.

use crate::error::{Error, Result};
use crate::filmod::{self, FilPhiNModule, Filtration};
use crate::kst::{self, KstPoly};
use crate::linalg::{self, columns_to_mat, Vector};
use crate::matrix::{nilpotent_exp, Mat, Ring};
use crate::padic::{branch_log, unit_log, Scalar};

/// `η` or `η_st` in the slope basis.
#[derive(Clone, Debug)]
pub struct EtaMatrix {
    /// Slope of each basis vector, decreasing.
    pub basis_slopes: Vec<i64>,
    /// The slope basis in the coordinates of the module (columns).
    pub basis: Mat<Scalar>,
    pub entries: Mat<KstPoly>,
}

impl EtaMatrix {
    pub fn dim(&self) -> usize {
        self.basis_slopes.len()
    }

    /// The matrix evaluated at `X = x`.
    pub fn at(&self, x: &Scalar) -> Mat<Scalar> {
        kst::eval_matrix(&self.entries, x)
    }

    /// Entries as constants, if no entry involves `X`.
    pub fn constant(&self) -> Option<Mat<Scalar>> {
        if self.entries.entries().any(|p| p.degree().unwrap_or(0) > 0) {
            return None;
        }
        let zero = self.basis.template().cloned().or_else(|| self.basis.entries().next().map(Scalar::zero_like))?;
        Some(self.entries.map(|p| p.coeff(0)).with_template(&zero))
    }

    /// Zero blocks above the diagonal (target slope above source slope), identity blocks
    /// on it.
    pub fn is_slope_unipotent(&self) -> bool {
        let s = &self.basis_slopes;
        (0..self.dim()).all(|r| {
            (0..self.dim()).all(|c| {
                let e = self.entries.get(r, c);
                if s[r] > s[c] || (s[r] == s[c] && r != c) {
                    e.is_zero() || e.eq_prec(&e.zero_like())
                } else if r == c {
                    e.eq_prec(&e.one_like())
                } else {
                    true
                }
            })
        })
    }

    pub fn eq_prec(&self, other: &EtaMatrix) -> bool {
        self.basis_slopes == other.basis_slopes && kst::mat_eq_prec(&self.entries, &other.entries)
    }
}

fn require_mixed_tate(m: &FilPhiNModule) -> Result<()> {
    if m.is_mixed_tate()? {
        Ok(())
    } else {
        Err(Error::NotMixedTate("module is not mixed Tate".into()))
    }
}

fn constant_eta(slopes: Vec<i64>, basis: Mat<Scalar>, entries: &Mat<Scalar>) -> EtaMatrix {
    EtaMatrix { basis_slopes: slopes, basis, entries: kst::lift_matrix(entries) }
}

/// `η(M)` by inverting the projections `F^i → M_{≥i} ⊗ K`.
pub fn eta(m: &FilPhiNModule) -> Result<EtaMatrix> {
    require_mixed_tate(m)?;
    let frame = m.slope_frame()?;
    let d = m.dim();
    let field = m.field();
    let mut out = Mat::identity_like(&field.one(), d);
    let mut distinct = frame.slopes.clone();
    distinct.dedup();
    for &i in &distinct {
        let rows: Vec<usize> = (0..d).filter(|&k| frame.slopes[k] >= i).collect();
        let b = columns_to_mat(field, d, frame.filtration.at(i));
        let sol = b.mul(&linalg::inverse(&b.select_rows(&rows))?);
        for (pos, &k) in rows.iter().enumerate() {
            if frame.slopes[k] == i {
                for r in 0..d {
                    out.set(r, k, sol.get(r, pos).clone());
                }
            }
        }
    }
    Ok(constant_eta(frame.slopes, frame.basis, &out))
}

/// `η(M)` through the two splittings of the weight filtration: `a_F` from the Hodge side
/// (`F^i ∩ W_{2i}`) and `a_F̄` from the Frobenius side (the slope decomposition), with
/// `d = a_F̄ a_F^{-1}` and `η = a_F̄^{-1} d a_F̄`.
pub fn eta_via_deligne(m: &FilPhiNModule) -> Result<EtaMatrix> {
    require_mixed_tate(m)?;
    let frame = m.slope_frame()?;
    let d = m.dim();
    let field = m.field();
    // B: columns spanning F^i ∩ W_{2i}; G: their images in gr^W_{2i}
    let mut b_cols: Vec<Vector> = Vec::new();
    let mut g_cols: Vec<Vector> = Vec::new();
    let mut distinct = frame.slopes.clone();
    distinct.dedup();
    for &i in &distinct {
        let w: Vec<Vector> = (0..d)
            .filter(|&k| frame.slopes[k] <= i)
            .map(|k| linalg::unit_vector(field, d, k))
            .collect();
        for v in linalg::intersect(field, d, &w, frame.filtration.at(i))? {
            let g: Vector =
                (0..d).map(|k| if frame.slopes[k] == i { v[k].clone() } else { field.zero() }).collect();
            b_cols.push(v);
            g_cols.push(g);
        }
    }
    if b_cols.len() != d {
        return Err(Error::NotMixedTate("F^i ∩ W_2i does not split the weight filtration".into()));
    }
    let bm = columns_to_mat(field, d, &b_cols);
    let gm = columns_to_mat(field, d, &g_cols);
    let a_f = gm.mul(&linalg::inverse(&bm)?);
    let a_fbar = Mat::identity_like(&field.one(), d);
    let dmat = a_fbar.mul(&linalg::inverse(&a_f)?);
    let out = linalg::inverse(&a_fbar)?.mul(&dmat).mul(&a_fbar);
    Ok(constant_eta(frame.slopes, frame.basis, &out))
}

/// Compares `v_i^∨(η(v_j))` with `v_i^{crys,∨}(v_j^{Hodge})`, the Hodge basis being
/// built in the original coordinates of `M` from `F^i ∩ W_{2i}`.
pub fn basis_duality_holds(m: &FilPhiNModule) -> Result<bool> {
    let e = eta(m)?;
    let field = m.field();
    let d = m.dim();
    let s = &e.basis;
    let s_inv = if d == 0 { s.clone() } else { linalg::inverse(s)? };
    for j in 0..d {
        let i = e.basis_slopes[j];
        let w: Vec<Vector> = (0..d).filter(|&k| e.basis_slopes[k] <= i).map(|k| s.column(k)).collect();
        let cand = linalg::intersect(field, d, &w, m.filtration().at(i))?;
        // the Hodge vector is the element of F^i ∩ W_2i whose graded part is v_j
        let coords: Vec<Vector> = cand.iter().map(|v| s_inv.mul_vec(v)).collect();
        let graded: Vec<usize> = (0..d).filter(|&k| e.basis_slopes[k] == i).collect();
        let a = columns_to_mat(field, d, &coords).select_rows(&graded);
        let target: Vec<Scalar> =
            graded.iter().map(|&k| if k == j { field.one() } else { field.zero() }).collect();
        let y = linalg::solve(&a, &columns_to_mat(field, graded.len(), &[target]))?;
        let hodge = columns_to_mat(field, d, &cand).mul_vec(&y.column(0));
        let dual_coords = s_inv.mul_vec(&hodge);
        for r in 0..d {
            if !dual_coords[r].eq_prec(&e.entries.get(r, j).coeff(0)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `exp(t·N)` in the slope basis, `t` a polynomial in `X`.
fn monodromy_exp(frame_n: &Mat<Scalar>, t: &KstPoly) -> Result<Mat<KstPoly>> {
    let n = kst::lift_matrix(frame_n);
    nilpotent_exp(&n.scale(t))
}

/// `η_st(M) = exp((c - X)·N)·η(M)`, `c` the branch of the field.
pub fn eta_st(m: &FilPhiNModule) -> Result<EtaMatrix> {
    let base = eta(m)?;
    let frame = m.slope_frame()?;
    let field = m.field();
    let zero = field.zero();
    let t = KstPoly::constant(&field.branch()).sub(&KstPoly::x(&zero));
    let e = monodromy_exp(&frame.monodromy, &t)?;
    Ok(EtaMatrix { entries: e.mul(&base.entries), ..base })
}

/// `log_st(x) = m·log_st(π) + log(u)` for `x = π^m u`, with
/// `log_st(π) = (X + log(π^e/p))/e`.
pub fn log_st(x: &Scalar) -> Result<KstPoly> {
    let field = x.field().clone();
    if x.is_zero() {
        return Err(Error::ZeroValuation("log_st of zero".into()));
    }
    let e = field.degree() as i64;
    let m = (x.valuation()? * e).to_integer();
    let pi = field.uniformizer();
    let ratio = pi.pow(e as u64).div(&field.from_int(field.p() as i64))?;
    let zero = field.zero();
    let log_pi = KstPoly::x(&zero).add(&KstPoly::constant(&unit_log(&ratio)?)).div_int(e);
    let pi_m = if m >= 0 { pi.pow(m as u64) } else { pi.inv()?.pow((-m) as u64) };
    let unit = x.div(&pi_m)?;
    Ok(log_pi.scale_int(m).add(&KstPoly::constant(&unit_log(&unit)?)))
}

/// `η_st` with the coordinate `x` in place of `p`:
/// `exp(((log_c(x) - log_st(x))/ν(x))·N)·η(M)`.
pub fn eta_st_with_coordinate(m: &FilPhiNModule, x: &Scalar) -> Result<EtaMatrix> {
    let v = x.valuation()?;
    if v == num_rational::Ratio::from_integer(0) {
        return Err(Error::Domain("coordinate must have nonzero valuation".into()));
    }
    let base = eta(m)?;
    let frame = m.slope_frame()?;
    let diff = KstPoly::constant(&branch_log(x)?).sub(&log_st(x)?);
    let inv_v = x.field().from_ratio(*v.denom(), *v.numer());
    let t = diff.mul(&KstPoly::constant(&inv_v));
    let e = monodromy_exp(&frame.monodromy, &t)?;
    Ok(EtaMatrix { entries: e.mul(&base.entries), ..base })
}

/// Replaces `F` by `exp((c - c')·N)·F`.
pub fn transport_filtration(m: &FilPhiNModule, c: &Scalar, c2: &Scalar) -> Result<FilPhiNModule> {
    let g = nilpotent_exp(&m.monodromy().scale(&c.sub(c2)))?;
    let steps = m.filtration().steps().iter().map(|(s, b)| (*s, b.iter().map(|v| g.mul_vec(v)).collect())).collect();
    m.with_filtration(Filtration::new(steps)?)
}

/// Transports `M` from the branch of its field to the branch `c2`, returning the module
/// over the field with branch `c2`.
pub fn change_branch(m: &FilPhiNModule, c2: &num_rational::BigRational) -> Result<FilPhiNModule> {
    let f2 = m.field().with_branch(c2);
    let moved = transport_filtration(m, &m.field().branch(), &f2.from_rational(c2))?;
    Ok(moved.with_field(&f2))
}

fn check_extension_shape(e: &FilPhiNModule, n: i64) -> Result<()> {
    if n < 1 {
        return Err(Error::Invalid(format!("extension degree must be positive, got {n}")));
    }
    let slopes = filmod::slope_dims(e).map_err(|err| match err {
        Error::NotMixedTatePhi(s) => Error::WrongShape(s),
        other => other,
    })?;
    let expected: std::collections::BTreeMap<i64, usize> = [(-n, 1), (0, 1)].into_iter().collect();
    if e.dim() != 2 || slopes != expected {
        return Err(Error::WrongShape(format!("expected slopes {{-{n}, 0}}, got {slopes:?}")));
    }
    Ok(())
}

/// `f(η(E)(v(1)))` for an extension of `K(0)` by `K(n)`, with `v(1)` and `ι(1)` the
/// canonical slope basis vectors.
pub fn ext_class(e: &FilPhiNModule, n: i64) -> Result<Scalar> {
    check_extension_shape(e, n)?;
    let eta = eta(e)?;
    // basis order: slope 0 first, then slope -n
    Ok(eta.entries.get(1, 0).coeff(0))
}

/// The extension with basis `(e_n, e_0)`, `φ = diag(p^{-n}, 1)`, `N = 0`, `F^{-n}` everything
/// and `F^{-n+1} = ... = F^0 = K⟨a·e_n + e_0⟩`.
pub fn ext_build(a: &Scalar, n: i64) -> Result<FilPhiNModule> {
    if n < 1 {
        return Err(Error::Invalid(format!("extension degree must be positive, got {n}")));
    }
    let field = a.field();
    let phi = Mat::diagonal(&[field.p_power(-n), field.one()]);
    let all = vec![vec![field.one(), field.zero()], vec![field.zero(), field.one()]];
    let fil = Filtration::new(vec![(-n, all), (0, vec![vec![a.clone(), field.one()]])])?;
    FilPhiNModule::new(field, phi, Mat::zeros_like(&field.zero(), 2, 2), fil)
}

/// Rewrites an extension in its basis `(ι(1), v(1))`.
fn standard_basis(e: &FilPhiNModule) -> Result<FilPhiNModule> {
    let frame = e.slope_frame()?;
    // slope frame is (v, ι); swap to (ι, v)
    let s = frame.basis.select_columns(&[1, 0]);
    e.change_basis(&s)
}

/// The inverse class: `ι(1)` replaced by `-ι(1)`.
pub fn ext_negate(e: &FilPhiNModule, n: i64) -> Result<FilPhiNModule> {
    check_extension_shape(e, n)?;
    let std = standard_basis(e)?;
    let field = e.field();
    std.change_basis(&Mat::diagonal(&[field.from_int(-1), field.one()]))
}

/// Baer sum: pull back `E ⊕ E'` along the diagonal of `K(0)`, then push out along the sum
/// map `K(n) ⊕ K(n) → K(n)`.
pub fn baer_sum(e1: &FilPhiNModule, e2: &FilPhiNModule, n: i64) -> Result<FilPhiNModule> {
    check_extension_shape(e1, n)?;
    check_extension_shape(e2, n)?;
    let field = e1.field();
    let (a, b) = (standard_basis(e1)?, standard_basis(e2)?);
    let sum = filmod::direct_sum(&a, &b)?;
    let k0 = FilPhiNModule::tate(field, 0);
    let kn = FilPhiNModule::tate(field, n);
    let row = |xs: [i64; 4]| xs.iter().map(|&x| field.from_int(x)).collect::<Vec<_>>();
    // g(x, x') = v-coordinate of x minus v-coordinate of x'
    let g = Mat::from_rows(vec![row([0, 1, 0, -1])])?;
    let pull = filmod::kernel(&sum, &k0, &g)?;
    let in_pull = |v: Vec<Scalar>| -> Result<Vec<Scalar>> {
        let col = columns_to_mat(field, 4, &[v]);
        Ok(linalg::solve(&pull.inclusion, &col)?.column(0))
    };
    // h(y) = (ι y, -ι' y)
    let h = columns_to_mat(field, 3, &[in_pull(row([1, 0, -1, 0]))?]);
    let push = filmod::cokernel(&kn, &pull.module, &h)?;
    let iota = push.projection.mul_vec(&in_pull(row([1, 0, 0, 0]))?);
    let v = push.projection.mul_vec(&in_pull(row([0, 1, 0, 1]))?);
    push.module.change_basis(&columns_to_mat(field, 2, &[iota, v]))
}

/// The module attached to `q ∈ K^×` on basis `(e_0, e_1)`: `φ = diag(1, p^{-1})`,
/// `N e_0 = -ν(q) e_1`, `F^0 = K⟨log_c(q) e_1 + e_0⟩`.
pub fn kummer_module(q: &Scalar) -> Result<FilPhiNModule> {
    let field = q.field();
    if q.is_zero() {
        return Err(Error::ZeroValuation("Kummer module of zero".into()));
    }
    let v = q.valuation()?;
    let log_q = branch_log(q)?;
    let phi = Mat::diagonal(&[field.one(), field.p_power(-1)]);
    let nu = field.from_ratio(*v.numer(), *v.denom());
    let mon = Mat::from_rows(vec![vec![field.zero(), field.zero()], vec![nu.neg(), field.zero()]])?;
    let all = vec![vec![field.one(), field.zero()], vec![field.zero(), field.one()]];
    let fil = Filtration::new(vec![(-1, all), (0, vec![vec![field.one(), log_q]])])?;
    FilPhiNModule::new(field, phi, mon, fil)
}

pub fn is_crystalline(m: &FilPhiNModule) -> bool {
    m.is_crystalline()
}

impl KstPoly {
    fn scale_int(&self, k: i64) -> KstPoly {
        let c = KstPoly::constant(&self.coeff(0).field().from_int(k));
        self.mul(&c)
    }
}
