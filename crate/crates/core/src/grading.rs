//! Graded vector spaces with a unipotent automorphism, and the dictionary with mixed
//! Tate modules.
//!
//! An object is a graded `Q_p`-space `V = ⊕ V_n` together with a `K`-linear `η` on
//! `V ⊗ K` such that `η - 1` strictly raises degree. Bases are sorted by ascending degree,
//! so `η` is lower unitriangular in block form. Degree `n` corresponds to slope `-n`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::filmod::{FilPhiNModule, Filtration};
use crate::linalg::{self, Vector};
use crate::logpoint;
use crate::matrix::{nilpotent_exp, nilpotent_log, strictly_raises_degree, Mat};
use crate::padic::{LocalField, Scalar};

#[derive(Clone, Debug)]
pub struct CEtaObject {
    field: LocalField,
    dims: BTreeMap<i64, usize>,
    eta: Mat<Scalar>,
}

impl CEtaObject {
    /// Checks the shape and the triangularity of `η`.
    pub fn new(field: &LocalField, dims: BTreeMap<i64, usize>, eta: Mat<Scalar>) -> Result<CEtaObject> {
        let dims: BTreeMap<i64, usize> = dims.into_iter().filter(|(_, k)| *k > 0).collect();
        let d: usize = dims.values().sum();
        if eta.rows() != d || eta.cols() != d {
            return Err(Error::Invalid(format!("eta must be {d}x{d}")));
        }
        let v = CEtaObject { field: field.clone(), dims, eta: eta.with_template(&field.zero()) };
        let deg = v.degrees();
        for r in 0..d {
            for c in 0..d {
                let x = v.eta.get(r, c);
                let ok = if deg[r] > deg[c] {
                    true
                } else if r == c {
                    x.eq_prec(&field.one())
                } else {
                    x.eq_prec(&field.zero())
                };
                if !ok {
                    return Err(Error::Invalid(format!(
                        "eta - 1 must strictly raise degree; entry ({r}, {c}) violates this"
                    )));
                }
            }
        }
        Ok(v)
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn dims(&self) -> &BTreeMap<i64, usize> {
        &self.dims
    }

    pub fn eta(&self) -> &Mat<Scalar> {
        &self.eta
    }

    pub fn dim(&self) -> usize {
        self.dims.values().sum()
    }

    /// Degree of each basis vector.
    pub fn degrees(&self) -> Vec<i64> {
        self.dims.iter().flat_map(|(n, k)| std::iter::repeat_n(*n, *k)).collect()
    }

    pub fn eq_prec(&self, other: &CEtaObject) -> bool {
        self.dims == other.dims && linalg::mat_eq_prec(&self.eta, &other.eta)
    }
}

/// `Ψ(M)`: the slope components regraded by degree `-slope`, with `η(M)`.
pub fn psi(m: &FilPhiNModule) -> Result<CEtaObject> {
    let e = logpoint::eta(m)?;
    let mut dims = BTreeMap::new();
    for s in &e.basis_slopes {
        *dims.entry(-s).or_insert(0) += 1;
    }
    let eta = e.constant().expect("eta has constant entries");
    CEtaObject::new(m.field(), dims, eta)
}

/// `Ψ` on morphisms: `f` rewritten between the slope bases of `M` and `M'`.
pub fn psi_morphism(m: &FilPhiNModule, m2: &FilPhiNModule, f: &Mat<Scalar>) -> Result<Mat<Scalar>> {
    let s = logpoint::eta(m)?.basis;
    let s2 = logpoint::eta(m2)?.basis;
    if m2.dim() == 0 || m.dim() == 0 {
        return Ok(Mat::zeros_like(&m.field().zero(), m2.dim(), m.dim()));
    }
    Ok(linalg::inverse(&s2)?.mul(f).mul(&s))
}

/// `Φ(V)`: `φ = p^{-n}` on `V_n`, `N = 0`, and `F^i = η(⊕_{j ≥ i} V_{-j} ⊗ K)`.
pub fn phi_inv(v: &CEtaObject) -> Result<FilPhiNModule> {
    let field = v.field();
    let d = v.dim();
    if d == 0 {
        return Ok(FilPhiNModule::zero_module(field));
    }
    let deg = v.degrees();
    let phi = Mat::diagonal(&deg.iter().map(|&n| field.p_power(-n)).collect::<Vec<_>>());
    let lo = -deg[d - 1];
    let hi = -deg[0];
    let mut steps = Vec::new();
    for i in lo..=hi {
        // F^i jumps only where a degree -i block exists
        if !v.dims.contains_key(&-i) {
            continue;
        }
        let cols: Vec<Vector> = (0..d).filter(|&k| deg[k] <= -i).map(|k| v.eta.column(k)).collect();
        steps.push((i, cols));
    }
    let fil = Filtration::new(steps)?;
    FilPhiNModule::new(field, phi, Mat::zeros_like(&field.zero(), d, d), fil)
}

/// Evaluates a `Q_p`-linear functional on `K`, given by its values on `1, π, ..., π^{e-1}`.
fn apply_functional(f: &[Scalar], x: &Scalar) -> Scalar {
    let field = x.field();
    x.coords()
        .iter()
        .zip(f)
        .fold(field.zero(), |acc, (c, v)| acc.add(&Scalar::from_qp(field, c.clone()).mul(v)))
}

/// `β_i(f)`: the degree-`+i` part of `log η` with `f` applied to each entry.
pub fn generator_action(v: &CEtaObject, i: i64, f: &[Scalar]) -> Result<Mat<Scalar>> {
    if i <= 0 {
        return Err(Error::Invalid("generator degree must be positive".into()));
    }
    if f.len() != v.field().degree() {
        return Err(Error::Invalid(format!("functional needs {} values", v.field().degree())));
    }
    let log = nilpotent_log(&v.eta)?;
    let deg = v.degrees();
    let field = v.field();
    Ok(Mat::from_fn(v.dim(), v.dim(), |r, c| {
        if deg[r] == deg[c] + i {
            apply_functional(f, log.get(r, c))
        } else {
            field.zero()
        }
    })
    .with_template(&field.zero()))
}

/// `exp(Σ_{i>0} Σ_j β_i(v_j^∨) v_j)` with `v_j = π^j`.
pub fn reconstruct_eta(v: &CEtaObject) -> Result<Mat<Scalar>> {
    let field = v.field();
    let d = v.dim();
    let e = field.degree();
    let deg = v.degrees();
    let top = deg.last().copied().unwrap_or(0) - deg.first().copied().unwrap_or(0);
    let mut rho = Mat::zeros_like(&field.zero(), d, d);
    let pi = field.uniformizer();
    for i in 1..=top {
        for j in 0..e {
            let dual: Vec<Scalar> = (0..e).map(|k| if k == j { field.one() } else { field.zero() }).collect();
            let beta = generator_action(v, i, &dual)?;
            rho = rho.add(&beta.scale(&pi.pow(j as u64)));
        }
    }
    nilpotent_exp(&rho)
}

/// The action of `t ∈ G_m`: `η ↦ D η D^{-1}` with `D = diag(t^deg)`.
pub fn grade_action(t: &Scalar, v: &CEtaObject) -> Result<CEtaObject> {
    if t.is_zero() {
        return Err(Error::Domain("grade action needs an invertible scalar".into()));
    }
    let tinv = t.inv()?;
    let power = |n: i64| if n >= 0 { t.pow(n as u64) } else { tinv.pow((-n) as u64) };
    let deg = v.degrees();
    let eta = Mat::from_fn(v.dim(), v.dim(), |r, c| v.eta.get(r, c).mul(&power(deg[r] - deg[c])));
    CEtaObject::new(v.field(), v.dims.clone(), eta)
}

/// `log η` raises degree strictly; a sanity check used by the corpus report.
pub fn log_raises_degree(v: &CEtaObject) -> Result<bool> {
    let log = nilpotent_log(&v.eta)?;
    let trimmed = log.map(|x| if x.eq_prec(&x.zero_like()) { x.zero_like() } else { x.clone() });
    Ok(strictly_raises_degree(&trimmed, &v.degrees()))
}

/// A morphism of `C_η` objects: degree-preserving and commuting with `η`.
pub fn is_ceta_morphism(v: &CEtaObject, w: &CEtaObject, f: &Mat<Scalar>) -> bool {
    let (dv, dw) = (v.degrees(), w.degrees());
    let graded = (0..f.rows()).all(|r| (0..f.cols()).all(|c| dw[r] == dv[c] || f.get(r, c).eq_prec(&f.get(r, c).zero_like())));
    graded && linalg::mat_eq_prec(&f.mul(&v.eta), &w.eta.mul(f))
}
