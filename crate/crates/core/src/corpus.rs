//! Seeded random objects and the invariant report run over them.
//!
//! Everything is driven by a `ChaCha8Rng` seeded from a `u64`, so a seed reproduces
//! the same objects and the same report on every machine.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::archimedean::RealMths;
use crate::error::Result;
use crate::filmod::{self, FilPhiNModule, Filtration};
use crate::grading::{self, CEtaObject};
use crate::linalg::{self, Vector};
use crate::logpoint;
use crate::matrix::{nilpotent_exp, nilpotent_log, Mat};
use crate::padic::{LocalField, Qp, Scalar};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A small rational `a/b` with `b` prime to `p`, as an element of `Q_p ⊂ K`.
pub fn random_rational(rng: &mut impl Rng, k: &LocalField) -> Scalar {
    let p = k.p() as i64;
    let num = rng.gen_range(-40..=40);
    let mut den = rng.gen_range(1..=9);
    while den % p == 0 {
        den += 1;
    }
    k.from_ratio(num, den)
}

/// A random element of `K` with small rational `π`-coordinates.
pub fn random_scalar(rng: &mut impl Rng, k: &LocalField) -> Scalar {
    let pi = k.uniformizer();
    let mut acc = k.zero();
    let mut power = k.one();
    for _ in 0..k.degree() {
        acc = acc.add(&random_rational(rng, k).mul(&power));
        power = power.mul(&pi);
    }
    acc
}

/// A random unit of `O_K`.
pub fn random_unit(rng: &mut impl Rng, k: &LocalField) -> Scalar {
    loop {
        let x = random_scalar(rng, k);
        if let Ok(v) = x.valuation() {
            if v == num_rational::Ratio::from_integer(0) {
                return x;
            }
        }
        let p = k.p() as i64;
        let r = rng.gen_range(1..p);
        let y = x.mul(&k.from_int(p)).add(&k.from_int(r));
        if y.valuation().map(|v| v == num_rational::Ratio::from_integer(0)).unwrap_or(false) {
            return y;
        }
    }
}

/// Random graded dimensions with total dimension in `1..=max_dim`.
fn random_dims(rng: &mut impl Rng, max_dim: usize) -> BTreeMap<i64, usize> {
    let total = rng.gen_range(1..=max_dim);
    let base: i64 = rng.gen_range(-2..=1);
    let spread = rng.gen_range(0..=3.min(total as i64 - 1));
    let mut dims = BTreeMap::new();
    for j in 0..=spread {
        dims.insert(base + j, 1);
    }
    for _ in (spread as usize + 1)..total {
        let j = rng.gen_range(0..=spread);
        *dims.get_mut(&(base + j)).unwrap() += 1;
    }
    dims
}

fn random_lower(rng: &mut impl Rng, k: &LocalField, deg: &[i64], step: Option<i64>) -> Mat<Scalar> {
    let d = deg.len();
    Mat::from_fn(d, d, |r, c| {
        let allowed = match step {
            Some(s) => deg[r] == deg[c] + s,
            None => deg[r] > deg[c],
        };
        if allowed {
            random_scalar(rng, k)
        } else {
            k.zero()
        }
    })
    .with_template(&k.zero())
}

/// A random `C_η` object of total dimension at most `max_dim`.
pub fn random_ceta(rng: &mut impl Rng, k: &LocalField, max_dim: usize) -> CEtaObject {
    let dims = random_dims(rng, max_dim);
    let deg: Vec<i64> = dims.iter().flat_map(|(n, c)| std::iter::repeat_n(*n, *c)).collect();
    let d = deg.len();
    let eta = Mat::identity_like(&k.one(), d).add(&random_lower(rng, k, &deg, None));
    CEtaObject::new(k, dims, eta).expect("random η is lower unitriangular")
}

/// A random invertible integer matrix `L·U`, `L` unipotent lower and `U` upper with
/// diagonal entries in `{1, -1, 2}`.
pub fn random_base_change(rng: &mut impl Rng, k: &LocalField, d: usize) -> Mat<Scalar> {
    let lower = Mat::from_fn(d, d, |r, c| if r > c { k.from_int(rng.gen_range(-3..=3)) } else { k.zero() });
    let upper = Mat::from_fn(d, d, |r, c| {
        if r < c {
            k.from_int(rng.gen_range(-3..=3))
        } else if r == c {
            k.from_int([1, -1, 2][rng.gen_range(0..3)])
        } else {
            k.zero()
        }
    });
    lower.add(&Mat::identity_like(&k.one(), d)).mul(&upper).with_template(&k.zero())
}

/// A random mixed Tate module with nonzero monodromy: `φ = p^{-n}` on degree `n`, `N`
/// raising degree by one, filtration from a random `η`, in a random `Q_p`-basis.
pub fn random_semistable(rng: &mut impl Rng, k: &LocalField, max_dim: usize) -> FilPhiNModule {
    loop {
        let v = random_ceta(rng, k, max_dim.max(2));
        let deg = v.degrees();
        if !deg.windows(2).any(|w| w[1] == w[0] + 1) {
            continue;
        }
        let base = grading::phi_inv(&v).expect("phi_inv of a valid object");
        let n = Mat::from_fn(deg.len(), deg.len(), |r, c| {
            if deg[r] == deg[c] + 1 {
                k.from_int(rng.gen_range(-4..=4))
            } else {
                k.zero()
            }
        })
        .with_template(&k.zero());
        if linalg::mat_is_zero_prec(&n) {
            continue;
        }
        let m = FilPhiNModule::new(k, base.phi().clone(), n, base.filtration().clone()).unwrap();
        let s = random_base_change(rng, k, deg.len());
        return m.change_basis(&s).expect("base change is invertible");
    }
}

/// Perturbs one filtration step so that its dimension is off by one.
pub fn corrupt_filtration(rng: &mut impl Rng, m: &FilPhiNModule) -> Option<FilPhiNModule> {
    let k = m.field();
    let d = m.dim();
    let steps = m.filtration().steps();
    if d < 2 || steps.len() < 2 {
        return None;
    }
    let idx = rng.gen_range(1..steps.len());
    let mut new_steps: Vec<(i64, Vec<Vector>)> = steps.to_vec();
    let basis = &mut new_steps[idx].1;
    if basis.len() > 1 && rng.gen_bool(0.5) {
        basis.pop();
    } else {
        // add a vector outside the current span
        let ext = linalg::extend_to_basis(k, d, basis).ok()?;
        basis.push(ext[basis.len()].clone());
    }
    // keep the filtration descending by enlarging lower steps as needed
    let top = new_steps[idx].1.clone();
    for (_, b) in new_steps.iter_mut().take(idx) {
        let mut all = b.clone();
        all.extend(top.iter().cloned());
        *b = linalg::independent_subset(k, d, &all).ok()?;
    }
    let out = m.with_filtration(Filtration::new(new_steps).ok()?).ok()?;
    if out.validate().is_valid() {
        Some(out)
    } else {
        None
    }
}

/// A random valid real mixed Tate Hodge structure with entries in `[-1, 1]`.
pub fn random_real_mths(rng: &mut impl Rng, max_dim: usize) -> RealMths {
    let dims = random_dims(rng, max_dim);
    // weights -2n, descending weight = ascending degree
    let deg: Vec<i64> = dims.iter().flat_map(|(n, c)| std::iter::repeat_n(*n, *c)).collect();
    let d = deg.len();
    // real change of basis, diagonally dominant so it stays invertible
    let rot: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| rng.gen_range(-1.0..=1.0) / d as f64 + if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let coeff: Vec<Vec<Complex64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    if deg[i] > deg[j] {
                        Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
                    } else if i == j {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    let apply_real = |v: &[f64]| -> Vec<f64> { (0..d).map(|i| (0..d).map(|j| rot[i][j] * v[j]).sum()).collect() };
    let apply_cx = |v: &[Complex64]| -> Vec<Complex64> {
        (0..d).map(|i| (0..d).map(|j| v[j] * rot[i][j]).sum()).collect()
    };
    let unit = |j: usize| -> Vec<f64> { (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect() };
    let mut weights = Vec::new();
    for &n in dims.keys() {
        let basis: Vec<Vec<f64>> = (0..d).filter(|&j| deg[j] >= n).map(|j| apply_real(&unit(j))).collect();
        weights.push((-2 * n, basis));
    }
    let mut hodge = Vec::new();
    for &n in dims.keys() {
        // F^{-n} is spanned by the η-images of the degree <= n vectors
        let basis: Vec<Vec<Complex64>> =
            (0..d).filter(|&j| deg[j] <= n).map(|j| apply_cx(&(0..d).map(|i| coeff[i][j]).collect::<Vec<_>>())).collect();
        hodge.push((-n, basis));
    }
    RealMths { dim: d, weights, hodge }
}

/// `η` as an automorphism of `M_K` in the coordinates of the module.
pub fn eta_in_module_coords(m: &FilPhiNModule) -> Result<Mat<Scalar>> {
    let e = logpoint::eta(m)?;
    if m.dim() == 0 {
        return Ok(e.basis.clone());
    }
    let c = e.constant().expect("η has constant entries");
    Ok(e.basis.mul(&c).mul(&linalg::inverse(&e.basis)?))
}

#[derive(Clone, Debug, Default)]
pub struct CorpusReport {
    pub seed: u64,
    pub count: usize,
    /// Invariant name → (passed, failed).
    pub invariants: BTreeMap<&'static str, (usize, usize)>,
}

impl CorpusReport {
    fn record(&mut self, name: &'static str, ok: bool) {
        let e = self.invariants.entry(name).or_default();
        if ok {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }

    pub fn all_passed(&self) -> bool {
        self.invariants.values().all(|(_, f)| *f == 0)
    }

    pub fn to_json(&self) -> Value {
        let inv: Vec<Value> = self
            .invariants
            .iter()
            .map(|(n, (p, f))| json!({"name": n, "passed": p, "failed": f}))
            .collect();
        json!({"seed": self.seed, "count": self.count, "ok": self.all_passed(), "invariants": inv})
    }
}

fn check(report: &mut CorpusReport, name: &'static str, f: impl FnOnce() -> Result<bool>) {
    report.record(name, matches!(f(), Ok(true)));
}

/// Generates `count` random `C_η` objects and runs the invariant suite on each.
pub fn run_corpus(k: &LocalField, seed: u64, count: usize) -> CorpusReport {
    let mut rng = rng(seed);
    let mut report = CorpusReport { seed, count, ..Default::default() };
    let mut previous: Option<FilPhiNModule> = None;
    for _ in 0..count {
        let v = random_ceta(&mut rng, k, 6);
        let m = match grading::phi_inv(&v) {
            Ok(m) => m,
            Err(_) => {
                report.record("phi_inv", false);
                continue;
            }
        };
        report.record("phi_inv", true);
        check(&mut report, "valid", || Ok(m.validate().is_valid()));
        check(&mut report, "mixed_tate", || m.is_mixed_tate());
        check(&mut report, "mt_criterion", || m.mt_criterion());
        check(&mut report, "psi_phi_inv_identity", || Ok(grading::psi(&m)?.eq_prec(&v)));
        check(&mut report, "reconstruct_eta", || Ok(linalg::mat_eq_prec(&grading::reconstruct_eta(&v)?, v.eta())));
        check(&mut report, "exp_log", || Ok(linalg::mat_eq_prec(&nilpotent_exp(&nilpotent_log(v.eta())?)?, v.eta())));
        check(&mut report, "eta_routes_agree", || Ok(logpoint::eta(&m)?.eq_prec(&logpoint::eta_via_deligne(&m)?)));
        check(&mut report, "eta_unipotent", || Ok(logpoint::eta(&m)?.is_slope_unipotent()));
        check(&mut report, "basis_duality", || logpoint::basis_duality_holds(&m));
        check(&mut report, "polygons_equal", || Ok(m.newton_polygon()? == m.hodge_polygon()?));
        check(&mut report, "weight_exactness", || {
            let deg = v.degrees();
            let (lo, hi) = (-deg[deg.len() - 1] - 1, -deg[0] + 1);
            for i in lo..=hi {
                if !m.check_weight_exactness(i)? {
                    return Ok(false);
                }
            }
            Ok(true)
        });
        let s = random_base_change(&mut rng, k, m.dim());
        let moved = m.change_basis(&s);
        check(&mut report, "phi_inv_psi_isomorphic", || {
            let moved = moved.clone()?;
            filmod::is_isomorphic(&grading::phi_inv(&grading::psi(&moved)?)?, &moved)
        });
        check(&mut report, "psi_functorial", || {
            // S: moved → m is an isomorphism, so Ψ(S) is an isomorphism of C_η objects
            let moved = moved.clone()?;
            let f = grading::psi_morphism(&moved, &m, &s)?;
            Ok(grading::is_ceta_morphism(&grading::psi(&moved)?, &v, &f) && linalg::rank(&f)? == m.dim())
        });
        if let Some(prev) = &previous {
            if prev.dim() * m.dim() <= 12 {
                check(&mut report, "eta_tensor", || {
                    let t = filmod::tensor(prev, &m)?;
                    let lhs = eta_in_module_coords(&t)?;
                    let rhs = eta_in_module_coords(prev)?.kron(&eta_in_module_coords(&m)?);
                    Ok(linalg::mat_eq_prec(&lhs, &rhs))
                });
            }
        }
        if let Some(bad) = corrupt_filtration(&mut rng, &m) {
            check(&mut report, "corrupted_not_mixed_tate", || Ok(!bad.is_mixed_tate()?));
        }
        previous = Some(m);
    }
    report
}

/// A random `q ∈ K^×` with valuation in `[-2, 2]`, about a third of them units.
pub fn random_nonzero(rng: &mut impl Rng, k: &LocalField) -> Scalar {
    let u = random_unit(rng, k);
    let m: i64 = if rng.gen_bool(0.35) { 0 } else { [-2, -1, 1, 2][rng.gen_range(0..4)] };
    let pi = k.uniformizer();
    let pm = if m >= 0 { pi.pow(m as u64) } else { pi.inv().unwrap().pow((-m) as u64) };
    u.mul(&pm)
}

/// A random `p`-adic digit string as an element of `Z_p`.
pub fn random_zp(rng: &mut impl Rng, k: &LocalField) -> Scalar {
    let digits: Vec<u64> = (0..k.precision()).map(|_| rng.gen_range(0..k.p())).collect();
    Scalar::from_qp(k, Qp::from_digits(k.p(), 0, &digits).unwrap())
}
