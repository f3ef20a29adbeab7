use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use mtphi::corpus;
use mtphi::filmod;
use mtphi::grading::{self, CEtaObject};
use mtphi::lie;
use mtphi::linalg;
use mtphi::logpoint;
use mtphi::matrix::{nilpotent_exp, nilpotent_log};
use mtphi::padic::unit_log;
use mtphi::{LocalField, Mat, Scalar};

fn quadratic(p: u64) -> LocalField {
    LocalField::new(p, 10, vec![BigRational::from_integer((-(p as i64)).into()), BigRational::zero(), BigRational::one()], BigRational::zero())
        .unwrap()
}

#[test]
fn generator_action_on_kummer_objects() {
    let k = quadratic(5);
    let mut rng = corpus::rng(31);
    for _ in 0..8 {
        let u = corpus::random_unit(&mut rng, &k);
        let v = grading::psi(&logpoint::kummer_module(&u).unwrap()).unwrap();
        let log_u = unit_log(&u).unwrap();
        for j in 0..2 {
            // coordinate functional v_j^∨ on the basis (1, π)
            let f: Vec<Scalar> = (0..2).map(|i| if i == j { k.one() } else { k.zero() }).collect();
            let beta = grading::generator_action(&v, 1, &f).unwrap();
            let want = Scalar::from_qp(&k, log_u.coords()[j].clone());
            assert!(beta.get(1, 0).eq_prec(&want));
            assert!(beta.get(0, 1).eq_prec(&k.zero()) && beta.get(0, 0).eq_prec(&k.zero()));
            assert!(beta.entries().all(Scalar::in_base_field));
        }
        assert!(grading::generator_action(&v, 2, &[k.one(), k.zero()]).unwrap().is_zero());
        assert!(linalg::mat_eq_prec(&grading::reconstruct_eta(&v).unwrap(), v.eta()));
    }
}

#[test]
fn reconstruct_eta_over_ramified_fields() {
    let mut rng = corpus::rng(32);
    for p in [3, 5] {
        let k = quadratic(p);
        for _ in 0..15 {
            let v = corpus::random_ceta(&mut rng, &k, 5);
            assert!(linalg::mat_eq_prec(&grading::reconstruct_eta(&v).unwrap(), v.eta()));
            let m = grading::phi_inv(&v).unwrap();
            assert!(m.is_mixed_tate().unwrap());
            assert!(grading::psi(&m).unwrap().eq_prec(&v));
        }
    }
}

#[test]
fn identity_eta_gives_sums_of_tate_objects() {
    let k = LocalField::qp(3, 12).unwrap();
    let dims: BTreeMap<i64, usize> = [(-1, 2), (0, 1), (2, 1)].into_iter().collect();
    let v = CEtaObject::new(&k, dims, Mat::identity_like(&k.one(), 4)).unwrap();
    let m = grading::phi_inv(&v).unwrap();
    let mut sum = filmod::FilPhiNModule::tate(&k, -1);
    for n in [-1, 0, 2] {
        sum = filmod::direct_sum(&sum, &filmod::FilPhiNModule::tate(&k, n)).unwrap();
    }
    assert!(filmod::is_isomorphic(&m, &sum).unwrap());
    for i in 1..=3 {
        assert!(grading::generator_action(&v, i, &[k.one()]).unwrap().is_zero());
    }
}

#[test]
fn grade_action_conjugation_law() {
    let k = LocalField::qp(7, 12).unwrap();
    let mut rng = corpus::rng(33);
    for _ in 0..20 {
        let v = corpus::random_ceta(&mut rng, &k, 6);
        let t = corpus::random_nonzero(&mut rng, &k);
        let w = grading::grade_action(&t, &v).unwrap();
        let deg = v.degrees();
        for r in 0..v.dim() {
            for c in 0..v.dim() {
                let s = deg[r] - deg[c];
                let factor = if s >= 0 { t.pow(s as u64) } else { t.inv().unwrap().pow((-s) as u64) };
                assert!(w.eta().get(r, c).eq_prec(&v.eta().get(r, c).mul(&factor)));
            }
        }
        assert!(grading::grade_action(&k.one(), &v).unwrap().eq_prec(&v));
        let s = corpus::random_nonzero(&mut rng, &k);
        let twice = grading::grade_action(&s, &w).unwrap();
        assert!(twice.eq_prec(&grading::grade_action(&s.mul(&t), &v).unwrap()));
        // diag(t^deg) is an isomorphism from V to its image under t
        let d = Mat::diagonal(&deg.iter().map(|&n| if n >= 0 { t.pow(n as u64) } else { t.inv().unwrap().pow((-n) as u64) }).collect::<Vec<_>>());
        assert!(grading::is_ceta_morphism(&v, &w, &d));
    }
    assert!(grading::grade_action(&k.zero(), &corpus::random_ceta(&mut rng, &k, 3)).is_err());
}

#[test]
fn psi_is_functorial_on_hom_spaces() {
    let k = LocalField::qp(5, 14).unwrap();
    let mut rng = corpus::rng(34);
    for _ in 0..8 {
        let a = grading::phi_inv(&corpus::random_ceta(&mut rng, &k, 3)).unwrap();
        let b = grading::phi_inv(&corpus::random_ceta(&mut rng, &k, 3)).unwrap();
        let s = filmod::direct_sum(&a, &b).unwrap();
        for (src, dst) in [(&a, &s), (&s, &b), (&s, &s)] {
            let (vs, vd) = (grading::psi(src).unwrap(), grading::psi(dst).unwrap());
            for f in filmod::hom_space(src, dst).unwrap() {
                let g = grading::psi_morphism(src, dst, &f).unwrap();
                assert!(grading::is_ceta_morphism(&vs, &vd, &g));
            }
        }
    }
}

#[test]
fn nilpotent_log_and_exp() {
    let k = LocalField::qp(3, 12).unwrap();
    let id = Mat::identity_like(&k.one(), 3);
    assert!(nilpotent_log(&id).unwrap().is_zero());
    let a = k.from_ratio(5, 7);
    let eta = Mat::from_rows(vec![vec![k.one(), k.zero()], vec![a.clone(), k.one()]]).unwrap();
    assert!(nilpotent_log(&eta).unwrap().get(1, 0).eq_prec(&a));
    let mut rng = corpus::rng(35);
    for _ in 0..20 {
        let v = corpus::random_ceta(&mut rng, &k, 6);
        let log = nilpotent_log(v.eta()).unwrap();
        assert!(linalg::mat_eq_prec(&nilpotent_exp(&log).unwrap(), v.eta()));
        assert!(grading::log_raises_degree(&v).unwrap());
    }
    let not_unipotent = Mat::from_rows(vec![vec![k.from_int(2), k.zero()], vec![k.zero(), k.one()]]).unwrap();
    assert!(nilpotent_log(&not_unipotent).is_err());
}

#[test]
fn lie_dimensions_satisfy_the_divisor_identity() {
    for d in 1..=4u64 {
        let dims = lie::lie_dims(d, 12).unwrap();
        assert!(dims.iter().all(|&l| l > 0));
        for n in 1..=12usize {
            let lhs: u128 = (1..=n).filter(|i| n % i == 0).map(|i| i as u128 * dims[i - 1] as u128).sum();
            assert_eq!(lhs, (d as u128 + 1).pow(n as u32) - 1, "d={d} n={n}");
        }
        assert_eq!(lie::lie_dims(d, 1).unwrap(), vec![d]);
    }
    assert_eq!(lie::lie_dims(2, 3).unwrap(), vec![2, 3, 8]);
    assert!(lie::lie_dims(0, 3).is_err());
    assert!(lie::lie_dims(1, 13).is_err());
}

#[test]
fn lie_dimensions_match_lyndon_enumeration() {
    let mut rng = corpus::rng(36);
    for _ in 0..4 {
        let d = rng.gen_range(1..=3);
        let dims = lie::lie_dims(d, 5).unwrap();
        for n in 1..=5 {
            assert_eq!(dims[n - 1], lie::lyndon_count(d, n));
        }
    }
}
