use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::BigRational;
use rand::Rng;

use mtphi::archimedean::{self, bernoulli, bd_value, polylog, BdConventions, RealMths, B1};
use mtphi::corpus;
use mtphi::json;
use mtphi::{Error, Mat};

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `W_{-2} = ⟨h_1⟩`, `F^0 = ⟨h_2 + τ h_1⟩` on `R^2`.
fn two_by_two(tau: Complex64) -> RealMths {
    RealMths {
        dim: 2,
        weights: vec![(-2, vec![vec![1.0, 0.0]]), (0, vec![vec![1.0, 0.0], vec![0.0, 1.0]])],
        hodge: vec![(-1, vec![vec![cx(1.0, 0.0), cx(0.0, 0.0)], vec![cx(0.0, 0.0), cx(1.0, 0.0)]]), (0, vec![vec![tau, cx(1.0, 0.0)]])],
    }
}

#[test]
fn two_dimensional_examples() {
    for tau in [cx(0.3, 0.7), cx(-2.0, 0.25), cx(0.0, -1.5)] {
        let d = archimedean::compute_d(&two_by_two(tau)).unwrap();
        assert_eq!(d.coweights, vec![0, 1]);
        // hand elimination: d = conj(a_F) a_F^{-1} has lower-left τ - τ̄
        let want = tau - tau.conj();
        assert!((d.d.get(1, 0) - want).norm() < 1e-12);
        assert!((d.d.get(0, 0) - cx(1.0, 0.0)).norm() < 1e-12);
        let eps = archimedean::epsilon_arch(&two_by_two(tau)).unwrap();
        assert!((eps.get(1, 0) - cx(0.0, 2.0 * tau.im)).norm() < 1e-12);
    }
    // real τ means F is defined over R
    let d = archimedean::compute_d(&two_by_two(cx(0.8, 0.0))).unwrap();
    assert!(d.d.sub(&Mat::identity_like(&cx(1.0, 0.0), 2)).entries().all(|z| z.norm() < 1e-12));
}

#[test]
fn split_structures_give_the_identity() {
    let h = RealMths {
        dim: 3,
        weights: vec![(-4, vec![vec![0.0, 0.0, 1.0]]), (-2, vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]), (0, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]])],
        hodge: vec![
            (-2, vec![vec![cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0)], vec![cx(0.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)], vec![cx(0.0, 0.0), cx(0.0, 0.0), cx(1.0, 0.0)]]),
            (-1, vec![vec![cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0)], vec![cx(0.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)]]),
            (0, vec![vec![cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0)]]),
        ],
    };
    let eps = archimedean::epsilon_arch(&h).unwrap();
    assert!(eps.entries().all(|z| z.norm() < 1e-12));
}

#[test]
fn wrong_hodge_types_are_rejected() {
    // F^1 ≠ 0 on a weight-0 line
    let mut h = two_by_two(cx(0.1, 0.2));
    h.hodge.push((1, vec![vec![cx(0.0, 0.0), cx(1.0, 0.0)]]));
    assert!(matches!(archimedean::compute_d(&h), Err(Error::NotMths(_))));
    // odd weight step
    let mut h = two_by_two(cx(0.1, 0.2));
    h.weights[0].0 = -1;
    assert!(archimedean::compute_d(&h).is_err());
}

#[test]
fn random_structures() {
    let mut rng = corpus::rng(41);
    for _ in 0..60 {
        let h = corpus::random_real_mths(&mut rng, 6);
        let d = archimedean::compute_d(&h).unwrap();
        assert!(d.unipotence_defect() < 1e-9);
        assert!(d.reality_defect() < 1e-9);
        let eps = archimedean::epsilon_arch(&h).unwrap();
        // conj(ε) = -ε
        assert!(eps.entries().all(|z| z.re.abs() < 1e-9));
        let back = archimedean::exp_strict(&eps, &d.coweights).unwrap();
        assert!(archimedean::max_norm(&back.sub(&d.d)) < 1e-9);
        // JSON round trip
        let again = json::mths_from_json(&json::mths_to_json(&h)).unwrap();
        assert!(archimedean::max_norm(&archimedean::compute_d(&again).unwrap().d.sub(&d.d)) < 1e-12);
    }
}

#[test]
fn polylog_values() {
    let tol = 1e-15;
    assert_eq!(polylog(3, cx(0.0, 0.0), tol).unwrap(), cx(0.0, 0.0));
    assert!((polylog(1, cx(0.5, 0.0), tol).unwrap().re - 2f64.ln()).abs() < 1e-12);
    let li2_half = PI * PI / 12.0 - 2f64.ln().powi(2) / 2.0;
    assert!((polylog(2, cx(0.5, 0.0), tol).unwrap().re - li2_half).abs() < 1e-12);
    assert!((polylog(2, cx(0.5, 0.0), tol).unwrap().re - 0.5822405).abs() < 1e-7);
    assert!((polylog(0, cx(0.25, 0.5), tol).unwrap() - cx(0.25, 0.5) / (cx(1.0, 0.0) - cx(0.25, 0.5))).norm() < 1e-15);
    let mut rng = corpus::rng(42);
    for _ in 0..100 {
        let r = rng.gen_range(0.0..0.95f64).sqrt() * 0.95f64.sqrt();
        let t = rng.gen_range(0.0..2.0 * PI);
        let z = Complex64::from_polar(r, t);
        let want = -(cx(1.0, 0.0) - z).ln();
        assert!((polylog(1, z, 1e-13).unwrap() - want).norm() < 1e-11);
    }
    assert!(matches!(polylog(2, cx(0.9, 0.5), tol), Err(Error::Domain(_))));
}

#[test]
fn bernoulli_numbers() {
    let b = bernoulli(8, B1::MinusHalf);
    let r = |a: i64, c: i64| BigRational::new(a.into(), c.into());
    assert_eq!(b, vec![r(1, 1), r(-1, 2), r(1, 6), r(0, 1), r(-1, 30), r(0, 1), r(1, 42), r(0, 1), r(-1, 30)]);
    assert_eq!(bernoulli(2, B1::PlusHalf)[1], r(1, 2));
}

#[test]
fn beilinson_deligne_values() {
    let tol = 1e-15;
    let half = cx(0.5, 0.0);
    // with the top term: 2i (Li_1(1/2) - (1/2) log(1/4) Li_0(1/2)) = 4i log 2
    let top = BdConventions { include_top: true, ..Default::default() };
    assert!((bd_value(1, half, tol, top).unwrap() - cx(0.0, 2.772589)).norm() < 1e-6);
    assert!((bd_value(1, half, tol, BdConventions::default()).unwrap() - cx(0.0, 2.0 * 2f64.ln())).norm() < 1e-12);
    for k in [2, 4, 6] {
        for x in [0.05, 0.4, 0.85] {
            assert!(bd_value(k, cx(x, 0.0), tol, BdConventions::default()).unwrap().norm() < 1e-10);
        }
    }
    let flipped = BdConventions { sqrt_minus_one: -1, ..Default::default() };
    for k in [1, 3, 5] {
        let z = cx(0.3, -0.6);
        let (a, b) = (bd_value(k, z, tol, BdConventions::default()).unwrap(), bd_value(k, z, tol, flipped).unwrap());
        assert!((a + b).norm() < 1e-12);
    }
    assert!(bd_value(0, half, tol, BdConventions::default()).is_err());
    assert!(bd_value(2, cx(0.0, 0.0), tol, BdConventions::default()).is_err());
}
