use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use mtphi::padic::{branch_log, rational_valuation, teichmuller, unit_log};
use mtphi::{Error, LocalField, Qp};

const PRIMES: [u64; 4] = [2, 3, 5, 7];

fn rat(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// `q mod p^n` for `q` with denominator prime to `p`.
fn residue(q: &BigRational, p: u64, n: u32) -> BigInt {
    let m = BigInt::from(p).pow(n);
    let inv = q.denom().extended_gcd(&m).x;
    (q.numer() * inv).mod_floor(&m)
}

fn qp_residue(x: &Qp, p: u64, n: u32) -> BigInt {
    let m = BigInt::from(p).pow(n);
    if x.is_zero() {
        return BigInt::zero();
    }
    let v = x.valuation().unwrap();
    let mut acc = BigInt::zero();
    for d in x.digits().iter().rev() {
        acc = acc * BigInt::from(p) + BigInt::from(*d);
    }
    (acc * BigInt::from(p).pow(v as u32)).mod_floor(&m)
}

fn small_rational() -> impl Strategy<Value = (i64, i64)> {
    (-500i64..=500, 1i64..=60)
}

proptest! {
    #[test]
    fn field_operations_match_rationals(pi in 0usize..4, a in small_rational(), b in small_rational()) {
        let p = PRIMES[pi];
        let n = 12;
        let (qa, qb) = (rat(a.0, a.1), rat(b.0, b.1));
        let k = LocalField::qp(p, n).unwrap();
        let (x, y) = (k.from_rational(&qa), k.from_rational(&qb));
        for (got, want) in [(x.add(&y), &qa + &qb), (x.sub(&y), &qa - &qb), (x.mul(&y), &qa * &qb)] {
            let v = if want.is_zero() { n } else { rational_valuation(&want, p) };
            if v >= 0 {
                prop_assert_eq!(qp_residue(got.base_coord(), p, n as u32), residue(&want, p, n as u32));
            } else {
                prop_assert!(got.eq_prec(&k.from_rational(&want)));
            }
        }
        if !qb.is_zero() {
            let q = x.div(&y).unwrap();
            prop_assert!(q.mul(&y).eq_prec(&x));
            prop_assert!(q.eq_prec(&k.from_rational(&(&qa / &qb))));
        }
    }

    #[test]
    fn valuation_matches_rational_valuation(pi in 0usize..4, a in small_rational()) {
        let p = PRIMES[pi];
        prop_assume!(a.0 != 0);
        let k = LocalField::qp(p, 15).unwrap();
        let q = rat(a.0, a.1);
        let mut want = 0i64;
        let (mut num, mut den) = (a.0.abs(), a.1);
        while num % p as i64 == 0 { num /= p as i64; want += 1; }
        while den % p as i64 == 0 { den /= p as i64; want -= 1; }
        prop_assert_eq!(k.from_rational(&q).valuation().unwrap(), num_rational::Ratio::from_integer(want));
    }

    #[test]
    fn log_is_additive(pi in 1usize..4, a in 1i64..200, b in 1i64..200) {
        let p = PRIMES[pi];
        prop_assume!(a % p as i64 != 0 && b % p as i64 != 0);
        let k = LocalField::qp(p, 15).unwrap();
        let (u, v) = (k.from_int(a), k.from_int(b));
        let lhs = unit_log(&u.mul(&v)).unwrap();
        prop_assert!(lhs.eq_prec(&unit_log(&u).unwrap().add(&unit_log(&v).unwrap())));
    }

    #[test]
    fn branch_log_is_a_homomorphism(pi in 0usize..4, a in small_rational(), b in small_rational(), c in -3i64..=3) {
        let p = PRIMES[pi];
        prop_assume!(a.0 != 0 && b.0 != 0);
        let k = LocalField::new(p, 14, vec![], rat(c, 2)).unwrap();
        let (x, y) = (k.from_rational(&rat(a.0, a.1)), k.from_rational(&rat(b.0, b.1)));
        let lhs = branch_log(&x.mul(&y)).unwrap();
        prop_assert!(lhs.eq_prec(&branch_log(&x).unwrap().add(&branch_log(&y).unwrap())));
    }
}

#[test]
fn digit_expansions() {
    // internal values carry guard digits; the nominal ones are the first N
    let k = LocalField::qp(5, 6).unwrap();
    let nominal = |x: &mtphi::Scalar| x.base_coord().with_precision(6).digits();
    assert_eq!(nominal(&k.one()), vec![1, 0, 0, 0, 0, 0]);
    let ten = k.from_int(10);
    assert_eq!(ten.base_coord().valuation(), Some(1));
    assert_eq!(nominal(&ten), vec![2, 0, 0, 0, 0]);
    assert_eq!(nominal(&k.from_ratio(1, 2)), vec![3, 2, 2, 2, 2, 2]);
}

/// Teichmüller lifts by the oracle `x ↦ x^p` iterated to a fixed point modulo `p^n`.
fn teichmuller_oracle(p: u64, r: u64, n: u32) -> BigInt {
    let m = BigInt::from(p).pow(n);
    let mut x = BigInt::from(r);
    for _ in 0..=n {
        x = x.modpow(&BigInt::from(p), &m);
    }
    x
}

#[test]
fn teichmuller_lifts() {
    for p in PRIMES {
        let k = LocalField::qp(p, 10).unwrap();
        for r in 1..p {
            let t = teichmuller(&k, r).unwrap();
            assert_eq!(qp_residue(t.base_coord(), p, 10), teichmuller_oracle(p, r, 10), "p={p} r={r}");
            assert!(t.pow(p - 1).eq_prec(&k.one()));
            assert!(unit_log(&t).unwrap().eq_prec(&k.zero()));
        }
    }
    let k = LocalField::qp(5, 3).unwrap();
    assert_eq!(teichmuller(&k, 2).unwrap().base_coord().with_precision(3).digits(), vec![2, 1, 2]);
    let k = LocalField::qp(3, 8).unwrap();
    assert!(teichmuller(&k, 2).unwrap().eq_prec(&k.from_int(-1)));
}

#[test]
fn ramified_arithmetic() {
    // K = Q_3(π), π^2 = 3
    let eis = vec![rat(-3, 1), BigRational::zero(), BigRational::one()];
    let k = LocalField::new(3, 10, eis, BigRational::zero()).unwrap();
    let pi = k.uniformizer();
    assert!(pi.mul(&pi).eq_prec(&k.from_int(3)));
    assert_eq!(pi.valuation().unwrap(), num_rational::Ratio::new(1, 2));
    let x = pi.add(&k.from_int(2));
    let inv = x.inv().unwrap();
    assert!(inv.mul(&x).eq_prec(&k.one()));
    // log(π) = (X + log(π^2 / 3)) / 2 with branch c = 0, and π^2 / 3 = 1
    assert!(branch_log(&pi).unwrap().eq_prec(&k.zero()));
    let u = k.one().add(&pi);
    let lhs = unit_log(&u.mul(&u)).unwrap();
    assert!(lhs.eq_prec(&unit_log(&u).unwrap().mul(&k.from_int(2))));
}

#[test]
fn zero_decisions_respect_precision() {
    let k = LocalField::qp(5, 4).unwrap();
    let tiny = k.from_rational(&BigRational::new(BigInt::one(), BigInt::from(5).pow(30)));
    assert!(matches!(tiny.mul(&k.zero()).is_zero_decided(), Err(Error::InsufficientPrecision(_))));
    assert!(k.p_power(4).is_zero_decided().unwrap());
    assert!(!k.p_power(3).is_zero_decided().unwrap());
    assert!(k.zero().valuation().is_err());
}
