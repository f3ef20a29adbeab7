//! Graded dimensions of the free Lie algebra with `d` generators in every positive degree.
//!
//! The generating series satisfies `Π_n (1 - t^n)^{-ℓ_n} = 1 / (1 - d·t/(1-t))`, which
//! gives `Σ_{k | n} k·ℓ_k = (d+1)^n - 1` and, by Möbius inversion,
//! `ℓ_n = (1/n) Σ_{k | n} μ(n/k) ((d+1)^k - 1)`.

use crate::error::{Error, Result};

pub const MAX_CUTOFF: usize = 12;

fn mobius(mut n: u64) -> i64 {
    let mut result = 1;
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            n /= f;
            if n.is_multiple_of(f) {
                return 0;
            }
            result = -result;
        }
        f += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// `ℓ_1, ..., ℓ_cutoff`.
pub fn lie_dims(d: u64, cutoff: usize) -> Result<Vec<u64>> {
    if d == 0 {
        return Err(Error::Invalid("need at least one generator per degree".into()));
    }
    if cutoff > MAX_CUTOFF {
        return Err(Error::Invalid(format!("cutoff {cutoff} exceeds {MAX_CUTOFF}")));
    }
    let mut out = Vec::with_capacity(cutoff);
    for n in 1..=cutoff as u64 {
        let mut sum: i128 = 0;
        for k in (1..=n).filter(|k| n % k == 0) {
            sum += mobius(n / k) as i128 * ((d as i128 + 1).pow(k as u32) - 1);
        }
        out.push((sum / n as i128) as u64);
    }
    Ok(out)
}

/// Brute-force count of Lyndon words of total weight `n` over the alphabet with `d` letters
/// of each weight `w ≥ 1`, letters ordered by `(weight, index)`.
pub fn lyndon_count(d: u64, n: usize) -> u64 {
    fn is_lyndon(w: &[(usize, u64)]) -> bool {
        (1..w.len()).all(|k| {
            let rot = w[k..].iter().chain(&w[..k]);
            w.iter().lt(rot)
        })
    }
    fn rec(d: u64, left: usize, word: &mut Vec<(usize, u64)>, count: &mut u64) {
        if left == 0 {
            if is_lyndon(word) {
                *count += 1;
            }
            return;
        }
        for w in 1..=left {
            for j in 0..d {
                word.push((w, j));
                rec(d, left - w, word, count);
                word.pop();
            }
        }
    }
    let mut count = 0;
    rec(d, n, &mut Vec::new(), &mut count);
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_profiles() {
        assert_eq!(lie_dims(1, 4).unwrap(), vec![1, 1, 2, 3]);
        assert_eq!(lie_dims(2, 3).unwrap(), vec![2, 3, 8]);
        assert_eq!(lie_dims(5, 1).unwrap(), vec![5]);
        assert!(lie_dims(1, 13).is_err());
    }

    #[test]
    fn agrees_with_enumeration() {
        for d in 1..=2 {
            let dims = lie_dims(d, 6).unwrap();
            for n in 1..=6 {
                assert_eq!(dims[n - 1], lyndon_count(d, n), "d={d} n={n}");
            }
        }
    }
}
