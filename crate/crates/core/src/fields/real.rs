//! Real embeddings as isolating intervals of the roots of the defining
//! polynomial, with certified sign evaluation.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::element::Element;
use crate::error::{Error, Result};

/// An open interval `(lo, hi)` containing exactly one real root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealPlace {
    pub lo: BigRational,
    pub hi: BigRational,
}

fn eval_int(p: &[BigInt], x: &BigRational) -> BigRational {
    p.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + BigRational::from_integer(c.clone()))
}

/// Range of `p` over `[lo, hi]` by interval Horner evaluation.
fn range(p: &[BigRational], lo: &BigRational, hi: &BigRational) -> (BigRational, BigRational) {
    let (mut a, mut b) = (BigRational::zero(), BigRational::zero());
    for c in p.iter().rev() {
        let prods = [&a * lo, &a * hi, &b * lo, &b * hi];
        let mn = prods.iter().min().expect("nonempty").clone();
        let mx = prods.iter().max().expect("nonempty").clone();
        a = mn + c;
        b = mx + c;
    }
    (a, b)
}

impl RealPlace {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        RealPlace { lo, hi }
    }

    /// Halve the interval, keeping the root.
    pub fn bisect(&mut self, poly: &[BigInt]) {
        let mid = (&self.lo + &self.hi) / BigRational::from_integer(2.into());
        let fl = eval_int(poly, &self.lo);
        let fm = eval_int(poly, &mid);
        if fm.is_zero() {
            // rational root: shrink around it
            let w = (&self.hi - &self.lo) / BigRational::from_integer(4.into());
            self.lo = &mid - &w;
            self.hi = &mid + &w;
        } else if fl.signum() == fm.signum() {
            self.lo = mid;
        } else {
            self.hi = mid;
        }
    }

    /// Sign of `x` at this embedding.
    pub fn sign(&self, poly: &[BigInt], x: &Element) -> Result<i8> {
        if x.is_zero() {
            return Err(Error::ValuationUndefined);
        }
        let mut iv = self.clone();
        for _ in 0..100_000 {
            let (a, b) = range(x.coeffs(), &iv.lo, &iv.hi);
            if a.is_positive() {
                return Ok(1);
            }
            if b.is_negative() {
                return Ok(-1);
            }
            iv.bisect(poly);
        }
        Err(Error::Inconsistent("real sign did not resolve".into()))
    }

    /// A rational approximation of the root to within `2^-bits`.
    pub fn approximate(&self, poly: &[BigInt], bits: u32) -> BigRational {
        let mut iv = self.clone();
        let eps = BigRational::new(BigInt::one(), BigInt::one() << bits);
        while &iv.hi - &iv.lo > eps {
            iv.bisect(poly);
        }
        (&iv.lo + &iv.hi) / BigRational::from_integer(2.into())
    }
}

fn rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r: Vec<BigRational> = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db && !r.is_empty() {
        let c = r.last().expect("nonempty") / &b[db];
        let k = r.len() - 1 - db;
        for (i, bi) in b.iter().enumerate() {
            r[k + i] -= &c * bi;
        }
        r.pop();
    }
    while r.last().is_some_and(Zero::is_zero) {
        r.pop();
    }
    r
}

/// Number of distinct real roots of a squarefree polynomial (Sturm).
pub fn count_real_roots(poly: &[BigInt]) -> usize {
    let p: Vec<BigRational> = poly.iter().map(|c| BigRational::from_integer(c.clone())).collect();
    let dp: Vec<BigRational> = p.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(i.into())).collect();
    let mut chain = alloc::vec![p, dp];
    loop {
        let n = chain.len();
        if chain[n - 1].is_empty() {
            chain.pop();
            break;
        }
        let r = rem(&chain[n - 2], &chain[n - 1]);
        if r.is_empty() {
            break;
        }
        chain.push(r.iter().map(|c| -c).collect());
    }
    let changes = |signs: Vec<i8>| signs.windows(2).filter(|w| w[0] != w[1]).count();
    let lc = |q: &Vec<BigRational>| if q.last().expect("nonempty").is_positive() { 1i8 } else { -1 };
    let at_pos: Vec<i8> = chain.iter().map(lc).collect();
    let at_neg: Vec<i8> = chain.iter().map(|q| if (q.len() - 1) % 2 == 0 { lc(q) } else { -lc(q) }).collect();
    changes(at_neg) - changes(at_pos)
}

/// Check that the intervals isolate all real roots of `poly`.
pub fn verify_isolation(poly: &[BigInt], places: &[RealPlace]) -> Result<()> {
    if count_real_roots(poly) != places.len() {
        return Err(Error::InvalidField("number of isolating intervals differs from the number of real roots".into()));
    }
    for (i, pl) in places.iter().enumerate() {
        if pl.lo >= pl.hi {
            return Err(Error::InvalidField("empty isolating interval".into()));
        }
        let a = eval_int(poly, &pl.lo);
        let b = eval_int(poly, &pl.hi);
        if a.is_zero() || b.is_zero() || a.signum() == b.signum() {
            return Err(Error::InvalidField("isolating interval without a sign change".into()));
        }
        for other in &places[i + 1..] {
            if pl.lo < other.hi && other.lo < pl.hi {
                return Err(Error::InvalidField("isolating intervals overlap".into()));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn poly(c: &[i64]) -> Vec<BigInt> {
        c.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn sturm_counts() {
        assert_eq!(count_real_roots(&poly(&[-194, 0, 1])), 2);
        assert_eq!(count_real_roots(&poly(&[46, 0, 1])), 0);
        assert_eq!(count_real_roots(&poly(&[1, -10, 0, 1])), 3);
        assert_eq!(count_real_roots(&poly(&[30, -5, 0, 0, 0, 1])), 1);
    }

    #[test]
    fn signs_in_real_quadratic() {
        let f = poly(&[-194, 0, 1]);
        let places = [RealPlace::new(q(13, 1), q(14, 1)), RealPlace::new(q(-14, 1), q(-13, 1))];
        verify_isolation(&f, &places).unwrap();
        let t = Element::from_ints(&[0, 1]);
        let s: Vec<i8> = places.iter().map(|p| p.sign(&f, &t).unwrap()).collect();
        assert_eq!(s, [1, -1]);
        // 14 - t is tiny and positive at the first place
        let x = Element::from_ints(&[14, -1]);
        assert_eq!(places[0].sign(&f, &x).unwrap(), 1);
        let x = Element::from_ints(&[-3, 0]);
        assert!(places.iter().all(|p| p.sign(&f, &x).unwrap() == -1));
    }

    #[test]
    fn bad_intervals_rejected() {
        let f = poly(&[-194, 0, 1]);
        assert!(verify_isolation(&f, &[RealPlace::new(q(13, 1), q(14, 1))]).is_err());
        let overlapping = [RealPlace::new(q(-14, 1), q(14, 1)), RealPlace::new(q(13, 1), q(14, 1))];
        assert!(verify_isolation(&f, &overlapping).is_err());
    }
}
