//! Completions of a number field at the dyadic primes.
//!
//! A completion `F_q` is `Q_2[t]/(g)` where `g` is an irreducible factor of
//! the defining polynomial over `Q_2`. Its elements are polynomials in `t`
//! of degree below `deg g` with [`TwoAdic`] coefficients.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::element::Element;
use crate::dyadic::{mask, TwoAdic, MAX_PRECISION};
use crate::error::{Error, Result};

/// Precision (bits) at which local factors are computed and stored.
pub const FACTOR_PRECISION: u32 = MAX_PRECISION;

pub type LocalElem = Vec<TwoAdic>;

fn one() -> TwoAdic {
    TwoAdic::from_parts(0, 1, MAX_PRECISION)
}

fn int(n: i64) -> TwoAdic {
    TwoAdic::from_i64(n, MAX_PRECISION)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalField {
    factor: Vec<TwoAdic>,
    e: u32,
    f: u32,
    uniformizer: LocalElem,
    residue_gen: LocalElem,
}

impl LocalField {
    /// Build from a monic factor (ascending coefficients) and its claimed
    /// ramification index and residue degree. The claim is certified by
    /// exhibiting an element of normalized valuation one and an element
    /// whose residue generates `F_(2^f)`.
    pub fn new(factor: Vec<TwoAdic>, e: u32, f: u32) -> Result<Self> {
        let k = factor.len() - 1;
        if k == 0 || (e * f) as usize != k {
            return Err(Error::LocalFactorMismatch(format!("e*f = {} but the local factor has degree {k}", e * f)));
        }
        let mut lf = LocalField { factor, e, f, uniformizer: Vec::new(), residue_gen: Vec::new() };
        let cands = lf.candidates();
        let mut min_pos = i64::MAX;
        for y in &cands {
            if let Ok(v) = lf.norm(y).v2() {
                if v > 0 {
                    min_pos = min_pos.min(v);
                    if v == f as i64 && lf.uniformizer.is_empty() {
                        lf.uniformizer = y.clone();
                    }
                }
            }
        }
        if min_pos < f as i64 || lf.uniformizer.is_empty() {
            return Err(Error::LocalFactorMismatch(format!("no element of norm valuation {f} (smallest seen {min_pos})")));
        }
        if f == 1 {
            lf.residue_gen = lf.constant(one());
        } else {
            let divisors: Vec<u32> = (1..f).filter(|d| f % d == 0).collect();
            for y in &cands {
                if lf.valuation(y) != Ok(0) {
                    continue;
                }
                let generates = divisors.iter().all(|&d| {
                    let z = lf.sub(&lf.pow(y, 1u64 << d), y);
                    lf.valuation(&z) == Ok(0)
                });
                if generates {
                    lf.residue_gen = y.clone();
                    break;
                }
            }
            if lf.residue_gen.is_empty() {
                return Err(Error::LocalFactorMismatch(format!("residue field of degree {f} not found")));
            }
        }
        Ok(lf)
    }

    pub fn degree(&self) -> usize {
        self.factor.len() - 1
    }

    pub fn ramification(&self) -> u32 {
        self.e
    }

    pub fn residue_degree(&self) -> u32 {
        self.f
    }

    pub fn factor(&self) -> &[TwoAdic] {
        &self.factor
    }

    pub fn uniformizer(&self) -> &LocalElem {
        &self.uniformizer
    }

    fn candidates(&self) -> Vec<LocalElem> {
        let k = self.degree();
        let digits = [0i64, 1, -1, 2];
        let mut out = Vec::new();
        let total = digits.len().pow(k as u32);
        for s in 0..2u32 {
            for code in 1..total {
                let mut c = code;
                let mut y = Vec::with_capacity(k);
                for _ in 0..k {
                    y.push(TwoAdic::from_ratio(&BigRational::new(digits[c % digits.len()].into(), BigInt::from(1u8) << s), MAX_PRECISION));
                    c /= digits.len();
                }
                out.push(y);
            }
        }
        out
    }

    pub fn constant(&self, c: TwoAdic) -> LocalElem {
        let mut y = vec![TwoAdic::EXACT_ZERO; self.degree()];
        y[0] = c;
        y
    }

    fn reduce(&self, mut c: Vec<TwoAdic>) -> LocalElem {
        let k = self.degree();
        while c.len() > k {
            let top = c.pop().expect("nonempty");
            if top.is_exact_zero() {
                continue;
            }
            let off = c.len() - k;
            for i in 0..k {
                c[off + i] = c[off + i].sub(&top.mul(&self.factor[i]));
            }
        }
        c.resize(k, TwoAdic::EXACT_ZERO);
        c
    }

    /// Image of a global element (power-basis coordinates).
    pub fn embed(&self, x: &Element) -> LocalElem {
        let c = x.coeffs().iter().map(|q| TwoAdic::from_ratio(q, MAX_PRECISION)).collect();
        self.reduce(c)
    }

    pub fn add(&self, x: &LocalElem, y: &LocalElem) -> LocalElem {
        x.iter().zip(y).map(|(a, b)| a.add(b)).collect()
    }

    pub fn sub(&self, x: &LocalElem, y: &LocalElem) -> LocalElem {
        x.iter().zip(y).map(|(a, b)| a.sub(b)).collect()
    }

    pub fn mul(&self, x: &LocalElem, y: &LocalElem) -> LocalElem {
        let k = self.degree();
        let mut c = vec![TwoAdic::EXACT_ZERO; 2 * k - 1];
        for (i, a) in x.iter().enumerate() {
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in y.iter().enumerate() {
                c[i + j] = c[i + j].add(&a.mul(b));
            }
        }
        self.reduce(c)
    }

    pub fn pow(&self, x: &LocalElem, mut e: u64) -> LocalElem {
        let mut acc = self.constant(one());
        let mut b = x.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(&b, &b);
            }
        }
        acc
    }

    /// `N_(F_q/Q_2)(x)` as the determinant of multiplication by `x`.
    pub fn norm(&self, x: &LocalElem) -> TwoAdic {
        let k = self.degree();
        let mut cols = Vec::with_capacity(k);
        let mut t = vec![TwoAdic::EXACT_ZERO; k];
        if k > 1 {
            t[1] = one();
        } else {
            t[0] = self.factor[0].neg();
        }
        let mut cur = x.clone();
        for j in 0..k {
            cols.push(cur.clone());
            if j + 1 < k {
                cur = self.mul(&cur, &t);
            }
        }
        let m: Vec<Vec<TwoAdic>> = (0..k).map(|i| (0..k).map(|j| cols[j][i]).collect()).collect();
        det(m)
    }

    /// Normalized valuation `v_q(x) = v_2(N x) / f`.
    pub fn valuation(&self, x: &LocalElem) -> Result<i64> {
        let v = self.norm(x).v2()?;
        if v % self.f as i64 != 0 {
            return Err(Error::Inconsistent(format!("norm valuation {v} not divisible by f = {}", self.f)));
        }
        Ok(v / self.f as i64)
    }

    /// Representatives `sum c_j z^j` (`c_j` in {0,1}) of the residue field.
    fn residue_reps(&self) -> Vec<LocalElem> {
        let mut powers = vec![self.constant(one())];
        for j in 1..self.f as usize {
            powers.push(self.mul(&powers[j - 1], &self.residue_gen));
        }
        (0..1u32 << self.f)
            .map(|bits| {
                let mut y = self.constant(TwoAdic::EXACT_ZERO);
                for (j, p) in powers.iter().enumerate() {
                    if bits >> j & 1 == 1 {
                        y = self.add(&y, p);
                    }
                }
                y
            })
            .collect()
    }

    /// Topological generators of `F_q^x` modulo squares and odd-order
    /// roots of unity: `pi`, `-1`, `5`, powers of the residue generator and
    /// `1 + pi^k z^j` for `1 <= k <= 2e+1`.
    pub fn generators(&self) -> Vec<LocalElem> {
        let mut g = vec![self.uniformizer.clone(), self.constant(int(-1)), self.constant(int(5))];
        let mut zs = vec![self.constant(one())];
        for j in 1..self.f as usize {
            zs.push(self.mul(&zs[j - 1], &self.residue_gen));
            g.push(zs[j].clone());
        }
        let mut pk = self.constant(one());
        for _ in 1..=2 * self.e + 1 {
            pk = self.mul(&pk, &self.uniformizer);
            for z in &zs {
                g.push(self.add(&self.constant(one()), &self.mul(&pk, z)));
            }
        }
        g
    }

    /// Whether `-1` is a square in `F_q`, by searching `y` modulo
    /// `pi^(e+1)` with `v_q(y^2 + 1) >= 2e + 1`.
    pub fn has_sqrt_minus_one(&self) -> bool {
        let reps = self.residue_reps();
        let e = self.e as usize;
        let mut pis = vec![self.constant(one())];
        for i in 1..=e {
            pis.push(self.mul(&pis[i - 1], &self.uniformizer));
        }
        let need = self.f as i64 * (2 * self.e as i64 + 1);
        let n = reps.len();
        let total = n.pow(self.e + 1);
        (0..total).any(|mut code| {
            let mut y = self.constant(TwoAdic::EXACT_ZERO);
            for p in &pis {
                y = self.add(&y, &self.mul(p, &reps[code % n]));
                code /= n;
            }
            let z = self.add(&self.mul(&y, &y), &self.constant(one()));
            self.norm(&z).min_val() >= need
        })
    }
}

/// Determinant over `Q_2` with full pivoting on minimal valuation.
pub fn det(mut a: Vec<Vec<TwoAdic>>) -> TwoAdic {
    let n = a.len();
    let mut d = one();
    for k in 0..n {
        let mut best: Option<(usize, usize, i64)> = None;
        for i in k..n {
            for j in k..n {
                if let Ok(v) = a[i][j].v2() {
                    if best.map_or(true, |b| v < b.2) {
                        best = Some((i, j, v));
                    }
                }
            }
        }
        let Some((pi, pj, _)) = best else {
            let bound: i64 = (k..n).map(|i| (k..n).map(|j| a[i][j].min_val()).min().unwrap_or(0)).sum();
            return TwoAdic::zero_mod(d.min_val().saturating_add(bound));
        };
        if pi != k {
            a.swap(pi, k);
            d = d.neg();
        }
        if pj != k {
            for row in a.iter_mut() {
                row.swap(pj, k);
            }
            d = d.neg();
        }
        let piv = a[k][k];
        d = d.mul(&piv);
        let inv = piv.inv().expect("nonzero pivot");
        for i in k + 1..n {
            if a[i][k].is_exact_zero() {
                continue;
            }
            let fct = a[i][k].mul(&inv);
            for j in k + 1..n {
                a[i][j] = a[i][j].sub(&fct.mul(&a[k][j]));
            }
        }
    }
    d
}

// ---- factorization of the defining polynomial over Q_2 ----

type F2 = u128;

fn f2_deg(a: F2) -> i32 {
    127 - a.leading_zeros() as i32
}

fn f2_mul(a: F2, b: F2) -> F2 {
    let mut r = 0;
    for i in 0..64 {
        if b >> i & 1 == 1 {
            r ^= a << i;
        }
    }
    r
}

fn f2_divrem(mut a: F2, b: F2) -> (F2, F2) {
    let db = f2_deg(b);
    let mut q = 0;
    while a != 0 && f2_deg(a) >= db {
        let s = f2_deg(a) - db;
        q |= 1 << s;
        a ^= b << s;
    }
    (q, a)
}

/// `(g, s, t)` with `s a + t b = g`.
fn f2_xgcd(a: F2, b: F2) -> (F2, F2, F2) {
    let (mut r0, mut r1, mut s0, mut s1, mut t0, mut t1) = (a, b, 1, 0, 0, 1);
    while r1 != 0 {
        let (q, r) = f2_divrem(r0, r1);
        (r0, r1) = (r1, r);
        (s0, s1) = (s1, s0 ^ f2_mul(q, s1));
        (t0, t1) = (t1, t0 ^ f2_mul(q, t1));
    }
    (r0, s0, t0)
}

fn f2_irreducible(a: F2) -> bool {
    let d = f2_deg(a);
    (2..1u128 << (d / 2 + 1)).all(|b| f2_deg(b) < 1 || f2_deg(b) > d / 2 || f2_divrem(a, b).1 != 0)
}

/// Irreducible factors of `a` over `F_2`, with multiplicity, ascending.
fn f2_factor(mut a: F2) -> Vec<F2> {
    let mut out = Vec::new();
    let mut b: F2 = 2;
    while f2_deg(a) > 0 {
        if f2_deg(b) > f2_deg(a) {
            out.push(a);
            break;
        }
        if f2_irreducible(b) && f2_divrem(a, b).1 == 0 {
            out.push(b);
            a = f2_divrem(a, b).0;
        } else {
            b += 1;
        }
    }
    out
}

type Zk = Vec<u128>;

fn zk_mul(a: &Zk, b: &Zk, m: u128) -> Zk {
    let mut c = vec![0u128; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            c[i + j] = c[i + j].wrapping_add(x.wrapping_mul(y)) & m;
        }
    }
    c
}

fn to_f2(a: &Zk) -> F2 {
    a.iter().enumerate().fold(0, |acc, (i, &c)| acc | ((c & 1) << i))
}

fn from_f2(a: F2, len: usize) -> Zk {
    (0..len).map(|i| a >> i & 1).collect()
}

/// Lift `f = g h mod 2` (coprime, `g`, `h` monic) to `mod 2^bits`.
fn hensel_pair(f: &Zk, g: F2, h: F2, bits: u32) -> (Zk, Zk) {
    let m = mask(bits);
    let (one_, s, t) = f2_xgcd(g, h);
    debug_assert_eq!(one_, 1);
    let mut gg = from_f2(g, f2_deg(g) as usize + 1);
    let mut hh = from_f2(h, f2_deg(h) as usize + 1);
    for j in 1..bits {
        let prod = zk_mul(&gg, &hh, m);
        let diff: Zk = f.iter().zip(&prod).map(|(a, b)| a.wrapping_sub(*b) & m).collect();
        if diff.iter().all(|&x| x & mask(j + 1) == 0) {
            continue;
        }
        let e = to_f2(&diff.iter().map(|&x| x >> j).collect::<Vec<_>>());
        let a = f2_divrem(f2_mul(e, t), g).1;
        let b = f2_divrem(e ^ f2_mul(a, h), g).0;
        for (i, c) in gg.iter_mut().enumerate() {
            *c = c.wrapping_add((a >> i & 1) << j) & m;
        }
        for (i, c) in hh.iter_mut().enumerate() {
            *c = c.wrapping_add((b >> i & 1) << j) & m;
        }
        let _ = s;
    }
    (gg, hh)
}

/// Factorization of a monic integer polynomial over `Q_2`, available when
/// it is separable modulo 2. Each factor is unramified: `(factor, 1, deg)`.
pub fn unramified_factors(poly: &[BigInt], bits: u32) -> Result<Vec<(Vec<TwoAdic>, u32, u32)>> {
    let m = BigInt::from(1u8) << bits;
    let mut rest: Zk = poly.iter().map(|c| c.mod_floor(&m).to_u128().expect("fits")).collect();
    let mut facs = f2_factor(to_f2(&rest));
    for w in facs.windows(2) {
        if w[0] == w[1] {
            return Err(Error::UnsupportedLocal("defining polynomial is not separable modulo 2".into()));
        }
    }
    let mut out = Vec::new();
    while let Some(g) = facs.first().copied() {
        facs.remove(0);
        let lifted = if facs.is_empty() {
            rest.clone()
        } else {
            let h = facs.iter().fold(1, |acc, &x| f2_mul(acc, x));
            let (gg, hh) = hensel_pair(&rest, g, h, bits);
            rest = hh;
            gg
        };
        let deg = lifted.len() as u32 - 1;
        let coeffs = lifted.iter().map(|&c| TwoAdic::from_residue(c, bits)).collect();
        out.push((coeffs, 1, deg));
    }
    Ok(out)
}

/// Check that the product of the given local factors reproduces the
/// defining polynomial modulo `2^bits`.
pub fn factors_multiply_to(poly: &[BigInt], factors: &[Vec<TwoAdic>], bits: u32) -> bool {
    let m = mask(bits);
    let mut prod: Zk = vec![1];
    for f in factors {
        let Ok(z) = f.iter().map(|c| c.residue(bits)).collect::<Result<Zk>>() else {
            return false;
        };
        prod = zk_mul(&prod, &z, m);
    }
    let mb = BigInt::from(1u8) << bits;
    let target: Zk = poly.iter().map(|c| c.mod_floor(&mb).to_u128().expect("fits")).collect();
    prod == target
}

/// Exact coefficients of an integer polynomial as 2-adic numbers.
pub fn exact_factor(poly: &[BigInt]) -> Vec<TwoAdic> {
    poly.iter().map(|c| if c.is_zero() { TwoAdic::EXACT_ZERO } else { TwoAdic::from_bigint(c, MAX_PRECISION) }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[i64]) -> Vec<BigInt> {
        c.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn f2_basics() {
        // x^3 + 1 = (x + 1)(x^2 + x + 1)
        assert_eq!(f2_factor(0b1001), vec![0b11, 0b111]);
        assert!(f2_irreducible(0b111));
        assert!(!f2_irreducible(0b101));
    }

    #[test]
    fn cubic_dyadic_splitting() {
        let f = poly(&[1, -10, 0, 1]);
        let facs = unramified_factors(&f, 64).unwrap();
        assert_eq!(facs.len(), 2);
        assert_eq!((facs[0].1, facs[0].2), (1, 1));
        assert_eq!((facs[1].1, facs[1].2), (1, 2));
        let fs: Vec<Vec<TwoAdic>> = facs.iter().map(|f| f.0.clone()).collect();
        assert!(factors_multiply_to(&f, &fs, 64));
        for (g, e, fr) in facs {
            LocalField::new(g, e, fr).unwrap();
        }
    }

    #[test]
    fn ramified_quadratic() {
        // t^2 + 46 over Q_2
        let lf = LocalField::new(exact_factor(&poly(&[46, 0, 1])), 2, 1).unwrap();
        let t = lf.embed(&Element::from_ints(&[0, 1]));
        assert_eq!(lf.norm(&t), TwoAdic::from_i64(46, MAX_PRECISION));
        assert_eq!(lf.valuation(&t).unwrap(), 1);
        assert_eq!(lf.norm(&lf.constant(int(3))), int(9));
        assert!(!lf.has_sqrt_minus_one());
        // wrong residue degree
        assert!(matches!(LocalField::new(exact_factor(&poly(&[46, 0, 1])), 1, 2), Err(Error::LocalFactorMismatch(_))));
    }

    #[test]
    fn gaussian_completion() {
        // t^2 + 1: i is in the field
        let lf = LocalField::new(exact_factor(&poly(&[1, 0, 1])), 2, 1).unwrap();
        assert!(lf.has_sqrt_minus_one());
        // t^2 + t + 1: Q_2(zeta_3), unramified
        let lf = LocalField::new(exact_factor(&poly(&[1, 1, 1])), 1, 2).unwrap();
        assert!(!lf.has_sqrt_minus_one());
    }
}
