//! Odd primes: splitting of the defining polynomial modulo `p` and
//! valuations at the primes above `p`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::element::{Element, NumberField};
use crate::error::{Error, Result};

type Fp = Vec<u64>;

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

fn trim(a: &mut Fp) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn poly_mul(a: &Fp, b: &Fp, p: u64) -> Fp {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut c = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            c[i + j] = (c[i + j] + mulmod(x, y, p)) % p;
        }
    }
    trim(&mut c);
    c
}

fn poly_sub(a: &Fp, b: &Fp, p: u64) -> Fp {
    let mut c = vec![0u64; a.len().max(b.len())];
    for (i, x) in c.iter_mut().enumerate() {
        let u = a.get(i).copied().unwrap_or(0);
        let v = b.get(i).copied().unwrap_or(0);
        *x = (u + p - v) % p;
    }
    trim(&mut c);
    c
}

/// Quotient and remainder; `b` must be nonzero.
fn poly_divrem(a: &Fp, b: &Fp, p: u64) -> (Fp, Fp) {
    let mut r = a.clone();
    trim(&mut r);
    let db = b.len() - 1;
    let inv = powmod(b[db], p - 2, p);
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let mut q = vec![0u64; r.len() - db];
    while r.len() >= b.len() {
        let k = r.len() - b.len();
        let c = mulmod(*r.last().expect("nonempty"), inv, p);
        q[k] = c;
        for (i, &bi) in b.iter().enumerate() {
            r[k + i] = (r[k + i] + p - mulmod(c, bi, p)) % p;
        }
        trim(&mut r);
    }
    trim(&mut q);
    (q, r)
}

fn poly_gcd(a: &Fp, b: &Fp, p: u64) -> Fp {
    let (mut a, mut b) = (a.clone(), b.clone());
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let (_, r) = poly_divrem(&a, &b, p);
        a = b;
        b = r;
    }
    if let Some(&lc) = a.last() {
        let inv = powmod(lc, p - 2, p);
        for x in a.iter_mut() {
            *x = mulmod(*x, inv, p);
        }
    }
    a
}

fn poly_powmod(base: &Fp, mut e: u64, m: &Fp, p: u64) -> Fp {
    let mut acc: Fp = vec![1];
    let mut b = poly_divrem(base, m, p).1;
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_divrem(&poly_mul(&acc, &b, p), m, p).1;
        }
        b = poly_divrem(&poly_mul(&b, &b, p), m, p).1;
        e >>= 1;
    }
    acc
}

fn derivative(a: &Fp, p: u64) -> Fp {
    let mut d: Fp = a.iter().enumerate().skip(1).map(|(i, &c)| mulmod(c, i as u64 % p, p)).collect();
    trim(&mut d);
    d
}

fn eval(a: &Fp, x: u64, p: u64) -> u64 {
    a.iter().rev().fold(0, |acc, &c| (mulmod(acc, x, p) + c) % p)
}

fn is_irreducible(g: &Fp, p: u64) -> bool {
    let d = g.len() - 1;
    let x: Fp = vec![0, 1];
    let mut xp = x.clone();
    for _ in 0..d / 2 {
        xp = poly_powmod(&xp, p, g, p);
        if poly_gcd(&poly_sub(&xp, &x, p), g, p).len() > 1 {
            return false;
        }
    }
    true
}

/// Largest prime for which roots are found by exhaustive search.
pub const ROOT_SEARCH_LIMIT: u64 = 1 << 20;

/// The primes of `F` above an odd prime `p`, for the shapes handled here:
/// any number of unramified degree-one primes given by simple roots of `f`
/// modulo `p`, plus at most one further prime carrying the rest of `f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeDecomposition {
    pub p: u64,
    /// Simple roots of `f` modulo `p`, ascending.
    pub roots: Vec<u64>,
    /// `(e, f)` of the remaining prime, if any.
    pub rest: Option<(u32, u32)>,
}

/// Index of a prime inside a [`PrimeDecomposition`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrimeSlot {
    Root(usize),
    Rest,
}

impl PrimeDecomposition {
    /// Split `p` in `K`. The caller guarantees that `p` does not divide the
    /// index of `Z[t]` in the maximal order.
    pub fn new(k: &NumberField, p: u64) -> Result<Self> {
        if p % 2 == 0 || p < 3 {
            return Err(Error::InvalidField("odd prime expected".into()));
        }
        if p > ROOT_SEARCH_LIMIT {
            return Err(Error::UnsupportedLocal(alloc::format!("prime {p} too large for root search")));
        }
        let pb = BigInt::from(p);
        let mut f: Fp = k.poly().iter().map(|c| c.mod_floor(&pb).to_u64().expect("small")).collect();
        trim(&mut f);
        let df = derivative(&f, p);
        let mut roots = Vec::new();
        for x in 0..p {
            if eval(&f, x, p) == 0 && eval(&df, x, p) != 0 {
                roots.push(x);
                let (q, _) = poly_divrem(&f, &vec![(p - x) % p, 1], p);
                f = q;
            }
        }
        let rest = if f.len() <= 1 {
            None
        } else {
            // f must be g^e with g irreducible
            let g0 = poly_gcd(&f, &derivative(&f, p), p);
            let g = if g0.len() <= 1 { f.clone() } else { squarefree_kernel(&f, p) };
            let dg = g.len() - 1;
            let e = (f.len() - 1) / dg;
            let mut pw: Fp = vec![1];
            for _ in 0..e {
                pw = poly_mul(&pw, &g, p);
            }
            let lc = *f.last().expect("nonempty");
            let scaled: Fp = pw.iter().map(|&c| mulmod(c, lc, p)).collect();
            if scaled != f || !is_irreducible(&g, p) {
                return Err(Error::UnsupportedLocal(alloc::format!("splitting of {p} has more than one non-trivial prime")));
            }
            Some((e as u32, dg as u32))
        };
        Ok(PrimeDecomposition { p, roots, rest })
    }

    pub fn slots(&self) -> Vec<PrimeSlot> {
        let mut s: Vec<PrimeSlot> = (0..self.roots.len()).map(PrimeSlot::Root).collect();
        if self.rest.is_some() {
            s.push(PrimeSlot::Rest);
        }
        s
    }

    /// Residue degree of the prime in `slot`.
    pub fn residue_degree(&self, slot: PrimeSlot) -> u32 {
        match slot {
            PrimeSlot::Root(_) => 1,
            PrimeSlot::Rest => self.rest.map_or(0, |(_, f)| f),
        }
    }

    pub fn ramification(&self, slot: PrimeSlot) -> u32 {
        match slot {
            PrimeSlot::Root(_) => 1,
            PrimeSlot::Rest => self.rest.map_or(0, |(e, _)| e),
        }
    }

    /// `v_P(x)` for the prime in `slot`.
    pub fn valuation(&self, k: &NumberField, slot: PrimeSlot, x: &Element) -> Result<i64> {
        if x.is_zero() {
            return Err(Error::ValuationUndefined);
        }
        match slot {
            PrimeSlot::Root(i) => Ok(root_valuation(k, self.p, self.roots[i], x)),
            PrimeSlot::Rest => {
                let (_, f) = self.rest.ok_or_else(|| Error::InvalidField("no remaining prime".into()))?;
                let n = k.norm(x);
                let vn = vp(n.numer(), self.p) - vp(n.denom(), self.p);
                let others: i64 = (0..self.roots.len()).map(|i| root_valuation(k, self.p, self.roots[i], x)).sum();
                let r = vn - others;
                if r % f as i64 != 0 {
                    return Err(Error::Inconsistent(alloc::format!("valuation at {} not divisible by residue degree", self.p)));
                }
                Ok(r / f as i64)
            }
        }
    }

    /// The slot of the prime containing `alpha` (for a two-element
    /// representation `(p, alpha)`).
    pub fn locate(&self, k: &NumberField, alpha: &Element) -> Option<PrimeSlot> {
        let hits: Vec<PrimeSlot> = self
            .slots()
            .into_iter()
            .filter(|&s| self.valuation(k, s, alpha).is_ok_and(|v| v > 0))
            .collect();
        (hits.len() == 1).then(|| hits[0])
    }
}

fn squarefree_kernel(f: &Fp, p: u64) -> Fp {
    let g = poly_gcd(f, &derivative(f, p), p);
    let (q, _) = poly_divrem(f, &g, p);
    let mut q = q;
    let lc = *q.last().expect("nonempty");
    let inv = powmod(lc, p - 2, p);
    for x in q.iter_mut() {
        *x = mulmod(*x, inv, p);
    }
    q
}

/// Exponent of `p` in a nonzero integer.
pub fn vp(n: &BigInt, p: u64) -> i64 {
    if n.is_zero() {
        return i64::MAX;
    }
    let pb = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// Lift a simple root of `f` modulo `p` to a root modulo `p^k`.
pub fn lift_root(k: &NumberField, p: u64, r: u64, digits: u32) -> BigInt {
    let f = k.poly();
    let df: Vec<BigInt> = f.iter().enumerate().skip(1).map(|(i, c)| c * BigInt::from(i)).collect();
    let pb = BigInt::from(p);
    let mut x = BigInt::from(r);
    let mut prec = 1u32;
    while prec < digits {
        prec = (2 * prec).min(digits);
        let m = pb.pow(prec);
        let fx = f.iter().rev().fold(BigInt::zero(), |acc, c| (acc * &x + c).mod_floor(&m));
        let dfx = df.iter().rev().fold(BigInt::zero(), |acc, c| (acc * &x + c).mod_floor(&m));
        let inv = super::element::mod_inverse(&dfx, &m).expect("simple root");
        x = (x - fx * inv).mod_floor(&m);
    }
    x
}

fn root_valuation(k: &NumberField, p: u64, r: u64, x: &Element) -> i64 {
    let d = x.denominator();
    let num = x.numerator();
    let vd = vp(&d, p);
    let pb = BigInt::from(p);
    let mut digits = 16u32;
    loop {
        let root = lift_root(k, p, r, digits);
        let m = pb.pow(digits);
        let val = num.iter().rev().fold(BigInt::zero(), |acc, c| (acc * &root + c).mod_floor(&m));
        if !val.is_zero() {
            return vp(&val, p) - vd;
        }
        digits *= 2;
    }
}

/// Legendre symbol of `x(r)` at the degree-one prime `(p, t - r)`;
/// `None` if `x` is not a unit there.
pub fn quadratic_character(k: &NumberField, p: u64, r: u64, x: &Element) -> Option<i8> {
    let v = k.eval_mod(x, &BigInt::from(r), &BigInt::from(p))?;
    let a = v.to_u64()?;
    if a == 0 {
        return None;
    }
    Some(if powmod(a, (p - 1) / 2, p) == 1 { 1 } else { -1 })
}

/// Whether `n` is prime (trial division; only used on small inputs).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn next_prime(n: u64) -> u64 {
    let mut m = n + 1;
    while !is_prime(m) {
        m += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(c: &[i64]) -> NumberField {
        NumberField::new(c.iter().map(|&x| BigInt::from(x)).collect()).unwrap()
    }

    #[test]
    fn quadratic_splitting() {
        // t^2 + 46: 5 splits? -46 = 4 mod 5 = 2^2, so yes
        let k = field(&[46, 0, 1]);
        let d = PrimeDecomposition::new(&k, 5).unwrap();
        assert_eq!(d.roots, vec![2, 3]);
        assert_eq!(d.rest, None);
        // 23 ramifies
        let d = PrimeDecomposition::new(&k, 23).unwrap();
        assert!(d.roots.is_empty());
        assert_eq!(d.rest, Some((2, 1)));
        let t = k.theta();
        assert_eq!(d.valuation(&k, PrimeSlot::Rest, &t).unwrap(), 1);
        // 3: -46 = 2 mod 3, inert
        let d = PrimeDecomposition::new(&k, 3).unwrap();
        assert_eq!(d.rest, Some((1, 2)));
        assert_eq!(d.valuation(&k, PrimeSlot::Rest, &k.from_int(9)).unwrap(), 2);
    }

    #[test]
    fn root_valuations() {
        let k = field(&[46, 0, 1]);
        let d = PrimeDecomposition::new(&k, 5).unwrap();
        // (2 + t)(2 - t) = 4 + 46 = 50
        let x = Element::from_ints(&[2, 1]);
        let v: Vec<i64> = d.slots().iter().map(|&s| d.valuation(&k, s, &x).unwrap()).collect();
        assert_eq!(v.iter().sum::<i64>(), 2);
        assert_eq!(d.locate(&k, &x).map(|s| d.valuation(&k, s, &x).unwrap()), Some(2));
    }

    #[test]
    fn cubic_mixed_splitting() {
        // t^3 - 10t + 1 mod 3: t^3 - t + 1 = t^3 + 2t + 1, irreducible over F_3
        let k = field(&[1, -10, 0, 1]);
        let d = PrimeDecomposition::new(&k, 3).unwrap();
        assert_eq!(d.rest, Some((1, 3)));
        let d = PrimeDecomposition::new(&k, 5).unwrap();
        // mod 5: t^3 + 1 = (t + 1)(t^2 - t + 1)
        assert_eq!(d.roots, vec![4]);
        assert_eq!(d.rest, Some((1, 2)));
    }

    #[test]
    fn characters() {
        let k = field(&[46, 0, 1]);
        // at (5, t - 2): x = 1 + t -> 3, a non-residue mod 5
        assert_eq!(quadratic_character(&k, 5, 2, &Element::from_ints(&[1, 1])), Some(-1));
        assert_eq!(quadratic_character(&k, 5, 2, &Element::from_ints(&[2, 1])), Some(1));
        assert_eq!(quadratic_character(&k, 5, 3, &Element::from_ints(&[2, 1])), None);
    }
}
