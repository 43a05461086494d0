//! Arithmetic in `Q[x]/(f)` for a monic integer polynomial `f`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// A field element written in the power basis `1, t, ..., t^(n-1)` of the
/// defining polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Element {
    coeffs: Vec<BigRational>,
}

impl Element {
    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        Element { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Element { coeffs: coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect() }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Least common multiple of the coefficient denominators.
    pub fn denominator(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// Integer numerator polynomial `N` with `self = N / denominator()`.
    pub fn numerator(&self) -> Vec<BigInt> {
        let d = self.denominator();
        self.coeffs.iter().map(|c| (c * BigRational::from_integer(d.clone())).to_integer()).collect()
    }

    /// Largest coefficient size in bits, a rough measure of height.
    pub fn height_bits(&self) -> u64 {
        self.coeffs.iter().map(|c| c.numer().bits().max(c.denom().bits())).max().unwrap_or(0)
    }
}

/// The number field `Q[t]/(f)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumberField {
    poly: Vec<BigInt>,
}

impl NumberField {
    /// `poly` lists integer coefficients in ascending order; it must be monic.
    pub fn new(poly: Vec<BigInt>) -> Result<Self> {
        if poly.len() < 2 {
            return Err(Error::InvalidField("defining polynomial must have degree at least 1".into()));
        }
        if !poly.last().is_some_and(One::is_one) {
            return Err(Error::InvalidField("defining polynomial must be monic".into()));
        }
        Ok(NumberField { poly })
    }

    pub fn degree(&self) -> usize {
        self.poly.len() - 1
    }

    pub fn poly(&self) -> &[BigInt] {
        &self.poly
    }

    pub fn zero(&self) -> Element {
        Element { coeffs: vec![BigRational::zero(); self.degree()] }
    }

    pub fn from_ratio(&self, q: BigRational) -> Element {
        let mut x = self.zero();
        x.coeffs[0] = q;
        x
    }

    pub fn from_int(&self, n: i64) -> Element {
        self.from_ratio(BigRational::from_integer(n.into()))
    }

    pub fn one(&self) -> Element {
        self.from_int(1)
    }

    /// The generator `t`.
    pub fn theta(&self) -> Element {
        let mut x = self.zero();
        if self.degree() == 1 {
            x.coeffs[0] = BigRational::from_integer(-self.poly[0].clone());
        } else {
            x.coeffs[1] = BigRational::one();
        }
        x
    }

    /// Reduce an arbitrary polynomial in `t` modulo `f`.
    pub fn reduce(&self, mut c: Vec<BigRational>) -> Element {
        let n = self.degree();
        while c.len() > n {
            let top = c.pop().expect("nonempty");
            if top.is_zero() {
                continue;
            }
            let k = c.len() - n;
            for i in 0..n {
                if !self.poly[i].is_zero() {
                    c[k + i] -= &top * BigRational::from_integer(self.poly[i].clone());
                }
            }
        }
        c.resize(n, BigRational::zero());
        Element { coeffs: c }
    }

    pub fn add(&self, x: &Element, y: &Element) -> Element {
        Element { coeffs: x.coeffs.iter().zip(&y.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, x: &Element, y: &Element) -> Element {
        Element { coeffs: x.coeffs.iter().zip(&y.coeffs).map(|(a, b)| a - b).collect() }
    }

    pub fn neg(&self, x: &Element) -> Element {
        Element { coeffs: x.coeffs.iter().map(|a| -a).collect() }
    }

    pub fn scale(&self, x: &Element, q: &BigRational) -> Element {
        Element { coeffs: x.coeffs.iter().map(|a| a * q).collect() }
    }

    pub fn mul(&self, x: &Element, y: &Element) -> Element {
        let n = self.degree();
        let mut c = vec![BigRational::zero(); 2 * n - 1];
        for (i, a) in x.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in y.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    c[i + j] += a * b;
                }
            }
        }
        self.reduce(c)
    }

    /// `x^k` for any integer `k`; negative powers need `x != 0`.
    pub fn pow(&self, x: &Element, k: i64) -> Result<Element> {
        let mut base = if k < 0 { self.inv(x)? } else { x.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        Ok(acc)
    }

    /// Matrix of multiplication by `x`; column `j` holds `x t^j`.
    pub fn mul_matrix(&self, x: &Element) -> Vec<Vec<BigRational>> {
        let n = self.degree();
        let mut cols = Vec::with_capacity(n);
        let mut cur = x.clone();
        let t = self.theta();
        for j in 0..n {
            cols.push(cur.coeffs.clone());
            if j + 1 < n {
                cur = self.mul(&cur, &t);
            }
        }
        (0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect()
    }

    pub fn norm(&self, x: &Element) -> BigRational {
        det(self.mul_matrix(x))
    }

    pub fn trace(&self, x: &Element) -> BigRational {
        let m = self.mul_matrix(x);
        (0..m.len()).map(|i| m[i][i].clone()).sum()
    }

    /// Characteristic polynomial of `x`, monic, ascending coefficients.
    pub fn char_poly(&self, x: &Element) -> Vec<BigRational> {
        // Faddeev-LeVerrier
        let a = self.mul_matrix(x);
        let n = a.len();
        let mut c = vec![BigRational::zero(); n + 1];
        c[n] = BigRational::one();
        let mut m = vec![vec![BigRational::zero(); n]; n];
        for k in 1..=n {
            for i in 0..n {
                m[i][i] += &c[n + 1 - k];
            }
            let am = mat_mul(&a, &m);
            let tr: BigRational = (0..n).map(|i| am[i][i].clone()).sum();
            c[n - k] = -tr / BigRational::from_integer(BigInt::from(k));
            m = am;
        }
        c
    }

    pub fn inv(&self, x: &Element) -> Result<Element> {
        if x.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let mut rhs = vec![BigRational::zero(); self.degree()];
        rhs[0] = BigRational::one();
        let sol = solve(self.mul_matrix(x), rhs).ok_or(Error::DivisionByZero)?;
        Ok(Element { coeffs: sol })
    }

    pub fn div(&self, x: &Element, y: &Element) -> Result<Element> {
        Ok(self.mul(x, &self.inv(y)?))
    }

    /// Whether `x` is integral at every prime not dividing `allowed`.
    pub fn is_integral_away_from(&self, x: &Element, allowed: &BigInt) -> bool {
        self.char_poly(x).iter().all(|c| {
            let mut d = c.denom().clone();
            loop {
                let g = d.gcd(allowed);
                if g.is_one() {
                    break;
                }
                d /= g;
            }
            d.is_one()
        })
    }

    /// `x(r) mod m` for an integer `r`; `None` when a denominator of `x`
    /// is not invertible modulo `m`.
    pub fn eval_mod(&self, x: &Element, r: &BigInt, m: &BigInt) -> Option<BigInt> {
        let d = x.denominator();
        let num = x.numerator();
        let di = mod_inverse(&d.mod_floor(m), m)?;
        let mut acc = BigInt::zero();
        for c in num.iter().rev() {
            acc = (acc * r + c).mod_floor(m);
        }
        Some((acc * di).mod_floor(m))
    }
}

fn mat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    let mut out = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if !b[k][j].is_zero() {
                    out[i][j] += &a[i][k] * &b[k][j];
                }
            }
        }
    }
    out
}

/// Determinant by Gaussian elimination over `Q`.
pub fn det(mut a: Vec<Vec<BigRational>>) -> BigRational {
    let n = a.len();
    let mut d = BigRational::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return BigRational::zero();
        };
        if p != k {
            a.swap(p, k);
            d = -d;
        }
        let piv = a[k][k].clone();
        d *= &piv;
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &piv;
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
        }
    }
    d
}

/// Solve the square system `a x = b` over `Q`.
pub fn solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = a.len();
    for k in 0..n {
        let p = (k..n).find(|&i| !a[i][k].is_zero())?;
        a.swap(p, k);
        b.swap(p, k);
        let piv = a[k][k].clone();
        for i in 0..n {
            if i == k || a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &piv;
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
            let t = &f * &b[k];
            b[i] -= t;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

pub(crate) fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(m);
    if !e.gcd.abs().is_one() {
        return None;
    }
    Some((e.x * e.gcd.signum()).mod_floor(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn field(c: &[i64]) -> NumberField {
        NumberField::new(c.iter().map(|&x| BigInt::from(x)).collect()).unwrap()
    }

    #[test]
    fn quadratic_arithmetic() {
        // t^2 = -46
        let k = field(&[46, 0, 1]);
        let t = k.theta();
        assert_eq!(k.mul(&t, &t), k.from_int(-46));
        assert_eq!(k.norm(&t), q(46));
        let x = Element::from_ints(&[3, 1]);
        assert_eq!(k.norm(&x), q(9 + 46));
        let y = k.inv(&x).unwrap();
        assert_eq!(k.mul(&x, &y), k.one());
        assert_eq!(k.pow(&x, -2).unwrap(), k.mul(&y, &y));
    }

    #[test]
    fn cubic_char_poly() {
        // t^3 - 10 t + 1
        let k = field(&[1, -10, 0, 1]);
        let cp = k.char_poly(&k.theta());
        assert_eq!(cp, vec![q(1), q(-10), q(0), q(1)]);
        let x = Element::from_ints(&[1, 1, 0]);
        // norm(1 + t) = -f(-1) = -(−1 + 10 + 1)
        assert_eq!(k.norm(&x), q(-10));
        assert_eq!(k.trace(&x), q(3));
        assert!(k.is_integral_away_from(&x, &BigInt::from(2)));
        let half = k.scale(&x, &BigRational::new(1.into(), 2.into()));
        assert!(k.is_integral_away_from(&half, &BigInt::from(2)));
        assert!(!k.is_integral_away_from(&half, &BigInt::from(3)));
    }

    #[test]
    fn modular_evaluation() {
        let k = field(&[1, -10, 0, 1]);
        let x = Element::from_coeffs(vec![q(1), BigRational::new(1.into(), 2.into()), q(0)]);
        let m = BigInt::from(7);
        // 1 + 3/2 = 5/2 = 5 * 4 = 20 = 6 mod 7
        assert_eq!(k.eval_mod(&x, &BigInt::from(3), &m), Some(BigInt::from(6)));
        assert_eq!(k.eval_mod(&x, &BigInt::from(3), &BigInt::from(4)), None);
    }
}
