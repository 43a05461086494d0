//! Fixed-precision 2-adic numbers.
//!
//! A nonzero [`TwoAdic`] is `2^val * unit` where `unit` is an odd residue
//! known modulo `2^prec`. Every value carries its own precision, so the loss
//! caused by cancellation in a subtraction is visible in the result.
//!
//! The logarithm follows the Iwasawa normalization `Log(2) = Log(-1) = 0`,
//! which extends the usual series to all of `Q_2^x`.

use core::cmp::min;
use core::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest supported relative precision. Logarithms need eight guard bits
/// on top of the requested precision and everything lives in `u128`.
pub const MAX_PRECISION: u32 = 112;

#[inline]
pub(crate) fn mask(bits: u32) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

/// Inverse of an odd residue modulo `2^bits`.
pub(crate) fn inv_odd(u: u128, bits: u32) -> u128 {
    debug_assert!(u & 1 == 1);
    // Newton: each step doubles the number of correct bits.
    let mut x: u128 = u;
    for _ in 0..7 {
        x = x.wrapping_mul(2u128.wrapping_sub(u.wrapping_mul(x)));
    }
    x & mask(bits)
}

/// An element of `Q_2` at finite precision.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct TwoAdic {
    /// Valuation; for zero, the absolute precision (`i64::MAX` when exact).
    val: i64,
    /// Odd residue modulo `2^prec`, or 0 for zero.
    unit: u128,
    /// Relative precision in bits (0 for zero).
    prec: u32,
}

impl TwoAdic {
    pub const EXACT_ZERO: TwoAdic = TwoAdic { val: i64::MAX, unit: 0, prec: 0 };

    /// Zero known modulo `2^abs`.
    pub fn zero_mod(abs: i64) -> Self {
        TwoAdic { val: abs, unit: 0, prec: 0 }
    }

    /// `2^val * unit` with `unit` odd, reduced modulo `2^prec`.
    pub fn from_parts(val: i64, unit: u128, prec: u32) -> Self {
        assert!(unit & 1 == 1, "unit part must be odd");
        assert!(prec >= 1 && prec <= MAX_PRECISION, "precision out of range");
        TwoAdic { val, unit: unit & mask(prec), prec }
    }

    /// An integer given by its residue modulo `2^abs`.
    pub fn from_residue(r: u128, abs: u32) -> Self {
        let r = r & mask(abs);
        if r == 0 {
            return Self::zero_mod(abs as i64);
        }
        let t = r.trailing_zeros();
        TwoAdic { val: t as i64, unit: r >> t, prec: abs - t }
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::from_bigint(&BigInt::from(n), prec)
    }

    pub fn from_bigint(n: &BigInt, prec: u32) -> Self {
        if n.is_zero() {
            return Self::EXACT_ZERO;
        }
        let v = n.trailing_zeros().unwrap_or(0);
        let odd: BigInt = n >> v;
        let m = BigInt::from(1u8) << prec;
        let r = odd.mod_floor(&m);
        let unit = r.to_u128().expect("residue fits");
        Self::from_parts(v as i64, unit, prec)
    }

    pub fn from_ratio(q: &BigRational, prec: u32) -> Self {
        if q.is_zero() {
            return Self::EXACT_ZERO;
        }
        let n = Self::from_bigint(q.numer(), prec);
        let d = Self::from_bigint(q.denom(), prec);
        n.div(&d).expect("nonzero denominator")
    }

    pub fn is_zero(&self) -> bool {
        self.unit == 0
    }

    pub fn is_exact_zero(&self) -> bool {
        self.unit == 0 && self.val == i64::MAX
    }

    /// 2-adic valuation; zero has none.
    pub fn v2(&self) -> Result<i64> {
        if self.is_zero() {
            Err(Error::ValuationUndefined)
        } else {
            Ok(self.val)
        }
    }

    /// Lower bound on the valuation, valid for zero as well.
    pub fn min_val(&self) -> i64 {
        self.val
    }

    pub fn unit(&self) -> u128 {
        self.unit
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Number of bits known to the left of the binary point.
    pub fn abs_precision(&self) -> i64 {
        if self.is_zero() {
            self.val
        } else {
            self.val + self.prec as i64
        }
    }

    /// Drop precision down to at most `prec` relative bits.
    pub fn truncate(&self, prec: u32) -> Self {
        if self.is_zero() || prec >= self.prec {
            return *self;
        }
        TwoAdic { val: self.val, unit: self.unit & mask(prec), prec }
    }

    /// Value modulo `2^abs` for a 2-adic integer.
    pub fn residue(&self, abs: u32) -> Result<u128> {
        if self.is_zero() {
            if self.val < abs as i64 {
                return Err(Error::PrecisionExhausted { needed: abs as i64, available: self.val });
            }
            return Ok(0);
        }
        if self.val < 0 {
            return Err(Error::NonIntegralQuotient);
        }
        if self.abs_precision() < abs as i64 {
            return Err(Error::PrecisionExhausted {
                needed: abs as i64,
                available: self.abs_precision(),
            });
        }
        if self.val >= abs as i64 {
            return Ok(0);
        }
        Ok((self.unit << self.val) & mask(abs))
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        TwoAdic { val: self.val, unit: self.unit.wrapping_neg() & mask(self.prec), prec: self.prec }
    }

    pub fn mul(&self, other: &Self) -> Self {
        match (self.is_zero(), other.is_zero()) {
            (true, _) if self.is_exact_zero() => Self::EXACT_ZERO,
            (_, true) if other.is_exact_zero() => Self::EXACT_ZERO,
            (true, true) => Self::zero_mod(self.val.saturating_add(other.val)),
            (true, false) => Self::zero_mod(self.val.saturating_add(other.val)),
            (false, true) => Self::zero_mod(self.val.saturating_add(other.val)),
            (false, false) => {
                let prec = min(self.prec, other.prec);
                TwoAdic {
                    val: self.val + other.val,
                    unit: self.unit.wrapping_mul(other.unit) & mask(prec),
                    prec,
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_exact_zero() {
            return *other;
        }
        if other.is_exact_zero() {
            return *self;
        }
        let abs = min(self.abs_precision(), other.abs_precision());
        let v = min(self.val, other.val);
        if abs <= v {
            return Self::zero_mod(abs);
        }
        let width = (abs - v) as u32;
        debug_assert!(width <= 128);
        let lift = |x: &TwoAdic| -> u128 {
            if x.is_zero() {
                return 0;
            }
            let shift = x.val - v;
            if shift >= width as i64 {
                0
            } else {
                (x.unit << shift) & mask(width)
            }
        };
        let s = lift(self).wrapping_add(lift(other)) & mask(width);
        if s == 0 {
            return Self::zero_mod(abs);
        }
        let t = s.trailing_zeros();
        TwoAdic { val: v + t as i64, unit: s >> t, prec: width - t }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(TwoAdic { val: -self.val, unit: inv_odd(self.unit, self.prec), prec: self.prec })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    /// Quotient that is contractually a 2-adic integer.
    pub fn div_integral(&self, other: &Self) -> Result<Self> {
        let q = self.div(other)?;
        if !q.is_zero() && q.val < 0 {
            return Err(Error::NonIntegralQuotient);
        }
        Ok(q)
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = *self;
        let mut acc = TwoAdic::from_parts(0, 1, self.prec.max(1));
        if self.is_zero() {
            return if e == 0 { acc } else { self.mul(self) };
        }
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Agreement modulo `2^bits` (both must be known that far).
    pub fn eq_mod(&self, other: &Self, bits: i64) -> bool {
        self.sub(other).min_val() >= bits
    }

    /// `x = 2^n * u * s` with `u = 1 mod 4` and `s = +-1`.
    pub fn canonical_decompose(&self) -> Result<(i64, TwoAdic, i8)> {
        if self.is_zero() {
            return Err(Error::ValuationUndefined);
        }
        if self.prec < 2 {
            return Err(Error::PrecisionExhausted { needed: 2, available: self.prec as i64 });
        }
        let u = TwoAdic { val: 0, unit: self.unit, prec: self.prec };
        if self.unit & 3 == 1 {
            Ok((self.val, u, 1))
        } else {
            Ok((self.val, u.neg(), -1))
        }
    }

    /// Projection of `Q_2^x` onto `<-1>`.
    pub fn epsilon(&self) -> Result<i8> {
        Ok(self.canonical_decompose()?.2)
    }

    /// Iwasawa logarithm. The result is a 2-adic integer known to the same
    /// number of bits as the unit part of `self`.
    pub fn iwasawa_log(&self) -> Result<TwoAdic> {
        if self.is_zero() {
            return Err(Error::ValuationUndefined);
        }
        let p = self.prec;
        if p < 3 {
            return Err(Error::PrecisionExhausted { needed: 3, available: p as i64 });
        }
        let target = p + 1;
        // v2(n) <= 7 for every term we sum, so 8 guard bits suffice.
        let work = target + 8;
        let m = mask(work);
        let u = self.unit;
        let t = u.wrapping_mul(u).wrapping_sub(1) & mask(target);
        if t == 0 {
            return Ok(TwoAdic::zero_mod(p as i64));
        }
        let vt = t.trailing_zeros() as i64;
        let mut sum: u128 = 0;
        let mut power: u128 = 1;
        let mut n: u64 = 1;
        loop {
            let lg = 63 - n.leading_zeros() as i64;
            if vt * n as i64 - lg >= target as i64 {
                break;
            }
            power = power.wrapping_mul(t) & m;
            let k = n.trailing_zeros();
            let odd = (n >> k) as u128;
            let term = (power >> k).wrapping_mul(inv_odd(odd, work)) & m;
            if n % 2 == 1 {
                sum = sum.wrapping_add(term);
            } else {
                sum = sum.wrapping_sub(term);
            }
            n += 1;
        }
        let l = sum & mask(target);
        debug_assert!(l & 1 == 0);
        Ok(TwoAdic::from_residue(l >> 1, p))
    }

    /// Logarithm certified to at least `eta` absolute bits.
    pub fn log_to(&self, eta: u32) -> Result<TwoAdic> {
        if self.is_zero() {
            return Err(Error::ValuationUndefined);
        }
        if self.prec < eta {
            return Err(Error::PrecisionExhausted { needed: eta as i64, available: self.prec as i64 });
        }
        self.truncate(eta).iwasawa_log()
    }
}

impl fmt::Debug for TwoAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact_zero() {
            write!(f, "0")
        } else if self.is_zero() {
            write!(f, "O(2^{})", self.val)
        } else {
            write!(f, "2^{}*{}+O(2^{})", self.val, self.unit, self.abs_precision())
        }
    }
}

/// 2-adic valuation of a nonzero rational.
pub fn v2(q: &BigRational) -> Result<i64> {
    if q.is_zero() {
        return Err(Error::ValuationUndefined);
    }
    let a = q.numer().trailing_zeros().unwrap_or(0) as i64;
    let b = q.denom().trailing_zeros().unwrap_or(0) as i64;
    Ok(a - b)
}

/// 2-adic valuation of a nonzero integer.
pub fn v2_int(n: &BigInt) -> Result<i64> {
    if n.sign() == Sign::NoSign {
        return Err(Error::ValuationUndefined);
    }
    Ok(n.trailing_zeros().unwrap_or(0) as i64)
}

/// Adaptive precision schedule: start at `initial`, grow by `step` until
/// `stable` consecutive runs agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionPolicy {
    pub initial: u32,
    pub step: u32,
    pub stable: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { initial: 32, step: 16, stable: 2 }
    }
}

impl PrecisionPolicy {
    pub fn new(initial: u32, step: u32, stable: u32) -> Result<Self> {
        let p = PrecisionPolicy { initial, step, stable };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial < 8 {
            return Err(Error::InvalidPolicy("initial precision must be at least 8 bits"));
        }
        if self.step < 4 {
            return Err(Error::InvalidPolicy("growth step must be at least 4 bits"));
        }
        if self.stable < 2 {
            return Err(Error::InvalidPolicy("stabilization count must be at least 2"));
        }
        if self.initial > MAX_PRECISION {
            return Err(Error::InvalidPolicy("initial precision exceeds the supported maximum"));
        }
        Ok(())
    }

    /// The sequence of precisions tried, capped at the supported maximum.
    pub fn schedule(&self) -> impl Iterator<Item = u32> + '_ {
        let step = self.step;
        let mut cur = Some(self.initial);
        core::iter::from_fn(move || {
            let out = cur?;
            let next = out + step;
            cur = if next <= crate::MAX_WORKING_PRECISION { Some(next) } else { None };
            Some(out)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn valuations() {
        assert_eq!(v2(&q(8, 1)).unwrap(), 3);
        assert_eq!(v2(&q(5, 1)).unwrap(), 0);
        assert_eq!(v2(&q(12, 5)).unwrap(), 2);
        assert_eq!(v2(&q(0, 1)), Err(Error::ValuationUndefined));
        assert_eq!(TwoAdic::from_i64(-40, 32).v2().unwrap(), 3);
        assert_eq!(TwoAdic::EXACT_ZERO.v2(), Err(Error::ValuationUndefined));
    }

    #[test]
    fn decompose_examples() {
        let (n, u, s) = TwoAdic::from_i64(-1, 32).canonical_decompose().unwrap();
        assert_eq!((n, s), (0, -1));
        assert_eq!(u, TwoAdic::from_i64(1, 32));

        let (n, u, s) = TwoAdic::from_i64(3, 32).canonical_decompose().unwrap();
        assert_eq!((n, s), (0, -1));
        assert_eq!(u, TwoAdic::from_i64(-3, 32));
        assert_eq!(u.unit() & 3, 1);

        let (n, u, s) = TwoAdic::from_i64(20, 32).canonical_decompose().unwrap();
        assert_eq!((n, s), (2, 1));
        assert_eq!(u, TwoAdic::from_i64(5, 32));
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(TwoAdic::from_i64(5, 32).epsilon().unwrap(), 1);
        assert_eq!(TwoAdic::from_i64(7, 32).epsilon().unwrap(), -1);
        assert_eq!(TwoAdic::from_i64(2, 32).epsilon().unwrap(), 1);
        assert!(TwoAdic::EXACT_ZERO.epsilon().is_err());
    }

    #[test]
    fn log_basics() {
        assert!(TwoAdic::from_i64(1, 32).iwasawa_log().unwrap().is_zero());
        assert!(TwoAdic::from_i64(2, 32).iwasawa_log().unwrap().is_zero());
        assert!(TwoAdic::from_i64(-1, 32).iwasawa_log().unwrap().is_zero());
        assert_eq!(TwoAdic::from_i64(5, 32).iwasawa_log().unwrap().v2().unwrap(), 2);
        assert_eq!(TwoAdic::from_i64(7, 32).iwasawa_log().unwrap().v2().unwrap(), 3);
        assert!(TwoAdic::EXACT_ZERO.iwasawa_log().is_err());
        assert!(TwoAdic::from_i64(5, 16).log_to(32).is_err());
    }

    #[test]
    fn subtraction_loses_precision() {
        let a = TwoAdic::from_i64(1 + (1 << 20), 32);
        let b = TwoAdic::from_i64(1, 32);
        let d = a.sub(&b);
        assert_eq!(d.v2().unwrap(), 20);
        assert_eq!(d.abs_precision(), 32);
        assert_eq!(d.precision(), 12);
    }

    #[test]
    fn division_contract() {
        let a = TwoAdic::from_i64(12, 32);
        let b = TwoAdic::from_i64(4, 32);
        assert_eq!(a.div_integral(&b).unwrap(), TwoAdic::from_i64(3, 32));
        assert_eq!(TwoAdic::from_i64(2, 32).div_integral(&a).unwrap_err(), Error::NonIntegralQuotient);
        assert_eq!(a.div(&TwoAdic::EXACT_ZERO).unwrap_err(), Error::DivisionByZero);
    }

    #[test]
    fn rational_embedding() {
        let x = TwoAdic::from_ratio(&q(1, 3), 32);
        let three = TwoAdic::from_i64(3, 32);
        assert_eq!(x.mul(&three), TwoAdic::from_i64(1, 32));
        let y = TwoAdic::from_ratio(&q(3, 8), 32);
        assert_eq!(y.v2().unwrap(), -3);
    }

    #[test]
    fn policy_validation() {
        assert!(PrecisionPolicy::new(4, 16, 2).is_err());
        assert!(PrecisionPolicy::new(32, 2, 2).is_err());
        assert!(PrecisionPolicy::new(32, 16, 1).is_err());
        let p = PrecisionPolicy::default();
        let s: alloc::vec::Vec<u32> = p.schedule().take(3).collect();
        assert_eq!(s, [32, 48, 64]);
    }
}
