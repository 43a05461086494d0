//! Number fields as consumed by the rest of the crate.
//!
//! A [`FieldData`] bundles everything the logarithmic and positive class
//! group computations need: the 2-units, generators of the part of the
//! class group prime to the dyadic classes together with principality
//! witnesses, the dyadic completions and the real embeddings. Quadratic
//! fields are built by [`quadratic_field`]; other fields are assembled by
//! a caller and checked with [`FieldData::verify`].

mod element;
mod local;
mod padic;
mod quadratic;
mod real;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub use element::{det as rational_det, Element, NumberField};
pub use local::{exact_factor, factors_multiply_to, unramified_factors, LocalElem, LocalField, FACTOR_PRECISION};
pub use padic::{is_prime, next_prime, vp, PrimeDecomposition, PrimeSlot};
pub use quadratic::{is_fundamental_discriminant, quadratic_field, QuadraticEngine};
pub use real::{count_real_roots, verify_isolation, RealPlace};

use crate::dyadic::{TwoAdic, MAX_PRECISION};
use crate::error::{Error, Result};
use crate::zlinalg::AbelianGroupType;

/// A prime above 2 with its completion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicPlace {
    pub local: LocalField,
    /// Two-element representation `(2, alpha)`.
    pub gens: (BigInt, Element),
}

impl DyadicPlace {
    pub fn e(&self) -> u32 {
        self.local.ramification()
    }

    pub fn f(&self) -> u32 {
        self.local.residue_degree()
    }
}

/// A prime above an odd rational prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddPlace {
    pub decomposition: PrimeDecomposition,
    pub slot: PrimeSlot,
    /// Two-element representation `(p, alpha)`.
    pub gens: (BigInt, Element),
}

impl OddPlace {
    pub fn p(&self) -> u64 {
        self.decomposition.p
    }

    pub fn e(&self) -> u32 {
        self.decomposition.ramification(self.slot)
    }

    pub fn f(&self) -> u32 {
        self.decomposition.residue_degree(self.slot)
    }

    /// Absolute norm `p^f`.
    pub fn norm(&self) -> BigInt {
        BigInt::from(self.p()).pow(self.f())
    }

    pub fn valuation(&self, k: &NumberField, x: &Element) -> Result<i64> {
        self.decomposition.valuation(k, self.slot, x)
    }
}

/// Any place of a field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlaceRecord {
    Real(usize),
    Complex(usize),
    Dyadic(usize),
    Odd(OddPlace),
}

/// A prime whose class generates a cyclic factor of the class group modulo
/// the dyadic classes, with `order` the order of that class and `witness`
/// a generator of `p^order` times a product of dyadic primes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassGenerator {
    pub place: OddPlace,
    pub order: u64,
    pub witness: Element,
}

#[derive(Clone, Debug)]
pub struct FieldData {
    pub label: String,
    pub field: NumberField,
    pub signature: (usize, usize),
    pub disc: BigInt,
    pub integral_basis: Vec<Element>,
    /// Invariant factors of the full class group, when known.
    pub class_group_type: Option<Vec<u64>>,
    pub class_group: Vec<ClassGenerator>,
    pub two_units: Vec<Element>,
    pub torsion: Element,
    pub torsion_order: u32,
    pub dyadic_places: Vec<DyadicPlace>,
    pub real_places: Vec<RealPlace>,
}

impl FieldData {
    pub fn degree(&self) -> usize {
        self.field.degree()
    }

    pub fn r(&self) -> usize {
        self.signature.0
    }

    pub fn c(&self) -> usize {
        self.signature.1
    }

    pub fn s(&self) -> usize {
        self.dyadic_places.len()
    }

    /// Element with coordinates `coords / denom` over the integral basis.
    pub fn element_from_basis(&self, coords: &[BigInt], denom: &BigInt) -> Result<Element> {
        if coords.len() != self.integral_basis.len() || denom.is_zero() {
            return Err(Error::InvalidField("element vector does not match the integral basis".into()));
        }
        let k = &self.field;
        let mut x = k.zero();
        for (c, b) in coords.iter().zip(&self.integral_basis) {
            x = k.add(&x, &k.scale(b, &BigRational::from_integer(c.clone())));
        }
        Ok(k.scale(&x, &BigRational::new(BigInt::one(), denom.clone())))
    }

    /// 2-part of the class group modulo the dyadic classes, read off the
    /// orders of the recorded generators.
    pub fn cl_prime(&self) -> AbelianGroupType {
        let exps: Vec<u32> = self.class_group.iter().map(|g| g.order.trailing_zeros()).collect();
        AbelianGroupType::from_exponents(&exps)
    }

    /// Torsion, 2-units and principality witnesses, in that order.
    pub fn tracked_elements(&self) -> Vec<Element> {
        let mut v = vec![self.torsion.clone()];
        v.extend(self.two_units.iter().cloned());
        v.extend(self.class_group.iter().map(|g| g.witness.clone()));
        v
    }

    /// `N_(F_q/Q_2)(x)` at the `i`-th dyadic place. When the direct
    /// evaluation loses bits to cancellation, the norm is recovered from the
    /// global norm and the other completions instead.
    pub fn local_norm(&self, i: usize, x: &Element) -> Result<TwoAdic> {
        Ok(self.local_norms(x)?.swap_remove(i))
    }

    /// Local norms at all dyadic places.
    pub fn local_norms(&self, x: &Element) -> Result<Vec<TwoAdic>> {
        if x.is_zero() {
            return Err(Error::ValuationUndefined);
        }
        let direct: Vec<TwoAdic> = self.dyadic_places.iter().map(|q| q.local.norm(&q.local.embed(x))).collect();
        let global = TwoAdic::from_ratio(&self.field.norm(x), MAX_PRECISION);
        let mut out = Vec::with_capacity(direct.len());
        for i in 0..direct.len() {
            let mut ind = global;
            let mut ok = true;
            for (j, d) in direct.iter().enumerate() {
                if j != i {
                    match ind.div(d) {
                        Ok(v) => ind = v,
                        Err(_) => ok = false,
                    }
                }
            }
            let best = if ok && (direct[i].is_zero() || ind.precision() > direct[i].precision()) { ind } else { direct[i] };
            if best.is_zero() {
                return Err(Error::PrecisionExhausted { needed: 1, available: 0 });
            }
            out.push(best);
        }
        Ok(out)
    }

    /// Normalized valuation at the `i`-th dyadic place.
    pub fn dyadic_valuation(&self, i: usize, x: &Element) -> Result<i64> {
        let v = self.local_norm(i, x)?.v2()?;
        let f = self.dyadic_places[i].f() as i64;
        if v % f != 0 {
            return Err(Error::Inconsistent(format!("norm valuation {v} at a place of residue degree {f}")));
        }
        Ok(v / f)
    }

    /// Signs of `x` at the real places, in their fixed order.
    pub fn real_signs(&self, x: &Element) -> Result<Vec<i8>> {
        self.real_places.iter().map(|p| p.sign(self.field.poly(), x)).collect()
    }

    /// Re-verify every recorded invariant. Errors are named after the
    /// failing check.
    pub fn verify(&self) -> Result<()> {
        let n = self.degree();
        let (r, c) = self.signature;
        if r + 2 * c != n {
            return Err(Error::InvalidField(format!("signature ({r}, {c}) does not match degree {n}")));
        }
        if self.integral_basis.len() != n {
            return Err(Error::InvalidField("integral basis has the wrong length".into()));
        }
        verify_isolation(self.field.poly(), &self.real_places)?;
        self.verify_dyadic()?;
        self.verify_torsion()?;
        self.verify_units()?;
        for g in &self.class_group {
            self.verify_witness(g)?;
        }
        Ok(())
    }

    fn verify_dyadic(&self) -> Result<()> {
        let n = self.degree();
        let total: u32 = self.dyadic_places.iter().map(|q| q.e() * q.f()).sum();
        if total as usize != n {
            return Err(Error::LocalFactorMismatch(format!("sum of e*f over dyadic places is {total}, degree is {n}")));
        }
        let factors: Vec<Vec<TwoAdic>> = self.dyadic_places.iter().map(|q| q.local.factor().to_vec()).collect();
        let bits = factors.iter().flatten().map(|c| c.abs_precision().clamp(0, 112) as u32).min().unwrap_or(112).min(64);
        if !factors_multiply_to(self.field.poly(), &factors, bits) {
            return Err(Error::LocalFactorMismatch("local factors do not multiply to the defining polynomial".into()));
        }
        if let Ok(ours) = unramified_factors(self.field.poly(), FACTOR_PRECISION) {
            for q in &self.dyadic_places {
                let hit = ours.iter().any(|(g, _, _)| {
                    g.len() == q.local.factor().len() && g.iter().zip(q.local.factor()).all(|(a, b)| a.eq_mod(b, bits as i64))
                });
                if !hit {
                    return Err(Error::LocalFactorMismatch("local factor disagrees with Hensel refactorization".into()));
                }
            }
        }
        for (i, q) in self.dyadic_places.iter().enumerate() {
            if self.dyadic_valuation(i, &q.gens.1).map_or(true, |v| v <= 0) && !q.gens.1.is_zero() {
                return Err(Error::LocalFactorMismatch("two-element generator does not lie in its prime".into()));
            }
        }
        Ok(())
    }

    fn verify_torsion(&self) -> Result<()> {
        let k = &self.field;
        let m = self.torsion_order as i64;
        if m < 2 || m % 2 != 0 {
            return Err(Error::InvalidField("torsion order must be even".into()));
        }
        if k.pow(&self.torsion, m)? != k.one() {
            return Err(Error::InvalidField("torsion generator has the wrong order".into()));
        }
        for l in 2..=m {
            if m % l == 0 && is_prime(l as u64) && k.pow(&self.torsion, m / l)? == k.one() {
                return Err(Error::InvalidField("torsion generator has smaller order".into()));
            }
        }
        Ok(())
    }

    fn verify_units(&self) -> Result<()> {
        let expected = self.r() + self.c() - 1 + self.s();
        if self.two_units.len() != expected {
            return Err(Error::UnitRankMismatch { expected, got: self.two_units.len() });
        }
        let k = &self.field;
        let two = BigInt::from(2);
        for u in &self.two_units {
            let nm = k.norm(u);
            let pure = |z: &BigInt| {
                let z = z.abs();
                let t = z.trailing_zeros().unwrap_or(0);
                (z >> t).is_one()
            };
            if nm.is_zero() || !pure(nm.numer()) || !pure(nm.denom()) || !k.is_integral_away_from(u, &two) {
                return Err(Error::InvalidField("2-unit generator is not a unit away from 2".into()));
            }
        }
        let mut elems = vec![self.torsion.clone()];
        elems.extend(self.two_units.iter().cloned());
        let rank = self.square_class_rank(&elems);
        if rank != elems.len() {
            return Err(Error::UnitRankMismatch { expected: elems.len(), got: rank });
        }
        Ok(())
    }

    /// F_2-rank of the images of `elems` (S-units for S above 2) in
    /// `F^x / F^x2`, detected by quadratic characters at auxiliary
    /// degree-one primes. A full rank certifies independence modulo torsion
    /// and that the generated group has odd index in its 2-saturation.
    pub fn square_class_rank(&self, elems: &[Element]) -> usize {
        let k = &self.field;
        let target = elems.len();
        let mut basis: Vec<u128> = Vec::new();
        let mut p = 2u64;
        let mut tried = 0;
        while basis.len() < target && tried < 4000 {
            p = next_prime(p);
            tried += 1;
            let Ok(dec) = PrimeDecomposition::new(k, p) else { continue };
            for &root in &dec.roots {
                let mut bits = 0u128;
                let mut ok = true;
                for (j, x) in elems.iter().enumerate() {
                    match padic::quadratic_character(k, p, root, x) {
                        Some(-1) => bits |= 1 << j,
                        Some(_) => {}
                        None => ok = false,
                    }
                }
                if ok {
                    insert_f2(&mut basis, bits);
                }
            }
        }
        basis.len()
    }

    fn verify_witness(&self, g: &ClassGenerator) -> Result<()> {
        let k = &self.field;
        let w = &g.witness;
        let p = g.place.p();
        let bad = |m: &str| Error::WitnessInvalid(format!("prime {p}: {m}"));
        if w.is_zero() || g.order == 0 {
            return Err(bad("zero witness or order"));
        }
        if !k.is_integral_away_from(w, &BigInt::from(2)) {
            return Err(bad("witness is not integral away from 2"));
        }
        let nm = k.norm(w);
        let mut num = nm.numer().abs();
        num >>= num.trailing_zeros().unwrap_or(0);
        let expect = BigInt::from(p).pow(g.place.f() * g.order as u32);
        if num != expect {
            return Err(bad("norm is not the expected prime power times a power of 2"));
        }
        if g.place.valuation(k, w)? != g.order as i64 {
            return Err(bad("valuation at the prime differs from the recorded order"));
        }
        if g.place.valuation(k, &g.place.gens.1).map_or(true, |v| v <= 0) && !g.place.gens.1.is_zero() {
            return Err(bad("two-element generator does not lie in the prime"));
        }
        Ok(())
    }
}

fn insert_f2(basis: &mut Vec<u128>, mut x: u128) {
    for &b in basis.iter() {
        let hb = 127 - b.leading_zeros();
        if x >> hb & 1 == 1 {
            x ^= b;
        }
    }
    if x != 0 {
        basis.push(x);
        basis.sort_by(|a, b| b.cmp(a));
    }
}
