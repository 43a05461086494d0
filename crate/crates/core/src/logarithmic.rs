//! Logarithmic valuations, degrees, `div~` and the logarithmic class group.
//!
//! At an odd place `p` the logarithmic valuation is the ordinary one and
//! `deg p = Log Np`. At a dyadic place `q`, `deg q` is the value of
//! `-Log N_q` of minimal 2-valuation over generators of `F_q^x`, and
//! `v~_q(x) = -Log N_q(x) / deg q`.
//!
//! Divisors supported on a [`FactorBase`] are stored as residue vectors
//! modulo `2^eta`, which is what the class group computations consume.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::dyadic::{TwoAdic, MAX_PRECISION};
use crate::error::{Error, Result};
use crate::fields::{next_prime, Element, FieldData, OddPlace, PlaceRecord, PrimeDecomposition};
use crate::zlinalg::{AbelianGroupType, Cokernel, Mat2};

/// Odd primes scanned by [`primitive_divisor`] to confirm that the factor
/// base reaches the minimal degree valuation.
const PRIMITIVITY_SCAN: u64 = 200;

/// Trial division bound for the support of [`log_divisor`].
const TRIAL_LIMIT: u64 = 1 << 20;

/// A logarithmic divisor `sum a_p p` with 2-adic coefficients.
#[derive(Clone, Debug)]
pub struct Divisor {
    pub terms: Vec<(PlaceRecord, TwoAdic)>,
    pub degree: TwoAdic,
}

impl Divisor {
    pub fn coefficient(&self, p: &PlaceRecord) -> Option<&TwoAdic> {
        self.terms.iter().find(|(q, _)| q == p).map(|(_, a)| a)
    }
}

/// `deg p` for a finite place.
pub fn place_degree(f: &FieldData, p: &PlaceRecord) -> Result<TwoAdic> {
    match p {
        PlaceRecord::Odd(o) => odd_degree(o),
        PlaceRecord::Dyadic(i) => dyadic_degree(f, *i),
        _ => Err(Error::Inconsistent("infinite places carry no degree".into())),
    }
}

fn odd_degree(o: &OddPlace) -> Result<TwoAdic> {
    TwoAdic::from_bigint(&o.norm(), MAX_PRECISION).iwasawa_log()
}

fn dyadic_degree(f: &FieldData, i: usize) -> Result<TwoAdic> {
    let q = f.dyadic_places.get(i).ok_or_else(|| Error::Inconsistent(format!("no dyadic place {i}")))?;
    let mut best: Option<TwoAdic> = None;
    for g in q.local.generators() {
        let l = q.local.norm(&g).iwasawa_log()?.neg();
        if l.is_zero() {
            continue;
        }
        if best.as_ref().map_or(true, |b| l.v2().ok() < b.v2().ok()) {
            best = Some(l);
        }
    }
    best.ok_or(Error::PrecisionExhausted { needed: 3, available: 0 })
}

/// `v~_q(x) = -Log N_q(x) / deg q` from a precomputed local norm.
fn dyadic_log_valuation(norm: &TwoAdic, deg: &TwoAdic) -> Result<TwoAdic> {
    let l = norm.iwasawa_log()?.neg();
    l.div_integral(deg).map_err(|_| Error::Inconsistent("logarithmic valuation is not integral".into()))
}

/// `v~_p(x)`.
pub fn log_valuation(f: &FieldData, p: &PlaceRecord, x: &Element) -> Result<TwoAdic> {
    if x.is_zero() {
        return Err(Error::ValuationUndefined);
    }
    match p {
        PlaceRecord::Odd(o) => Ok(TwoAdic::from_i64(o.valuation(&f.field, x)?, MAX_PRECISION)),
        PlaceRecord::Dyadic(i) => dyadic_log_valuation(&f.local_norm(*i, x)?, &dyadic_degree(f, *i)?),
        _ => Err(Error::Inconsistent("infinite places carry no valuation".into())),
    }
}

fn small_factors(n: &BigInt, out: &mut Vec<u64>) -> Result<()> {
    let mut n = n.abs();
    while n.is_even() && !n.is_zero() {
        n >>= 1;
    }
    let mut p = 3u64;
    while !n.is_one() {
        if p > TRIAL_LIMIT {
            return Err(Error::UnsupportedLocal(format!("norm cofactor {n} not factored by trial division")));
        }
        if (&n % p).is_zero() {
            out.push(p);
            while (&n % p).is_zero() {
                n /= p;
            }
        }
        if BigInt::from(p) * BigInt::from(p) > n && !n.is_one() {
            let q = n.to_u64().filter(|&q| q <= TRIAL_LIMIT);
            let q = q.ok_or_else(|| Error::UnsupportedLocal(format!("prime factor {n} beyond the local search limit")))?;
            out.push(q);
            break;
        }
        p += 2;
    }
    Ok(())
}

/// `div~(x)` over its full support: every dyadic place and every odd
/// place dividing `x`.
pub fn log_divisor(f: &FieldData, x: &Element) -> Result<Divisor> {
    if x.is_zero() {
        return Err(Error::ValuationUndefined);
    }
    let k = &f.field;
    let norms = f.local_norms(x)?;
    let mut terms = Vec::new();
    let mut degree = TwoAdic::EXACT_ZERO;
    for (i, n) in norms.iter().enumerate() {
        let deg = dyadic_degree(f, i)?;
        let v = dyadic_log_valuation(n, &deg)?;
        degree = degree.add(&v.mul(&deg));
        if !v.is_zero() {
            terms.push((PlaceRecord::Dyadic(i), v));
        }
    }
    let nx = k.norm(x);
    let mut primes = Vec::new();
    small_factors(nx.numer(), &mut primes)?;
    small_factors(nx.denom(), &mut primes)?;
    let den = x.denominator();
    small_factors(&den, &mut primes)?;
    primes.sort_unstable();
    primes.dedup();
    for p in primes {
        let dec = PrimeDecomposition::new(k, p)?;
        for slot in dec.slots() {
            let v = dec.valuation(k, slot, x)?;
            if v == 0 {
                continue;
            }
            let place = OddPlace { decomposition: dec.clone(), slot, gens: (BigInt::from(p), k.zero()) };
            let a = TwoAdic::from_i64(v, MAX_PRECISION);
            degree = degree.add(&a.mul(&odd_degree(&place)?));
            terms.push((PlaceRecord::Odd(place), a));
        }
    }
    Ok(Divisor { terms, degree })
}

/// Dyadic places followed by the odd class-group generators, with their
/// degrees.
#[derive(Clone, Debug)]
pub struct FactorBase {
    pub places: Vec<PlaceRecord>,
    pub degrees: Vec<TwoAdic>,
}

impl FactorBase {
    pub fn new(f: &FieldData) -> Result<Self> {
        Self::with_dyadic_scaling(f, 1)
    }

    /// Same places with every dyadic degree multiplied by the odd integer
    /// `scale`.
    pub fn with_dyadic_scaling(f: &FieldData, scale: i64) -> Result<Self> {
        if scale % 2 == 0 {
            return Err(Error::Inconsistent("degree rescaling must use a 2-adic unit".into()));
        }
        let u = TwoAdic::from_i64(scale, MAX_PRECISION);
        let mut places = Vec::new();
        let mut degrees = Vec::new();
        for i in 0..f.s() {
            places.push(PlaceRecord::Dyadic(i));
            degrees.push(dyadic_degree(f, i)?.mul(&u));
        }
        for g in &f.class_group {
            degrees.push(odd_degree(&g.place)?);
            places.push(PlaceRecord::Odd(g.place.clone()));
        }
        Ok(FactorBase { places, degrees })
    }

    pub fn len(&self) -> usize {
        self.places.len()
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }

    pub fn degree_valuation(&self, c: usize) -> i64 {
        self.degrees[c].v2().unwrap_or(i64::MAX)
    }

    /// `v~` of `x` at every place of the factor base, checking that `x`
    /// has no support outside it.
    pub fn valuations(&self, f: &FieldData, x: &Element) -> Result<Vec<TwoAdic>> {
        let norms = f.local_norms(x)?;
        let mut out = Vec::with_capacity(self.len());
        let mut degree = TwoAdic::EXACT_ZERO;
        for (c, p) in self.places.iter().enumerate() {
            let v = match p {
                PlaceRecord::Dyadic(i) => dyadic_log_valuation(&norms[*i], &self.degrees[c])?,
                PlaceRecord::Odd(o) => TwoAdic::from_i64(o.valuation(&f.field, x)?, MAX_PRECISION),
                _ => unreachable!("factor bases hold finite places"),
            };
            degree = degree.add(&v.mul(&self.degrees[c]));
            out.push(v);
        }
        if !degree.is_zero() {
            return Err(Error::NotInSpan);
        }
        Ok(out)
    }

    /// `v~` residues modulo `2^eta`.
    pub fn row(&self, f: &FieldData, x: &Element, eta: u32) -> Result<Vec<u128>> {
        self.valuations(f, x)?.iter().map(|v| v.residue(eta)).collect()
    }

    /// `deg c / deg b` for every column `c`, modulo `2^eta`.
    fn ratios(&self, b: &TwoAdic, eta: u32) -> Result<Vec<u128>> {
        self.degrees
            .iter()
            .map(|d| d.div_integral(b).map_err(|_| Error::NoPrimitivePlace)?.residue(eta))
            .collect()
    }
}

/// A divisor whose degree has minimal 2-valuation among all divisors.
#[derive(Clone, Debug)]
pub struct PrimitiveDivisor {
    /// Coefficients over the factor base.
    pub coeffs: Vec<i64>,
    pub degree: TwoAdic,
}

impl PrimitiveDivisor {
    fn from_coeffs(fb: &FactorBase, coeffs: Vec<i64>) -> Self {
        let mut degree = TwoAdic::EXACT_ZERO;
        for (c, &a) in coeffs.iter().enumerate() {
            if a != 0 {
                degree = degree.add(&fb.degrees[c].mul(&TwoAdic::from_i64(a, MAX_PRECISION)));
            }
        }
        PrimitiveDivisor { coeffs, degree }
    }

    pub fn single_place(&self) -> Option<usize> {
        let nz: Vec<usize> = (0..self.coeffs.len()).filter(|&c| self.coeffs[c] != 0).collect();
        (nz.len() == 1 && self.coeffs[nz[0]] == 1).then(|| nz[0])
    }
}

/// Column of minimal `v2(deg)`, dyadic places first, then lowest index.
pub fn pivot_column(fb: &FactorBase) -> Result<usize> {
    (0..fb.len()).min_by_key(|&c| (fb.degree_valuation(c), c)).ok_or(Error::NoPrimitivePlace)
}

/// The primitive place of the factor base, as a divisor. Small odd primes
/// are scanned to confirm nothing outside the factor base has a degree of
/// smaller valuation.
pub fn primitive_divisor(f: &FieldData, fb: &FactorBase) -> Result<PrimitiveDivisor> {
    let b = pivot_column(fb)?;
    let vmin = fb.degree_valuation(b);
    if vmin < 2 {
        return Err(Error::Inconsistent(format!("degree valuation {vmin} below 2")));
    }
    let mut p = 2;
    while p < PRIMITIVITY_SCAN {
        p = next_prime(p);
        let Ok(dec) = PrimeDecomposition::new(&f.field, p) else { continue };
        if dec.rest.is_some_and(|(e, _)| e > 1) {
            continue;
        }
        for slot in dec.slots() {
            let n = BigInt::from(p).pow(dec.residue_degree(slot));
            let d = TwoAdic::from_bigint(&n, MAX_PRECISION).iwasawa_log()?;
            if d.v2().is_ok_and(|v| v < vmin) {
                return Err(Error::NoPrimitivePlace);
            }
        }
    }
    let mut coeffs = vec![0; fb.len()];
    coeffs[b] = 1;
    Ok(PrimitiveDivisor::from_coeffs(fb, coeffs))
}

/// A second primitive divisor: another place of minimal degree valuation
/// if there is one, otherwise `b + 2c` for the first other column `c`.
pub fn alternative_primitive_divisor(fb: &FactorBase) -> Result<PrimitiveDivisor> {
    let b = pivot_column(fb)?;
    let vmin = fb.degree_valuation(b);
    let mut coeffs = vec![0; fb.len()];
    if let Some(c) = (0..fb.len()).rev().find(|&c| c != b && fb.degree_valuation(c) == vmin) {
        coeffs[c] = 1;
    } else {
        coeffs[b] = 1;
        match (0..fb.len()).find(|&c| c != b) {
            Some(c) => coeffs[c] = 2,
            None => coeffs[b] = 3,
        }
    }
    Ok(PrimitiveDivisor::from_coeffs(fb, coeffs))
}

/// The logarithmic class group with the data needed to decompose
/// degree-zero divisors.
#[derive(Clone, Debug)]
pub struct LogClassGroup {
    pub eta: u32,
    pub factor_base: FactorBase,
    /// `div~` of the tracked elements (torsion, 2-units, witnesses) as rows.
    pub relations: Vec<Vec<u128>>,
    /// Column deleted to pass to degree zero.
    pub pivot: usize,
    pub pivot_valuation: i64,
    /// `deg c / deg(pivot)` per column.
    pub lambda: Vec<u128>,
    keep: Vec<usize>,
    cokernel: Cokernel,
    pub group_type: AbelianGroupType,
    /// Generators as full divisors over the factor base.
    pub generators: Vec<Vec<u128>>,
    /// `n_i` with `2^(n_i)` the order of generator `i`.
    pub exponents: Vec<u32>,
}

/// `Cl~` of `F` at working precision `eta`.
pub fn compute_log_class_group(f: &FieldData, fb: &FactorBase, eta: u32) -> Result<LogClassGroup> {
    let n = fb.len();
    let relations: Vec<Vec<u128>> = f.tracked_elements().iter().map(|x| fb.row(f, x, eta)).collect::<Result<_>>()?;
    let pivot = pivot_column(fb)?;
    let lambda = fb.ratios(&fb.degrees[pivot], eta)?;
    let keep: Vec<usize> = (0..n).filter(|&c| c != pivot).collect();
    let reduced: Vec<Vec<u128>> = relations.iter().map(|r| keep.iter().map(|&c| r[c]).collect()).collect();
    let cokernel = Cokernel::new(&Mat2::from_residue_rows(&reduced, keep.len(), eta)?);
    let group_type = cokernel.group_type()?;
    let mut g = LogClassGroup {
        eta,
        factor_base: fb.clone(),
        relations,
        pivot,
        pivot_valuation: fb.degree_valuation(pivot),
        lambda,
        keep,
        cokernel,
        group_type,
        generators: Vec::new(),
        exponents: Vec::new(),
    };
    for (k, (_, e)) in g.cokernel.factors().into_iter().enumerate() {
        let gen = g.cokernel.generator(k);
        g.generators.push(g.full_divisor(&gen));
        g.exponents.push(e);
    }
    Ok(g)
}

impl LogClassGroup {
    fn mask(&self) -> u128 {
        if self.eta >= 128 {
            u128::MAX
        } else {
            (1u128 << self.eta) - 1
        }
    }

    /// Extend coordinates on the non-pivot columns to a degree-zero divisor.
    fn full_divisor(&self, part: &[u128]) -> Vec<u128> {
        let m = self.mask();
        let mut full = vec![0u128; self.factor_base.len()];
        let mut total = 0u128;
        for (&c, &x) in self.keep.iter().zip(part) {
            full[c] = x & m;
            total = total.wrapping_add(x.wrapping_mul(self.lambda[c]));
        }
        full[self.pivot] = total.wrapping_neg() & m;
        full
    }

    /// `deg(D) / deg(pivot)` modulo `2^eta`.
    pub fn relative_degree(&self, d: &[u128]) -> u128 {
        d.iter().zip(&self.lambda).fold(0u128, |acc, (&x, &l)| acc.wrapping_add(x.wrapping_mul(l))) & self.mask()
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// Reassemble `sum y_j a_j + sum z_i div~(alpha_i)`.
    pub fn reassemble(&self, y: &[u128], z: &[u128]) -> Vec<u128> {
        let m = self.mask();
        let mut full = vec![0u128; self.factor_base.len()];
        for (zi, row) in z.iter().zip(&self.relations) {
            for (f, r) in full.iter_mut().zip(row) {
                *f = f.wrapping_add(zi.wrapping_mul(*r)) & m;
            }
        }
        for (yj, a) in y.iter().zip(&self.generators) {
            for (f, r) in full.iter_mut().zip(a) {
                *f = f.wrapping_add(yj.wrapping_mul(*r)) & m;
            }
        }
        full
    }
}

/// Write a degree-zero divisor `d` (over the factor base) as
/// `sum y_j a_j + div~(alpha)`, returning `y` and the exponent vector of
/// `alpha` over the tracked elements.
pub fn decompose_class(d: &[u128], g: &LogClassGroup) -> Result<(Vec<u128>, Vec<u128>)> {
    let m = g.mask();
    if d.len() != g.factor_base.len() {
        return Err(Error::MalformedMatrix("divisor length differs from the factor base"));
    }
    if g.relative_degree(d) != 0 {
        return Err(Error::Inconsistent("divisor of nonzero degree".into()));
    }
    let dk: Vec<u128> = g.keep.iter().map(|&c| d[c] & m).collect();
    let y = g.cokernel.coords(&dk);
    let mut rest = dk;
    for (j, &yj) in y.iter().enumerate() {
        let gen = g.cokernel.generator(j);
        for (r, gi) in rest.iter_mut().zip(gen) {
            *r = r.wrapping_sub(yj.wrapping_mul(gi)) & m;
        }
    }
    let z = g.cokernel.relation_combination(&rest).ok_or(Error::NotInSpan)?;
    let back = g.reassemble(&y, &z);
    if back.iter().zip(d).any(|(a, b)| (a.wrapping_sub(*b) & m) != 0) {
        return Err(Error::Inconsistent("class decomposition does not reassemble".into()));
    }
    Ok((y, z))
}

/// 2-part of `Cl / <dyadic classes>`.
pub fn compute_cl_prime(f: &FieldData) -> AbelianGroupType {
    f.cl_prime()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::quadratic_field;

    #[test]
    fn odd_degree_of_five() {
        let d = TwoAdic::from_i64(5, MAX_PRECISION).iwasawa_log().unwrap();
        assert_eq!(d.v2().unwrap(), 2);
    }

    #[test]
    fn dyadic_degrees_of_small_fields() {
        // Q(sqrt -46): ramified, completion Q_2(sqrt 2)
        let f = quadratic_field(-184).unwrap();
        let fb = FactorBase::new(&f).unwrap();
        assert_eq!(fb.degree_valuation(0), 3);
        assert_eq!(fb.degree_valuation(1), 2);
        assert_eq!(pivot_column(&fb).unwrap(), 1);
        // Q(sqrt 2) contains the first layer of the cyclotomic Z_2-extension
        let f = quadratic_field(8).unwrap();
        let fb = FactorBase::new(&f).unwrap();
        assert_eq!(fb.degree_valuation(0), 3);
        assert_eq!(primitive_divisor(&f, &fb).unwrap().degree.v2().unwrap(), 3);
    }

    #[test]
    fn sqrt_minus_46_divisor() {
        let f = quadratic_field(-184).unwrap();
        let x = f.field.theta();
        let d = log_divisor(&f, &x).unwrap();
        assert!(d.degree.is_zero());
        let odd: Vec<_> = d.terms.iter().filter(|(p, _)| matches!(p, PlaceRecord::Odd(_))).collect();
        assert_eq!(odd.len(), 1);
        let PlaceRecord::Odd(o) = &odd[0].0 else { unreachable!() };
        assert_eq!(o.p(), 23);
        assert_eq!(odd[0].1, TwoAdic::from_i64(1, MAX_PRECISION));
    }

    #[test]
    fn table_log_class_groups() {
        for (d, ty) in [(-184i64, "[ ]"), (-959, "[ 4,8 ]"), (904, "[ 2 ]"), (-799, "[ 2,4 ]")] {
            let f = quadratic_field(d).unwrap();
            let fb = FactorBase::new(&f).unwrap();
            let g = compute_log_class_group(&f, &fb, 64).unwrap();
            assert_eq!(alloc::format!("{}", g.group_type), ty, "d = {d}");
            assert_eq!(alloc::format!("{}", compute_cl_prime(&f)), match d {
                -184 => "[ 2 ]",
                -959 => "[ 4 ]",
                904 => "[ 4 ]",
                _ => "[ 2 ]",
            });
        }
    }

    #[test]
    fn decomposition_round_trip() {
        let f = quadratic_field(-959).unwrap();
        let fb = FactorBase::new(&f).unwrap();
        let g = compute_log_class_group(&f, &fb, 64).unwrap();
        for (j, a) in g.generators.iter().enumerate() {
            let (y, z) = decompose_class(a, &g).unwrap();
            for (i, &yi) in y.iter().enumerate() {
                assert_eq!(yi, u128::from(i == j));
            }
            assert!(z.iter().all(|&x| x == 0) || g.reassemble(&y, &z) == *a);
            let scaled: Vec<u128> = a.iter().map(|&x| (x << g.exponents[j]) & g.mask()).collect();
            let (y, _) = decompose_class(&scaled, &g).unwrap();
            assert!(y.iter().all(|&x| x == 0));
        }
        let mut bad = vec![0u128; fb.len()];
        bad[0] = 1;
        assert!(decompose_class(&bad, &g).is_err());
    }

    #[test]
    fn rescaled_degrees_give_same_group() {
        let f = quadratic_field(-799).unwrap();
        let a = compute_log_class_group(&f, &FactorBase::new(&f).unwrap(), 64).unwrap();
        let b = compute_log_class_group(&f, &FactorBase::with_dyadic_scaling(&f, 3).unwrap(), 64).unwrap();
        assert_eq!(a.group_type, b.group_type);
    }
}
