//! Sign functions and the classification of places into signed,
//! logarithmically signed and exceptional ones.

use alloc::vec::Vec;

use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::fields::{Element, FieldData, PlaceRecord};
use crate::logarithmic::{FactorBase, LogClassGroup};

/// Entries `+-1` aligned with [`PlaceClassification::pls_order`].
pub type SignVector = Vec<i8>;

/// `sg_p(x)`.
pub fn sg(f: &FieldData, p: &PlaceRecord, x: &Element) -> Result<i8> {
    if x.is_zero() {
        return Err(Error::ValuationUndefined);
    }
    match p {
        PlaceRecord::Complex(_) => Ok(1),
        PlaceRecord::Real(i) => {
            let place = f.real_places.get(*i).ok_or_else(|| Error::Inconsistent("no such real place".into()))?;
            place.sign(f.field.poly(), x)
        }
        PlaceRecord::Odd(o) => {
            let v = o.valuation(&f.field, x)?;
            let np3 = o.norm().mod_floor(&4u8.into()).to_u8() == Some(3);
            Ok(if np3 && v.is_odd() { -1 } else { 1 })
        }
        // the power of 2 in N q^(-v_q(x)) does not change epsilon
        PlaceRecord::Dyadic(i) => f.local_norm(*i, x)?.epsilon(),
    }
}

/// Classification of the dyadic places and the ordered set of
/// logarithmically signed places.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaceClassification {
    /// Per dyadic place: `i` is not in the completion.
    pub signed: Vec<bool>,
    /// Per dyadic place: logarithmically signed (hence exceptional).
    pub exceptional: Vec<bool>,
    /// Exceptional places by increasing `v2(deg)`, then the real places.
    pub pls_order: Vec<PlaceRecord>,
    /// Per factor-base column: signed but not logarithmically signed.
    pub signed_not_log: Vec<bool>,
    pub e: usize,
    pub m: usize,
}

impl PlaceClassification {
    /// Dyadic indices of the exceptional places in order.
    pub fn pe(&self) -> Vec<usize> {
        self.pls_order[..self.e]
            .iter()
            .map(|p| match p {
                PlaceRecord::Dyadic(i) => *i,
                _ => unreachable!("exceptional places are dyadic"),
            })
            .collect()
    }
}

/// Classify the places of `F`.
pub fn classify_places(f: &FieldData, g: &LogClassGroup) -> Result<PlaceClassification> {
    classify_with(f, &g.factor_base, g.eta)
}

pub(crate) fn classify_with(f: &FieldData, fb: &FactorBase, eta: u32) -> Result<PlaceClassification> {
    let mut signed = Vec::new();
    let mut exceptional = Vec::new();
    for (i, q) in f.dyadic_places.iter().enumerate() {
        let gens = q.local.generators();
        let norms: Vec<_> = gens.iter().map(|g| q.local.norm(g)).collect();
        let hensel = !q.local.has_sqrt_minus_one();
        let mut by_norms = false;
        for n in &norms {
            if n.epsilon().map_err(|_| Error::Undecidable { eta })? == -1 {
                by_norms = true;
            }
        }
        if hensel != by_norms {
            return Err(Error::Inconsistent(alloc::format!("signed test disagrees at dyadic place {i}")));
        }
        let mut pls = false;
        if hensel {
            for n in &norms {
                let l = n.iwasawa_log().map_err(|_| Error::Undecidable { eta })?.neg();
                let v = l.div_integral(&fb.degrees[i]).map_err(|_| Error::Inconsistent("local logarithmic valuation not integral".into()))?;
                let parity = v.residue(1).map_err(|_| Error::Undecidable { eta })?;
                let s = n.epsilon()? * if parity == 1 { -1 } else { 1 };
                if s == -1 {
                    pls = true;
                    break;
                }
            }
        }
        signed.push(hensel);
        exceptional.push(pls);
    }
    let mut pe: Vec<usize> = (0..f.s()).filter(|&i| exceptional[i]).collect();
    pe.sort_by_key(|&i| (fb.degree_valuation(i), i));
    let e = pe.len();
    let mut pls_order: Vec<PlaceRecord> = pe.into_iter().map(PlaceRecord::Dyadic).collect();
    pls_order.extend((0..f.r()).map(PlaceRecord::Real));
    let signed_not_log = fb
        .places
        .iter()
        .map(|p| match p {
            PlaceRecord::Dyadic(i) => signed[*i] && !exceptional[*i],
            PlaceRecord::Odd(o) => o.norm().mod_floor(&4u8.into()).to_u8() == Some(3),
            _ => false,
        })
        .collect();
    Ok(PlaceClassification { signed, exceptional, m: pls_order.len(), pls_order, signed_not_log, e })
}

/// `sg(x)` over the ordered logarithmically signed places.
pub fn sign_vector(f: &FieldData, c: &PlaceClassification, x: &Element) -> Result<SignVector> {
    c.pls_order.iter().map(|p| sg(f, p, x)).collect()
}

/// Sign vector of `prod alpha_i^(z_i)` from the generators' sign vectors.
pub fn sign_vector_of_exponents(gens: &[SignVector], z: &[u128], m: usize) -> SignVector {
    let mut v = alloc::vec![1i8; m];
    for (s, &zi) in gens.iter().zip(z) {
        if zi & 1 == 1 {
            for (a, b) in v.iter_mut().zip(s) {
                *a *= b;
            }
        }
    }
    v
}

/// `sg(a, e)` for a divisor `a` over the factor base (coefficients at the
/// exceptional places are irrelevant) and a sign vector `e`.
pub fn positive_sign_check(a: &[u128], e: &[i8], c: &PlaceClassification) -> i8 {
    let mut s: i8 = e.iter().product();
    for (&x, &snl) in a.iter().zip(&c.signed_not_log) {
        if snl && x & 1 == 1 {
            s = -s;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::quadratic_field;
    use crate::logarithmic::compute_log_class_group;

    fn classify(d: i64) -> (FieldData, PlaceClassification) {
        let f = quadratic_field(d).unwrap();
        let fb = FactorBase::new(&f).unwrap();
        let g = compute_log_class_group(&f, &fb, 64).unwrap();
        let c = classify_places(&f, &g).unwrap();
        (f, c)
    }

    #[test]
    fn gaussian_field_has_no_signed_dyadic_place() {
        let (_, c) = classify(-4);
        assert_eq!(c.signed, [false]);
        assert_eq!(c.e, 0);
    }

    #[test]
    fn exceptional_counts() {
        for (d, s, e) in [(-184i64, 1, 1), (29665, 2, 2), (-399, 2, 2), (776, 1, 1), (34689, 2, 2)] {
            let (f, c) = classify(d);
            assert_eq!((f.s(), c.e), (s, e), "d = {d}");
            assert_eq!(c.m, c.e + f.r());
        }
    }

    #[test]
    fn minus_one_signs() {
        let (f, c) = classify(776);
        let v = sign_vector(&f, &c, &f.field.from_int(-1)).unwrap();
        // the dyadic completion is Q_2(sqrt 2), where N(-1) = 1
        assert_eq!(v, [1, -1, -1]);
    }

    #[test]
    fn rational_three_at_two() {
        let f = quadratic_field(-184).unwrap();
        // N_q(3) = 9 for the ramified place
        assert_eq!(sg(&f, &PlaceRecord::Dyadic(0), &f.field.from_int(3)).unwrap(), 1);
        let f = quadratic_field(-3).unwrap();
        assert_eq!(sg(&f, &PlaceRecord::Dyadic(0), &f.field.from_int(3)).unwrap(), 1);
        let x = f.field.theta();
        assert_eq!(sg(&f, &PlaceRecord::Complex(0), &x).unwrap(), 1);
    }

    #[test]
    fn sign_check_examples() {
        let (f, c) = classify(-184);
        let fb = FactorBase::new(&f).unwrap();
        let zero = alloc::vec![0u128; fb.len()];
        assert_eq!(positive_sign_check(&zero, &alloc::vec![1; c.m], &c), 1);
        if let Some(k) = c.signed_not_log.iter().position(|&b| b) {
            let mut a = zero.clone();
            a[k] = 1;
            assert_eq!(positive_sign_check(&a, &alloc::vec![1; c.m], &c), -1);
        }
    }
}
