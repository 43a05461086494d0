//! Reader for `posdiv-field/1` files.
//!
//! Elements are coordinate vectors over the integral basis; rationals may be
//! written as JSON integers or as strings `"p/q"`. Integers that do not fit
//! in 64 bits are written as decimal strings.

use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Deserialize;

use posdiv_core::dyadic::TwoAdic;
use posdiv_core::fields::{ClassGenerator, DyadicPlace, Element, FieldData, LocalField, NumberField, OddPlace, PrimeDecomposition, RealPlace};
use posdiv_core::Error;

pub const FORMAT: &str = "posdiv-field/1";

/// Largest coordinate tried when searching for a generator of the roots of
/// unity.
const TORSION_SEARCH: i64 = 2;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed field file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported format {0:?}, expected {FORMAT:?}")]
    Format(String),
    #[error("bad number {0:?}")]
    Number(String),
    #[error("field data rejected: {0}")]
    Verify(#[from] Error),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Num {
    Int(i64),
    Big(u64),
    Text(String),
}

impl Num {
    fn rational(&self) -> Result<BigRational, IngestError> {
        match self {
            Num::Int(n) => Ok(BigRational::from_integer((*n).into())),
            Num::Big(n) => Ok(BigRational::from_integer((*n).into())),
            Num::Text(s) => {
                let bad = || IngestError::Number(s.clone());
                let (n, d) = match s.split_once('/') {
                    Some((n, d)) => (n.trim(), d.trim()),
                    None => (s.trim(), "1"),
                };
                let n = BigInt::from_str(n).map_err(|_| bad())?;
                let d = BigInt::from_str(d).map_err(|_| bad())?;
                if d.is_zero() {
                    return Err(bad());
                }
                Ok(BigRational::new(n, d))
            }
        }
    }

    fn integer(&self) -> Result<BigInt, IngestError> {
        let q = self.rational()?;
        if !q.is_integer() {
            return Err(IngestError::Number(format!("{q} is not an integer")));
        }
        Ok(q.to_integer())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassRecord {
    prime: u64,
    gens: (Num, Vec<Num>),
    order: u64,
    witness: Vec<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DyadicRecord {
    e: u32,
    f: u32,
    gens: (Num, Vec<Num>),
    local_factor: Vec<Num>,
    precision: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldRecord {
    format: String,
    poly: Vec<Num>,
    integral_basis: Vec<Vec<Num>>,
    signature: (usize, usize),
    disc: Num,
    class_group: Vec<ClassRecord>,
    two_units: Vec<Vec<Num>>,
    torsion_order: u32,
    dyadic_places: Vec<DyadicRecord>,
    real_roots: Vec<(Num, Num)>,
}

/// Read and verify a field file.
pub fn load_field(path: &Path) -> Result<FieldData, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    parse_field(&text)
}

/// Parse and verify the contents of a field file.
pub fn parse_field(text: &str) -> Result<FieldData, IngestError> {
    let rec: FieldRecord = serde_json::from_str(text)?;
    if rec.format != FORMAT {
        return Err(IngestError::Format(rec.format));
    }
    let poly: Vec<BigInt> = rec.poly.iter().map(Num::integer).collect::<Result<_, _>>()?;
    let field = NumberField::new(poly.clone())?;
    let n = field.degree();
    let invalid = |m: &str| IngestError::Verify(Error::InvalidField(m.into()));

    let basis: Vec<Element> = rec
        .integral_basis
        .iter()
        .map(|b| {
            let c: Vec<BigRational> = b.iter().map(Num::rational).collect::<Result<_, _>>()?;
            if c.len() > n {
                return Err(invalid("integral basis element has too many coefficients"));
            }
            Ok(field.reduce(c))
        })
        .collect::<Result<_, _>>()?;
    if basis.len() != n {
        return Err(invalid("integral basis has the wrong length"));
    }
    let disc = rec.disc.integer()?;
    check_discriminant(&field, &basis, &disc)?;

    let mut data = FieldData {
        label: poly_label(&poly),
        field: field.clone(),
        signature: rec.signature,
        disc,
        integral_basis: basis,
        class_group_type: None,
        class_group: Vec::new(),
        two_units: Vec::new(),
        torsion: field.from_int(-1),
        torsion_order: rec.torsion_order,
        dyadic_places: Vec::new(),
        real_places: Vec::new(),
    };
    let elem = |data: &FieldData, v: &[Num]| -> Result<Element, IngestError> {
        let coords: Vec<BigRational> = v.iter().map(Num::rational).collect::<Result<_, _>>()?;
        let den = coords.iter().fold(BigInt::one(), |acc, q| num_integer::lcm(acc, q.denom().clone()));
        let ints: Vec<BigInt> = coords.iter().map(|q| (q * BigRational::from_integer(den.clone())).to_integer()).collect();
        Ok(data.element_from_basis(&ints, &den)?)
    };

    data.two_units = rec.two_units.iter().map(|u| elem(&data, u)).collect::<Result<_, _>>()?;
    for q in &rec.dyadic_places {
        if q.precision < 8 || q.precision > posdiv_core::dyadic::MAX_PRECISION {
            return Err(invalid("dyadic precision out of range"));
        }
        let factor: Vec<TwoAdic> = q.local_factor.iter().map(|c| Ok(TwoAdic::from_bigint(&c.integer()?, q.precision))).collect::<Result<_, IngestError>>()?;
        let local = LocalField::new(factor, q.e, q.f)?;
        let gens = (q.gens.0.integer()?, elem(&data, &q.gens.1)?);
        data.dyadic_places.push(DyadicPlace { local, gens });
    }
    for g in &rec.class_group {
        let decomposition = PrimeDecomposition::new(&field, g.prime)?;
        let alpha = elem(&data, &g.gens.1)?;
        let slot = decomposition
            .locate(&field, &alpha)
            .ok_or_else(|| IngestError::Verify(Error::WitnessInvalid(format!("generator of the prime above {} is ambiguous", g.prime))))?;
        let place = OddPlace { decomposition, slot, gens: (g.gens.0.integer()?, alpha) };
        data.class_group.push(ClassGenerator { place, order: g.order, witness: elem(&data, &g.witness)? });
    }
    data.real_places = rec
        .real_roots
        .iter()
        .map(|(lo, hi)| Ok(RealPlace::new(lo.rational()?, hi.rational()?)))
        .collect::<Result<_, IngestError>>()?;
    data.torsion = torsion_generator(&data)?;
    data.verify()?;
    Ok(data)
}

/// `disc(poly) * det(B)^2` must equal the recorded discriminant.
fn check_discriminant(k: &NumberField, basis: &[Element], disc: &BigInt) -> Result<(), IngestError> {
    let n = k.degree();
    let theta = k.theta();
    let powers: Vec<Element> = (0..n).map(|i| k.pow(&theta, i as i64)).collect::<Result<_, _>>()?;
    let trace_form = |v: &[Element]| -> Vec<Vec<BigRational>> {
        v.iter().map(|x| v.iter().map(|y| k.trace(&k.mul(x, y))).collect()).collect()
    };
    let d_basis = posdiv_core::fields::rational_det(trace_form(basis));
    if d_basis != BigRational::from_integer(disc.clone()) {
        return Err(IngestError::Verify(Error::InvalidField(format!("discriminant of the integral basis is {d_basis}, file says {disc}"))));
    }
    let d_poly = posdiv_core::fields::rational_det(trace_form(&powers));
    let ratio = d_poly / d_basis;
    if !ratio.is_integer() {
        return Err(IngestError::Verify(Error::InvalidField("integral basis does not contain the equation order".into())));
    }
    Ok(())
}

/// A generator of the roots of unity of the recorded order among elements
/// with small integral-basis coordinates.
fn torsion_generator(data: &FieldData) -> Result<Element, IngestError> {
    let k = &data.field;
    let m = data.torsion_order;
    if m == 2 {
        return Ok(k.from_int(-1));
    }
    let n = data.integral_basis.len();
    let width = (2 * TORSION_SEARCH + 1) as usize;
    let total = width.pow(n as u32);
    for idx in 0..total {
        let mut t = idx;
        let coords: Vec<BigInt> = (0..n)
            .map(|_| {
                let c = (t % width) as i64 - TORSION_SEARCH;
                t /= width;
                BigInt::from(c)
            })
            .collect();
        let x = data.element_from_basis(&coords, &BigInt::one())?;
        if x.is_zero() || k.pow(&x, m as i64)? != k.one() {
            continue;
        }
        let primitive = (1..m).filter(|d| m % d == 0).all(|d| k.pow(&x, d as i64).is_ok_and(|y| y != k.one()));
        if primitive {
            return Ok(x);
        }
    }
    Err(IngestError::Verify(Error::InvalidField(format!("no root of unity of order {m} found"))))
}

/// `x^3 - 10x + 1` style rendering of an ascending coefficient list.
pub fn poly_label(poly: &[BigInt]) -> String {
    let mut out = String::new();
    for (i, c) in poly.iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let neg = c < &BigInt::zero();
        let a = if neg { -c } else { c.clone() };
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let coeff = if a.is_one() && i > 0 { String::new() } else { a.to_string() };
        out.push_str(&coeff);
        match i {
            0 => {}
            1 => out.push('x'),
            _ => out.push_str(&format!("x^{i}")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        let p: Vec<BigInt> = [1, -10, 0, 1].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(poly_label(&p), "x^3 - 10x + 1");
        let p: Vec<BigInt> = [46, 0, 1].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(poly_label(&p), "x^2 + 46");
    }

    #[test]
    fn numbers() {
        let n: Num = serde_json::from_str("\"-3/6\"").unwrap();
        assert_eq!(n.rational().unwrap(), BigRational::new((-1).into(), 2.into()));
        let n: Num = serde_json::from_str("18446744073709551615").unwrap();
        assert_eq!(n.integer().unwrap(), BigInt::from(u64::MAX));
        let n: Num = serde_json::from_str("\"1/0\"").unwrap();
        assert!(n.rational().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_field(r#"{"format": "posdiv-field/1", "extra": 1}"#).unwrap_err();
        assert!(matches!(err, IngestError::Parse(_)));
    }
}
