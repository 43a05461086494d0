//! End-to-end analysis of one field under an adaptive precision schedule.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};

use crate::dyadic::{PrecisionPolicy, TwoAdic, MAX_PRECISION};
use crate::error::{Error, Result};
use crate::fields::{Element, FieldData, PlaceRecord};
use crate::logarithmic::{
    alternative_primitive_divisor, compute_cl_prime, compute_log_class_group, log_divisor, log_valuation, primitive_divisor, FactorBase,
};
use crate::positive::{
    compute_cl_pos, compute_cl_pos_deg0, deduce_wk2, exceptional_units, field_primitivity, positive_units, tracked_signs, wild_kernel_rank,
    Deg0Result, TheoremCase, Wk2Deduction,
};
use crate::signatures::{classify_places, sg, PlaceClassification};
use crate::zlinalg::AbelianGroupType;
use crate::MAX_WORKING_PRECISION;

/// Which primitive divisor `b` to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PrimitiveChoice {
    #[default]
    Standard,
    /// Another place of minimal degree valuation, or `b + 2c`.
    Alternative,
}

/// Tame kernel data for the wild kernel deduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct K2Data {
    /// Invariant factors of `K_2 O_F`.
    pub orders: Vec<u64>,
    /// `(K_2 O_F : WK_2(F))`.
    pub index: u64,
}

#[derive(Clone, Debug, Default)]
pub struct AnalysisOptions {
    pub policy: PrecisionPolicy,
    pub primitive: PrimitiveChoice,
    /// Odd factor applied to every dyadic degree; 1 leaves degrees alone.
    pub dyadic_scale: Option<i64>,
    pub k2: Option<K2Data>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Analysis {
    pub label: String,
    pub degree: usize,
    pub class_group: Option<Vec<u64>>,
    /// `|P|`, the number of dyadic places.
    pub dyadic: usize,
    /// `|PE|`.
    pub exceptional: usize,
    pub signed: usize,
    pub cl_prime: AbelianGroupType,
    pub cl_tilde: AbelianGroupType,
    pub cl_pos: Option<AbelianGroupType>,
    pub cl_pos_oracle: Option<AbelianGroupType>,
    pub cl_pos_deg0: Option<Deg0Result>,
    pub positive_unit_index: Option<u64>,
    pub rk2: Option<usize>,
    pub case: TheoremCase,
    pub primitive: Option<bool>,
    pub wk2: Option<Wk2Deduction>,
    /// Working precision of the reported run.
    pub precision: u32,
}

impl Analysis {
    fn invariants(&self) -> impl PartialEq + '_ {
        (
            self.exceptional,
            self.signed,
            &self.cl_tilde,
            &self.cl_pos,
            &self.cl_pos_oracle,
            &self.cl_pos_deg0,
            self.rk2,
            self.primitive,
        )
    }
}

/// Run the pipeline once at working precision `eta`.
pub fn analyze_at(f: &FieldData, options: &AnalysisOptions, eta: u32) -> Result<Analysis> {
    let fb = match options.dyadic_scale {
        Some(k) => FactorBase::with_dyadic_scaling(f, k)?,
        None => FactorBase::new(f)?,
    };
    let g = compute_log_class_group(f, &fb, eta)?;
    let c = classify_places(f, &g)?;
    let mut out = Analysis {
        label: f.label.clone(),
        degree: f.degree(),
        class_group: f.class_group_type.clone(),
        dyadic: f.s(),
        exceptional: c.e,
        signed: c.m,
        cl_prime: compute_cl_prime(f),
        cl_tilde: g.group_type.clone(),
        cl_pos: None,
        cl_pos_oracle: None,
        cl_pos_deg0: None,
        positive_unit_index: None,
        rk2: None,
        case: TheoremCase::NarrowRequired,
        primitive: None,
        wk2: None,
        precision: eta,
    };
    if c.e > 0 {
        let signs = tracked_signs(f, &c)?;
        let exc = exceptional_units(f, &g, &c, &signs)?;
        let b = match options.primitive {
            PrimitiveChoice::Standard => primitive_divisor(f, &fb)?,
            PrimitiveChoice::Alternative => alternative_primitive_divisor(&fb)?,
        };
        let pos = compute_cl_pos(&g, &c, &exc, &signs, &b)?;
        let deg0 = compute_cl_pos_deg0(&pos)?;
        out.positive_unit_index = Some(positive_units(&exc).index);
        out.primitive = Some(field_primitivity(f, &c, &fb)?);
        out.cl_pos_oracle = Some(pos.oracle_type.clone());
        out.cl_pos = Some(pos.group_type);
        out.cl_pos_deg0 = Some(deg0);
    }
    let (rk2, case) = wild_kernel_rank(&c, &out.cl_tilde, out.cl_pos.as_ref());
    out.rk2 = rk2;
    out.case = case;
    if let (Some(k2), Some(rk2)) = (&options.k2, rk2) {
        let primitive = out.primitive.unwrap_or(true);
        let cmp = match (&out.cl_pos_deg0, &out.cl_pos) {
            (Some(d), Some(p)) => d.group_type.rank().cmp(&p.rank()),
            _ => core::cmp::Ordering::Equal,
        };
        out.wk2 = Some(deduce_wk2(&k2.orders, k2.index, rk2, primitive, cmp)?);
    }
    Ok(out)
}

fn retryable(e: &Error) -> bool {
    matches!(
        e,
        Error::InfiniteAtPrecision { .. } | Error::Undecidable { .. } | Error::PrecisionExhausted { .. } | Error::UnitRankMismatch { .. }
    )
}

/// Run the pipeline, growing the precision until `policy.stable`
/// consecutive runs agree on every reported invariant.
pub fn analyze(f: &FieldData, options: &AnalysisOptions) -> Result<Analysis> {
    let policy = options.policy;
    policy.validate()?;
    let mut eta = policy.initial.min(MAX_WORKING_PRECISION);
    let mut streak: Vec<Analysis> = Vec::new();
    let mut last_err: Option<Error>;
    loop {
        match analyze_at(f, options, eta) {
            Ok(a) => {
                last_err = None;
                if streak.last().is_some_and(|p| p.invariants() != a.invariants()) {
                    streak.clear();
                }
                streak.push(a);
                if streak.len() >= policy.stable as usize {
                    return Ok(streak.swap_remove(0));
                }
            }
            Err(e) if retryable(&e) => {
                streak.clear();
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
        if eta >= MAX_WORKING_PRECISION {
            break;
        }
        eta = (eta + policy.step).min(MAX_WORKING_PRECISION);
    }
    Err(match last_err {
        Some(Error::InfiniteAtPrecision { eta }) => Error::GrossViolation { eta, detail: "a class group stays unbounded".into() },
        Some(Error::UnitRankMismatch { expected, got }) => {
            Error::GrossViolation { eta, detail: format!("exceptional unit rank {got}, expected {expected}") }
        }
        Some(e) => e,
        None => Error::Undecidable { eta },
    })
}

/// The per-element identities behind the positive class group.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ElementChecks {
    /// `sum v~_p(x) deg p = 0` over the full support.
    pub degree_sum: bool,
    /// `deg div~(x) = 0` from the global norm and the local norms at 2.
    pub degree_norm: bool,
    /// `prod sg_p(x) = 1` over all places.
    pub sign_product: bool,
    /// `sg_p(x) = (-1)^v~_p(x)` on signed places that are not
    /// logarithmically signed, and `sg_p(x) = 1` off the signed places.
    pub signed_places: bool,
    /// The principal pair of `x` is positive.
    pub principal_positive: bool,
}

impl ElementChecks {
    pub fn all(&self) -> bool {
        self.degree_sum && self.degree_norm && self.sign_product && self.signed_places && self.principal_positive
    }
}

fn parity(v: &TwoAdic) -> Result<bool> {
    Ok(v.residue(1)? == 1)
}

/// Evaluate [`ElementChecks`] for `x`; degrees are compared to within two
/// bits of `eta`.
pub fn check_element(f: &FieldData, c: &PlaceClassification, x: &Element, eta: u32) -> Result<ElementChecks> {
    let tol = i64::from(eta.saturating_sub(2));
    let div = log_divisor(f, x)?;
    let degree_sum = div.degree.eq_mod(&TwoAdic::EXACT_ZERO, tol);

    let n = f.field.norm(x);
    let odd = |z: &num_bigint::BigInt| {
        let z = z.abs();
        let t = z.trailing_zeros().unwrap_or(0);
        z >> t
    };
    let log_abs = TwoAdic::from_bigint(&odd(n.numer()), MAX_PRECISION)
        .iwasawa_log()?
        .sub(&TwoAdic::from_bigint(&odd(n.denom()), MAX_PRECISION).iwasawa_log()?);
    let mut local = TwoAdic::EXACT_ZERO;
    for ni in f.local_norms(x)? {
        local = local.add(&ni.iwasawa_log()?);
    }
    let degree_norm = log_abs.sub(&local).eq_mod(&TwoAdic::EXACT_ZERO, tol);

    let mut places: Vec<PlaceRecord> = (0..f.r()).map(PlaceRecord::Real).collect();
    places.extend((0..f.c()).map(PlaceRecord::Complex));
    places.extend((0..f.s()).map(PlaceRecord::Dyadic));
    places.extend(div.terms.iter().filter(|(p, _)| matches!(p, PlaceRecord::Odd(_))).map(|(p, _)| p.clone()));

    let mut product = 1i8;
    let mut signed_places = true;
    let mut positive = 1i8;
    for p in &places {
        let s = sg(f, p, x)?;
        product *= s;
        let (in_ps, in_pls) = match p {
            PlaceRecord::Real(_) => (true, true),
            PlaceRecord::Complex(_) => (false, false),
            PlaceRecord::Dyadic(i) => (c.signed[*i], c.exceptional[*i]),
            PlaceRecord::Odd(o) => (o.norm().mod_floor(&4u8.into()).to_u8() == Some(3), false),
        };
        if in_pls {
            positive *= s;
        } else if in_ps {
            let v = match div.coefficient(p) {
                Some(v) => *v,
                None => log_valuation(f, p, x)?,
            };
            let expect = if parity(&v)? { -1 } else { 1 };
            signed_places &= s == expect;
            positive *= expect;
        } else {
            signed_places &= s == 1;
        }
    }
    Ok(ElementChecks { degree_sum, degree_norm, sign_product: product == 1, signed_places, principal_positive: positive == 1 })
}

/// Run [`check_element`] on the tracked elements and on `x + y theta` for
/// small `x, y`, returning the first failure.
pub fn verify_invariants(f: &FieldData, eta: u32) -> Result<usize> {
    let fb = FactorBase::new(f)?;
    let g = compute_log_class_group(f, &fb, eta)?;
    let c = classify_places(f, &g)?;
    let k = &f.field;
    let mut elems = f.tracked_elements();
    for a in -3i64..=3 {
        for b in 1i64..=3 {
            elems.push(k.add(&k.from_int(a), &k.scale(&k.theta(), &num_rational::BigRational::from_integer(b.into()))));
        }
    }
    for x in &elems {
        let r = check_element(f, &c, x, eta)?;
        if !r.all() {
            return Err(Error::Inconsistent(format!("invariant failure {r:?} at {x:?}")));
        }
    }
    Ok(elems.len())
}
