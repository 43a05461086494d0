//! Quadratic fields from scratch: reduced ideals, the class group, the
//! fundamental unit and the 2-units.
//!
//! Ideals are `lambda * I(a, b)` with `I(a, b) = aZ + (b + sqrt d)/2 Z`;
//! carrying the scalar `lambda` through composition and reduction is what
//! produces generators of principal ideals.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::element::{Element, NumberField};
use super::local::{exact_factor, unramified_factors, LocalField, FACTOR_PRECISION};
use super::padic::{next_prime, PrimeDecomposition, PrimeSlot};
use super::real::RealPlace;
use super::{ClassGenerator, DyadicPlace, FieldData, OddPlace};
use crate::error::{Error, Result};
use crate::zlinalg::{integer_invariants, Cokernel, Mat2};

/// `x + y sqrt(d)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadNum {
    pub x: BigRational,
    pub y: BigRational,
}

impl QuadNum {
    fn int(n: i64) -> Self {
        QuadNum { x: BigRational::from_integer(n.into()), y: BigRational::zero() }
    }
}

#[derive(Clone, Debug)]
struct Ideal {
    lam: QuadNum,
    a: i64,
    b: i64,
}

pub fn is_fundamental_discriminant(d: i64) -> bool {
    fn squarefree(n: i64) -> bool {
        let n = n.unsigned_abs();
        let mut k = 2u64;
        while k * k <= n {
            if n % (k * k) == 0 {
                return false;
            }
            k += 1;
        }
        true
    }
    if d == 0 || d == 1 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => squarefree(d),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && squarefree(m)
        }
        _ => false,
    }
}

fn xgcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1, mut s0, mut s1, mut t0, mut t1) = (a, b, 1i128, 0i128, 0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Reduced ideals, classes and principal generators of `Q(sqrt d)`.
pub struct QuadraticEngine {
    d: i64,
    real: bool,
    s: i64,
    reps: Vec<(i64, i64)>,
    class_of: BTreeMap<(i64, i64), usize>,
    pgen: BTreeMap<(i64, i64), QuadNum>,
    eps: Option<QuadNum>,
}

impl QuadraticEngine {
    pub fn new(d: i64) -> Result<Self> {
        if !is_fundamental_discriminant(d) {
            return Err(Error::NonFundamentalDiscriminant(d));
        }
        let real = d > 0;
        let s = if real { d.sqrt() } else { 0 };
        let mut e = QuadraticEngine { d, real, s, reps: Vec::new(), class_of: BTreeMap::new(), pgen: BTreeMap::new(), eps: None };
        if real {
            e.setup_real();
        } else {
            e.setup_imaginary();
        }
        Ok(e)
    }

    pub fn discriminant(&self) -> i64 {
        self.d
    }

    pub fn class_number(&self) -> usize {
        self.reps.len()
    }

    /// The fundamental unit `> 1` (real fields only).
    pub fn fundamental_unit(&self) -> Option<&QuadNum> {
        self.eps.as_ref()
    }

    pub fn mul(&self, u: &QuadNum, v: &QuadNum) -> QuadNum {
        let d = BigRational::from_integer(self.d.into());
        QuadNum { x: &u.x * &v.x + d * &u.y * &v.y, y: &u.x * &v.y + &u.y * &v.x }
    }

    pub fn norm(&self, u: &QuadNum) -> BigRational {
        &u.x * &u.x - BigRational::from_integer(self.d.into()) * &u.y * &u.y
    }

    pub fn inv(&self, u: &QuadNum) -> QuadNum {
        let n = self.norm(u);
        QuadNum { x: &u.x / &n, y: -&u.y / &n }
    }

    /// Sign of `u` under `sqrt d -> +sqrt d` (real fields).
    pub fn sign(&self, u: &QuadNum) -> i8 {
        let sx = u.x.signum();
        let sy = u.y.signum();
        if sy.is_zero() || sx == sy {
            return if sx.is_positive() || (sx.is_zero() && sy.is_positive()) { 1 } else { -1 };
        }
        if sx.is_zero() {
            return if sy.is_positive() { 1 } else { -1 };
        }
        let x2 = &u.x * &u.x;
        let dy2 = BigRational::from_integer(self.d.into()) * &u.y * &u.y;
        let dominant = if x2 > dy2 { &sx } else { &sy };
        if dominant.is_positive() {
            1
        } else {
            -1
        }
    }

    /// The element of `Q[t]/(f)` for the defining polynomial of
    /// [`QuadraticEngine::polynomial`].
    pub fn to_element(&self, u: &QuadNum) -> Element {
        let two = BigRational::from_integer(2.into());
        if self.d.rem_euclid(4) == 0 {
            Element::from_coeffs(vec![u.x.clone(), &u.y * two])
        } else {
            Element::from_coeffs(vec![&u.x - &u.y, &u.y * two])
        }
    }

    /// `t^2 - d/4` or `t^2 - t + (1-d)/4`, so that `t` generates the ring of
    /// integers.
    pub fn polynomial(&self) -> Vec<BigInt> {
        let d = self.d;
        if d.rem_euclid(4) == 0 {
            vec![BigInt::from(-d / 4), BigInt::zero(), BigInt::one()]
        } else {
            vec![BigInt::from((1 - d) / 4), BigInt::from(-1), BigInt::one()]
        }
    }

    fn beta(&self, b: i64) -> QuadNum {
        QuadNum { x: BigRational::new(b.into(), 2.into()), y: BigRational::new(1.into(), 2.into()) }
    }

    fn c_of(&self, a: i64, b: i64) -> i64 {
        let num = b as i128 * b as i128 - self.d as i128;
        debug_assert_eq!(num.rem_euclid(4 * a as i128), 0);
        (num / (4 * a as i128)) as i64
    }

    fn compose(&self, i1: &Ideal, i2: &Ideal) -> Ideal {
        let (a1, b1, a2, b2) = (i1.a as i128, i1.b as i128, i2.a as i128, i2.b as i128);
        let s = (b1 + b2) / 2;
        let (g1, x1, y1) = xgcd(a1, a2);
        let (e, x2, w) = xgcd(g1, s);
        let v = x2 * y1;
        let _u = x2 * x1;
        let big_a = a1 * a2 / (e * e);
        let c2 = self.c_of(i2.a, i2.b) as i128;
        let big_b = (b2 + 2 * a2 * (v * (s - b2) - w * c2) / e).rem_euclid(2 * big_a);
        let lam = self.mul(&self.mul(&i1.lam, &i2.lam), &QuadNum::int(e as i64));
        Ideal { lam, a: big_a as i64, b: big_b as i64 }
    }

    fn conj(&self, i: &Ideal) -> Ideal {
        Ideal { lam: QuadNum { x: i.lam.x.clone(), y: -&i.lam.y }, a: i.a, b: -i.b }
    }

    fn rho(&self, i: &Ideal) -> Ideal {
        let c = self.c_of(i.a, i.b);
        let f = QuadNum { x: BigRational::new(i.b.into(), (2 * c).into()), y: BigRational::new(1.into(), (2 * c).into()) };
        let lam = self.mul(&i.lam, &f);
        let (a, b) = (c.abs(), -i.b);
        Ideal { lam, a, b: self.normb(a, b) }
    }

    fn normb(&self, a: i64, b: i64) -> i64 {
        let m = 2 * a;
        if self.real && a <= self.s {
            self.s - (self.s - b).rem_euclid(m)
        } else {
            let b = b.rem_euclid(m);
            if b > a {
                b - m
            } else {
                b
            }
        }
    }

    fn is_reduced(&self, a: i64, b: i64) -> bool {
        let d = self.d as i128;
        let (a, b) = (a as i128, b as i128);
        if !self.real {
            let c = (b * b - d) / (4 * a);
            return b.abs() <= a && a <= c && !((b.abs() == a || a == c) && b < 0);
        }
        if !(0 < b && b <= self.s as i128) {
            return false;
        }
        if (2 * a + b) * (2 * a + b) <= d {
            return false;
        }
        2 * a - b <= 0 || (2 * a - b) * (2 * a - b) < d
    }

    fn reduce(&self, i: &Ideal) -> Ideal {
        let mut cur = Ideal { lam: i.lam.clone(), a: i.a, b: self.normb(i.a, i.b) };
        while !self.is_reduced(cur.a, cur.b) {
            cur = self.rho(&cur);
        }
        cur
    }

    fn unit_ideal(&self) -> Ideal {
        let b0 = if self.real {
            if (self.s - self.d).rem_euclid(2) == 0 {
                self.s
            } else {
                self.s - 1
            }
        } else {
            self.d.rem_euclid(2)
        };
        Ideal { lam: QuadNum::int(1), a: 1, b: b0 }
    }

    fn admissible(&self, a: i64, b: i64) -> bool {
        let num = b as i128 * b as i128 - self.d as i128;
        (b - self.d).rem_euclid(2) == 0 && num.rem_euclid(4 * a as i128) == 0
    }

    fn setup_imaginary(&mut self) {
        let lim = (-self.d / 3).sqrt() + 1;
        for a in 1..=lim {
            for b in -a + 1..=a {
                if self.admissible(a, b) && self.is_reduced(a, b) {
                    self.class_of.insert((a, b), self.reps.len());
                    self.reps.push((a, b));
                }
            }
        }
    }

    fn setup_real(&mut self) {
        let mut reduced = Vec::new();
        for a in 1..=self.s {
            for b in 1..=self.s {
                if self.admissible(a, b) && self.is_reduced(a, b) {
                    reduced.push((a, b));
                }
            }
        }
        for r in reduced {
            if self.class_of.contains_key(&r) {
                continue;
            }
            let cid = self.reps.len();
            self.reps.push(r);
            let mut cur = Ideal { lam: QuadNum::int(1), a: r.0, b: r.1 };
            while let alloc::collections::btree_map::Entry::Vacant(v) = self.class_of.entry((cur.a, cur.b)) {
                v.insert(cid);
                cur = self.rho(&cur);
            }
        }
        // walk the principal cycle: the tracked ideal always equals O
        let mut cur = self.unit_ideal();
        let eps = loop {
            let key = (cur.a, cur.b);
            if self.pgen.contains_key(&key) {
                break cur.lam.clone();
            }
            self.pgen.insert(key, self.inv(&cur.lam));
            cur = self.rho(&cur);
        };
        let mut eps = if self.sign(&eps) < 0 { QuadNum { x: -eps.x, y: -eps.y } } else { eps };
        let minus_one = QuadNum { x: &eps.x - BigRational::one(), y: eps.y.clone() };
        if self.sign(&minus_one) < 0 {
            eps = self.inv(&eps);
        }
        self.eps = Some(eps);
    }

    fn class_id(&self, i: &Ideal) -> usize {
        let r = self.reduce(i);
        self.class_of[&(r.a, r.b)]
    }

    fn class_rep(&self, c: usize) -> Ideal {
        let (a, b) = self.reps[c];
        Ideal { lam: QuadNum::int(1), a, b }
    }

    fn principal_generator(&self, i: &Ideal) -> Option<QuadNum> {
        let r = self.reduce(i);
        if self.real {
            let g = self.pgen.get(&(r.a, r.b))?;
            Some(self.mul(&r.lam, g))
        } else if (r.a, r.b) == (1, self.d.rem_euclid(2)) {
            Some(r.lam)
        } else {
            None
        }
    }

    fn prime_ideals(&self, p: i64) -> Vec<Ideal> {
        (0..2 * p).filter(|&b| self.admissible(p, b)).map(|b| Ideal { lam: QuadNum::int(1), a: p, b }).collect()
    }

    fn pow(&self, i: &Ideal, mut k: u64) -> Ideal {
        let mut r = self.unit_ideal();
        let mut base = self.reduce(i);
        while k > 0 {
            if k & 1 == 1 {
                r = self.reduce(&self.compose(&r, &base));
            }
            k >>= 1;
            if k > 0 {
                base = self.reduce(&self.compose(&base, &base));
            }
        }
        r
    }

    fn order(&self, i: &Ideal) -> u64 {
        let one = self.class_id(&self.unit_ideal());
        let mut cur = self.reduce(i);
        let mut n = 1;
        while self.class_id(&cur) != one {
            cur = self.reduce(&self.compose(&cur, i));
            n += 1;
        }
        n
    }
}

/// Class group data: generators, relations and class coordinates.
struct GroupStructure {
    rels: Vec<Vec<i64>>,
    coords: BTreeMap<usize, Vec<i64>>,
    ngens: usize,
}

impl GroupStructure {
    fn build(e: &QuadraticEngine) -> Self {
        let h = e.class_number();
        let one = e.class_id(&e.unit_ideal());
        let mut coords: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
        coords.insert(one, Vec::new());
        let mut rels: Vec<Vec<i64>> = Vec::new();
        let mut ngens = 0;
        let mut p = 2;
        while coords.len() < h {
            for pid in e.prime_ideals(p) {
                if coords.len() >= h {
                    break;
                }
                if coords.contains_key(&e.class_id(&pid)) {
                    continue;
                }
                let k = ngens;
                ngens += 1;
                let mut cur = e.reduce(&pid);
                let mut n = 1;
                while !coords.contains_key(&e.class_id(&cur)) {
                    cur = e.reduce(&e.compose(&cur, &pid));
                    n += 1;
                }
                let base = &coords[&e.class_id(&cur)];
                let mut rel: Vec<i64> = (0..k).map(|j| -base.get(j).copied().unwrap_or(0)).collect();
                rel.push(n);
                rels.push(rel);
                let mut next = BTreeMap::new();
                let mut ppow = e.unit_ideal();
                for j in 0..n {
                    for (&c, v) in &coords {
                        let nc = e.class_id(&e.compose(&e.class_rep(c), &ppow));
                        let mut w = v.clone();
                        w.resize(k, 0);
                        w.push(j);
                        next.insert(nc, w);
                    }
                    ppow = e.reduce(&e.compose(&ppow, &pid));
                }
                coords = next;
            }
            p = next_prime(p as u64) as i64;
        }
        for r in rels.iter_mut() {
            r.resize(ngens, 0);
        }
        for v in coords.values_mut() {
            v.resize(ngens, 0);
        }
        GroupStructure { rels, coords, ngens }
    }

    fn vec_of(&self, e: &QuadraticEngine, i: &Ideal) -> Vec<i64> {
        self.coords[&e.class_id(i)].clone()
    }
}

/// Modulus exponent for class-group coordinates; far above any 2-part
/// order met in practice.
const CLASS_ETA: u32 = 64;

/// Build [`FieldData`] for the quadratic field of fundamental discriminant
/// `d`.
pub fn quadratic_field(d: i64) -> Result<FieldData> {
    let e = QuadraticEngine::new(d)?;
    let k = NumberField::new(e.polynomial())?;
    let gs = GroupStructure::build(&e);
    let inv = integer_invariants(&gs.rels, gs.ngens);
    let class_group_type: Vec<u64> = inv.iter().map(|x| x.to_u64().expect("small class group")).collect();

    // dyadic places
    let dmod8 = d.rem_euclid(8);
    let dyadic_ideals: Vec<Ideal> = if dmod8 == 5 {
        vec![Ideal { lam: QuadNum::int(2), a: 1, b: e.unit_ideal().b }]
    } else {
        e.prime_ideals(2)
    };
    let mut dyadic_places = Vec::new();
    match dmod8 {
        1 => {
            let facs = unramified_factors(k.poly(), FACTOR_PRECISION)?;
            for q in &dyadic_ideals {
                let target = (1 - q.b).rem_euclid(4) / 2 % 2;
                let (g, ee, ff) = facs
                    .iter()
                    .find(|(g, _, _)| g[0].neg().residue(1).ok() == Some(target as u128))
                    .cloned()
                    .ok_or_else(|| Error::Inconsistent("split dyadic factor not found".into()))?;
                dyadic_places.push(DyadicPlace { local: LocalField::new(g, ee, ff)?, gens: (BigInt::from(2), e.to_element(&e.beta(q.b))) });
            }
        }
        5 => {
            let facs = unramified_factors(k.poly(), FACTOR_PRECISION)?;
            let (g, ee, ff) = facs[0].clone();
            dyadic_places.push(DyadicPlace { local: LocalField::new(g, ee, ff)?, gens: (BigInt::from(2), k.from_int(2)) });
        }
        _ => {
            let q = &dyadic_ideals[0];
            dyadic_places.push(DyadicPlace {
                local: LocalField::new(exact_factor(k.poly()), 2, 1)?,
                gens: (BigInt::from(2), e.to_element(&e.beta(q.b))),
            });
        }
    }

    // Cl' = Cl / <dyadic classes>, 2-part
    let mut rows = gs.rels.clone();
    for q in &dyadic_ideals {
        rows.push(gs.vec_of(&e, q));
    }
    let clp = Cokernel::new(&Mat2::from_rows_i64(&rows, gs.ngens, CLASS_ETA)?);
    let nf = clp.factors().len();

    // dyadic subgroup: class -> exponents
    let mut dsub: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    let h = e.class_number() as u64;
    let h2 = if dyadic_ideals.len() == 2 { h } else { 1 };
    for k1 in 0..h {
        for k2 in 0..h2 {
            let mut i = e.pow(&dyadic_ideals[0], k1);
            if k2 > 0 {
                i = e.reduce(&e.compose(&i, &e.pow(&dyadic_ideals[1], k2)));
            }
            dsub.entry(e.class_id(&i)).or_insert((k1, k2));
        }
    }

    // factor-base primes with unit Cl' coordinates
    let mut found: Vec<Option<Ideal>> = vec![None; nf];
    let mut p = 2u64;
    while found.iter().any(Option::is_none) {
        p = next_prime(p);
        for pid in e.prime_ideals(p as i64) {
            let v: Vec<u128> = gs.vec_of(&e, &pid).iter().map(|&x| crate::zlinalg::reduce_i64(x, CLASS_ETA)).collect();
            let c = clp.coords(&v);
            for (j, slot) in found.iter_mut().enumerate() {
                if slot.is_none() && c.iter().enumerate().all(|(i, &x)| x == u128::from(i == j)) {
                    *slot = Some(pid.clone());
                }
            }
        }
    }
    let mut class_group = Vec::new();
    for pid in found.into_iter().flatten() {
        let mut order = 1u64;
        let mut cur = e.reduce(&pid);
        while !dsub.contains_key(&e.class_id(&cur)) {
            cur = e.reduce(&e.compose(&cur, &pid));
            order += 1;
        }
        let (k1, k2) = dsub[&e.class_id(&cur)];
        let mut i = e.pow(&pid, order);
        if k1 > 0 {
            i = e.compose(&i, &e.pow(&e.conj(&dyadic_ideals[0]), k1));
        }
        if k2 > 0 {
            i = e.compose(&i, &e.pow(&e.conj(&dyadic_ideals[1]), k2));
        }
        let g = e.principal_generator(&i).ok_or_else(|| Error::Inconsistent(format!("no generator for the class of {}", pid.a)))?;
        let pp = pid.a as u64;
        let dec = PrimeDecomposition::new(&k, pp)?;
        let slot = if d.rem_euclid(pp as i64) == 0 {
            PrimeSlot::Rest
        } else {
            // t = -b/2 or (1-b)/2 modulo the prime
            let num = if d.rem_euclid(4) == 0 { -pid.b } else { 1 - pid.b };
            let r = (num as i128 * ((pp as i128 + 1) / 2)).rem_euclid(pp as i128) as u64;
            let idx = dec.roots.iter().position(|&x| x == r).ok_or_else(|| Error::Inconsistent("prime root not found".into()))?;
            PrimeSlot::Root(idx)
        };
        let place = OddPlace { decomposition: dec, slot, gens: (BigInt::from(pp), e.to_element(&e.beta(pid.b))) };
        class_group.push(ClassGenerator { place, order, witness: e.to_element(&g) });
    }

    // 2-units
    let mut units = Vec::new();
    if let Some(eps) = e.fundamental_unit() {
        units.push(e.to_element(eps));
    }
    match dmod8 {
        1 => {
            units.push(k.from_int(2));
            let q = &dyadic_ideals[0];
            let hq = e.order(q);
            let g = e.principal_generator(&e.pow(q, hq)).ok_or_else(|| Error::Inconsistent("dyadic power not principal".into()))?;
            units.push(e.to_element(&g));
        }
        5 => units.push(k.from_int(2)),
        _ => {
            let q = &dyadic_ideals[0];
            match e.principal_generator(q) {
                Some(g) => units.push(e.to_element(&g)),
                None => units.push(k.from_int(2)),
            }
        }
    }
    let (torsion, torsion_order) = match d {
        -4 => (k.theta(), 4),
        -3 => (k.theta(), 6),
        _ => (k.from_int(-1), 2),
    };

    let real_places = if e.real { real_intervals(d) } else { Vec::new() };
    let signature = if e.real { (2, 0) } else { (0, 1) };
    Ok(FieldData {
        label: format!("{d}"),
        integral_basis: vec![k.one(), k.theta()],
        field: k,
        signature,
        disc: BigInt::from(d),
        class_group_type: Some(class_group_type),
        class_group,
        two_units: units,
        torsion,
        torsion_order,
        dyadic_places,
        real_places,
    })
}

fn real_intervals(d: i64) -> Vec<RealPlace> {
    let q = |n: i64, den: i64| BigRational::new(n.into(), den.into());
    if d.rem_euclid(4) == 0 {
        let s = (d / 4).sqrt();
        vec![RealPlace::new(q(s, 1), q(s + 1, 1)), RealPlace::new(q(-s - 1, 1), q(-s, 1))]
    } else {
        let s = d.sqrt();
        vec![RealPlace::new(q(1 + s, 2), q(2 + s, 2)), RealPlace::new(q(-s, 2), q(1 - s, 2))]
    }
}
