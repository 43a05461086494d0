//! Exceptional and positive units, positive divisor classes and the 2-rank
//! of the wild kernel.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::dyadic::TwoAdic;
use crate::error::{Error, Result};
use crate::fields::FieldData;
use crate::logarithmic::{decompose_class, FactorBase, LogClassGroup, PrimitiveDivisor};
use crate::signatures::{positive_sign_check, sign_vector, sign_vector_of_exponents, PlaceClassification, SignVector};
use crate::zlinalg::{kernel_type, reduce_i64, AbelianGroupType, Cokernel, Mat2};

/// Sign vectors of the tracked elements (torsion, 2-units, witnesses).
pub fn tracked_signs(f: &FieldData, c: &PlaceClassification) -> Result<Vec<SignVector>> {
    f.tracked_elements().iter().map(|x| sign_vector(f, c, x)).collect()
}

/// Generators of the exceptional units as exponent vectors over the tracked
/// elements, torsion first.
#[derive(Clone, Debug)]
pub struct ExcUnitBasis {
    pub exponents: Vec<Vec<u128>>,
    pub signs: Vec<SignVector>,
}

impl ExcUnitBasis {
    /// Free rank (excluding torsion).
    pub fn free_rank(&self) -> usize {
        self.exponents.len() - 1
    }
}

/// Nullspace of the logarithmic valuations at the dyadic places outside PE
/// on the 2-units.
pub fn exceptional_units(f: &FieldData, g: &LogClassGroup, c: &PlaceClassification, signs: &[SignVector]) -> Result<ExcUnitBasis> {
    if c.e == 0 {
        return Err(Error::Inconsistent("exceptional units need an exceptional place".into()));
    }
    let eta = g.eta;
    let nu = f.two_units.len();
    let ntracked = g.relations.len();
    let constrained: Vec<usize> = (0..f.s()).filter(|&i| !c.exceptional[i]).collect();
    let mut free: Vec<Vec<u128>> = Vec::new();
    if constrained.is_empty() {
        for j in 0..nu {
            let mut v = vec![0u128; nu];
            v[j] = 1;
            free.push(v);
        }
    } else {
        let rows: Vec<Vec<u128>> = constrained.iter().map(|&q| (0..nu).map(|j| g.relations[1 + j][q]).collect()).collect();
        let b = Mat2::from_residue_rows(&rows, nu, eta)?;
        let snf = b.snf();
        for i in 0..nu {
            if snf.diag_val(i).is_none() {
                free.push(snf.v.col(i));
            }
        }
    }
    let expected = f.r() + f.c() - 1 + c.e;
    if free.len() != expected {
        return Err(Error::UnitRankMismatch { expected, got: free.len() });
    }
    let mut exponents = Vec::with_capacity(expected + 1);
    let mut t = vec![0u128; ntracked];
    t[0] = 1;
    exponents.push(t);
    for v in free {
        let mut z = vec![0u128; ntracked];
        z[1..=nu].copy_from_slice(&v);
        exponents.push(z);
    }
    let exc_signs = exponents.iter().map(|z| sign_vector_of_exponents(signs, z, c.m)).collect();
    Ok(ExcUnitBasis { exponents, signs: exc_signs })
}

/// Positive units: the kernel of the sign map on the exceptional units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositiveUnits {
    /// `F_2` kernel vectors over the exceptional generators; together with
    /// the squares of all generators they generate the positive units.
    pub kernel: Vec<Vec<u8>>,
    /// `(E^exc : E^pos)`.
    pub index: u64,
}

pub fn positive_units(e: &ExcUnitBasis) -> PositiveUnits {
    let k = e.signs.len();
    let m = e.signs.first().map_or(0, Vec::len);
    // rows: generators, as bit vectors; eliminate tracking combinations
    let mut rows: Vec<(Vec<u8>, Vec<u8>)> = e
        .signs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let bits = s.iter().map(|&x| u8::from(x == -1)).collect();
            let mut comb = vec![0u8; k];
            comb[i] = 1;
            (bits, comb)
        })
        .collect();
    let mut rank = 0;
    for col in 0..m {
        let Some(p) = (rank..k).find(|&i| rows[i].0[col] == 1) else { continue };
        rows.swap(rank, p);
        for i in 0..k {
            if i != rank && rows[i].0[col] == 1 {
                let (a, b) = (rows[rank].clone(), &mut rows[i]);
                for (x, y) in b.0.iter_mut().zip(&a.0) {
                    *x ^= y;
                }
                for (x, y) in b.1.iter_mut().zip(&a.1) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    PositiveUnits { kernel: rows[rank..].iter().map(|(_, c)| c.clone()).collect(), index: 1 << rank }
}

/// The group of positive divisor classes with its presentation.
#[derive(Clone, Debug)]
pub struct PositiveClassGroup {
    pub group_type: AbelianGroupType,
    /// Kernel of the total sign on the divisor/sign group, computed without
    /// the presentation below.
    pub oracle_type: AbelianGroupType,
    /// Columns: the `nu` logarithmic class generators, the primitive
    /// divisor, then `m - 1` sign columns.
    pub relations: Mat2,
    pub cokernel: Cokernel,
    pub nu: usize,
    pub m: usize,
    pub exponents: Vec<u32>,
    /// Coefficient of the primitive divisor in each generator.
    pub primitive_coords: Vec<u128>,
    /// Representatives `(divisor over the factor base, sign vector)`.
    pub representatives: Vec<(Vec<u128>, SignVector)>,
    pub primitive: PrimitiveDivisor,
    pub primitive_signs: SignVector,
    /// `v2(deg b)`.
    pub primitive_valuation: i64,
    /// `v2(deg q_1)` for the first exceptional place.
    pub pe_valuation: i64,
    /// Cl~^pos by the same kernel oracle (adds the degree map).
    pub oracle_deg0_type: AbelianGroupType,
}

fn sign_bits(v: &[i8]) -> Result<Vec<u128>> {
    if v.iter().product::<i8>() != 1 {
        return Err(Error::Inconsistent(format!("sign vector {v:?} of a relation has total sign -1")));
    }
    Ok(v[1..].iter().map(|&x| u128::from(x == -1)).collect())
}

fn mul_signs(a: &mut [i8], b: &[i8]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x *= y;
    }
}

/// `Cl^pos` through the relation matrix `A'`.
pub fn compute_cl_pos(
    g: &LogClassGroup,
    c: &PlaceClassification,
    e: &ExcUnitBasis,
    signs: &[SignVector],
    b: &PrimitiveDivisor,
) -> Result<PositiveClassGroup> {
    if c.e == 0 {
        return Err(Error::Inconsistent("positive classes need an exceptional place".into()));
    }
    let eta = g.eta;
    let mask = if eta >= 128 { u128::MAX } else { (1u128 << eta) - 1 };
    let fb = &g.factor_base;
    let n = fb.len();
    let nu = g.rank();
    let m = c.m;
    let ncol = nu + 1 + (m - 1);
    let ones = vec![1i8; m];
    let mut e_a = Vec::with_capacity(nu);
    for a in &g.generators {
        let mut v = ones.clone();
        v[0] = positive_sign_check(a, &ones, c);
        e_a.push(v);
    }
    let b_coeffs: Vec<u128> = b.coeffs.iter().map(|&x| reduce_i64(x, eta)).collect();
    let mut e_b = ones.clone();
    e_b[0] = positive_sign_check(&b_coeffs, &ones, c);
    let lambda: Vec<u128> = fb
        .degrees
        .iter()
        .map(|d| d.div_integral(&b.degree).map_err(|_| Error::Inconsistent("primitive divisor degree does not divide".into()))?.residue(eta))
        .collect::<Result<_>>()?;

    let mut rows: Vec<Vec<u128>> = Vec::new();
    for (j, a) in g.generators.iter().enumerate() {
        let d: Vec<u128> = a.iter().map(|&x| (x << g.exponents[j]) & mask).collect();
        let (y, z) = decompose_class(&d, g)?;
        if y.iter().any(|&x| x != 0) {
            return Err(Error::Inconsistent("order relation of a logarithmic class generator".into()));
        }
        let mut row = vec![0u128; ncol];
        row[j] = 1u128 << g.exponents[j];
        row[nu + 1..].copy_from_slice(&sign_bits(&sign_vector_of_exponents(signs, &z, m))?);
        rows.push(row);
    }
    for q in c.pe() {
        let lam = lambda[q];
        let mut d = vec![0u128; n];
        d[q] = 1;
        for (x, &bc) in d.iter_mut().zip(&b_coeffs) {
            *x = x.wrapping_sub(lam.wrapping_mul(bc)) & mask;
        }
        let (y, z) = decompose_class(&d, g)?;
        let mut sv = sign_vector_of_exponents(signs, &z, m);
        for (yj, ea) in y.iter().zip(&e_a) {
            if yj & 1 == 1 {
                mul_signs(&mut sv, ea);
            }
        }
        if lam & 1 == 1 {
            mul_signs(&mut sv, &e_b);
        }
        let mut row = y.clone();
        row.push(lam);
        row.extend(sign_bits(&sv)?);
        rows.push(row);
    }
    for s in &e.signs {
        let mut row = vec![0u128; nu + 1];
        row.extend(sign_bits(s)?);
        rows.push(row);
    }
    for k in 0..m - 1 {
        let mut row = vec![0u128; ncol];
        row[nu + 1 + k] = 2;
        rows.push(row);
    }
    let relations = Mat2::from_residue_rows(&rows, ncol, eta)?;
    let cokernel = Cokernel::new(&relations);
    let group_type = cokernel.group_type()?;
    let factors = cokernel.factors();
    let exponents: Vec<u32> = factors.iter().map(|&(_, v)| v).collect();
    let mut primitive_coords = Vec::with_capacity(factors.len());
    let mut representatives = Vec::with_capacity(factors.len());
    for k in 0..factors.len() {
        let gen = cokernel.generator(k);
        primitive_coords.push(gen[nu]);
        let mut div = vec![0u128; n];
        let mut sv = ones.clone();
        for j in 0..nu {
            for (x, a) in div.iter_mut().zip(&g.generators[j]) {
                *x = x.wrapping_add(gen[j].wrapping_mul(*a)) & mask;
            }
            if gen[j] & 1 == 1 {
                mul_signs(&mut sv, &e_a[j]);
            }
        }
        for (x, &bc) in div.iter_mut().zip(&b_coeffs) {
            *x = x.wrapping_add(gen[nu].wrapping_mul(bc)) & mask;
        }
        if gen[nu] & 1 == 1 {
            mul_signs(&mut sv, &e_b);
        }
        for i in 1..m {
            if gen[nu + i] & 1 == 1 {
                sv[0] = -sv[0];
                sv[i] = -sv[i];
            }
        }
        representatives.push((div, sv));
    }

    let pe_valuation = fb.degree_valuation(c.pe()[0]);
    let primitive_valuation = b.degree.v2()?;
    let (oracle_type, oracle_deg0_type) = positive_oracle(g, c, signs, primitive_valuation, pe_valuation)?;
    Ok(PositiveClassGroup {
        group_type,
        oracle_type,
        relations,
        cokernel,
        nu,
        m,
        exponents,
        primitive_coords,
        representatives,
        primitive: b.clone(),
        primitive_signs: e_b,
        primitive_valuation,
        pe_valuation,
        oracle_deg0_type,
    })
}

/// Cl^pos and Cl~^pos as kernels on `G = (divisors off PE) x {+-1}^m`
/// modulo principal pairs: the total sign for Cl^pos, and in addition the
/// degree modulo `deg Dl(PE)` for Cl~^pos.
fn positive_oracle(g: &LogClassGroup, c: &PlaceClassification, signs: &[SignVector], vmin: i64, vpe: i64) -> Result<(AbelianGroupType, AbelianGroupType)> {
    let eta = g.eta;
    let fb = &g.factor_base;
    let m = c.m;
    let cols: Vec<usize> = (0..fb.len()).filter(|&q| !(q < c.exceptional.len() && c.exceptional[q])).collect();
    let width = cols.len() + m;
    let mut rows = Vec::new();
    for (r, s) in g.relations.iter().zip(signs) {
        let mut row: Vec<u128> = cols.iter().map(|&q| r[q]).collect();
        row.extend(s.iter().map(|&x| u128::from(x == -1)));
        rows.push(row);
    }
    for k in 0..m {
        let mut row = vec![0u128; width];
        row[cols.len() + k] = 2;
        rows.push(row);
    }
    let gk = Cokernel::new(&Mat2::from_residue_rows(&rows, width, eta)?);
    if gk.infinite_count() > 0 {
        return Err(Error::InfiniteAtPrecision { eta });
    }
    let factors = gk.factors();
    let exps: Vec<u32> = factors.iter().map(|&(_, v)| v).collect();
    let span = (vpe - vmin).max(0) as u32;
    let mut chi = Vec::with_capacity(exps.len());
    let mut degs = Vec::with_capacity(exps.len());
    for k in 0..factors.len() {
        let gen = gk.generator(k);
        let mut x = 0u128;
        let mut dg = TwoAdic::EXACT_ZERO;
        for (i, &q) in cols.iter().enumerate() {
            if c.signed_not_log[q] {
                x += gen[i];
            }
            dg = dg.add(&fb.degrees[q].mul(&TwoAdic::from_residue(gen[i], eta)));
        }
        x += gen[cols.len()..].iter().sum::<u128>();
        chi.push(x & 1);
        let shifted = if dg.is_zero() { 0 } else { dg.residue((vmin as u32) + span)? >> vmin };
        degs.push(shifted);
    }
    let pos = kernel_type(&exps, &[(chi.clone(), 1)])?;
    let pos0 = kernel_type(&exps, &[(chi, 1), (degs, span)])?;
    Ok((pos, pos0))
}

/// Cl~^pos by the `A''` nullspace route, with two oracles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deg0Result {
    pub group_type: AbelianGroupType,
    /// Kernel of the degree on the `A'` presentation.
    pub presentation_oracle: AbelianGroupType,
    /// Kernel of (total sign, degree) on the divisor/sign group.
    pub oracle: AbelianGroupType,
}

impl Deg0Result {
    pub fn agree(&self) -> bool {
        self.group_type == self.oracle && self.presentation_oracle == self.oracle
    }
}

pub fn compute_cl_pos_deg0(p: &PositiveClassGroup) -> Result<Deg0Result> {
    let eta = p.cokernel.eta();
    let mask = if eta >= 128 { u128::MAX } else { (1u128 << eta) - 1 };
    let w = p.exponents.len();
    let vmin = p.primitive_valuation;
    let vpe = p.pe_valuation;
    let span = (vpe - vmin).max(0) as u32;
    let oracle = p.oracle_deg0_type.clone();
    if w == 0 {
        return Ok(Deg0Result { group_type: AbelianGroupType::trivial(), presentation_oracle: AbelianGroupType::trivial(), oracle });
    }
    let lamc = &p.primitive_coords;
    let presentation_oracle = kernel_type(&p.exponents, &[(lamc.iter().map(|&l| l & ((1u128 << span) - 1)).collect(), span)])?;
    // deg b_i = lamc_i * deg b; order by v2
    let vals: Vec<Option<u32>> = lamc.iter().map(|&l| crate::zlinalg::val(l, eta)).collect();
    let mut order: Vec<usize> = (0..w).collect();
    order.sort_by_key(|&i| (vals[i].map_or(u64::MAX, u64::from), i));
    let b1 = order[0];
    let Some(v1) = vals[b1] else {
        return Ok(Deg0Result { group_type: p.group_type.clone(), presentation_oracle, oracle });
    };
    let t = (vpe - (v1 as i64 + vmin)).max(0) as u32;
    let l1 = lamc[b1] >> v1;
    let l1inv = crate::dyadic::inv_odd(l1, eta);
    let mut a2 = Mat2::zeros(w, 2 * w, eta);
    a2.set(0, 0, (1u128 << t) & mask);
    a2.set(0, w, (1u128 << p.exponents[b1]) & mask);
    for (pos, &i) in order.iter().enumerate().skip(1) {
        let r = match vals[i] {
            None => 0,
            Some(_) => (lamc[i] >> v1).wrapping_mul(l1inv) & mask,
        };
        if vals[i].is_some_and(|v| v < v1) {
            return Err(Error::Inconsistent("degree ratio is not integral".into()));
        }
        a2.set(0, pos, r.wrapping_neg() & mask);
        a2.set(pos, pos, 1);
        a2.set(pos, w + pos, (1u128 << p.exponents[i]) & mask);
    }
    let rel: Vec<Vec<u128>> = a2.nullspace_mod().into_iter().map(|v| v[..w].to_vec()).collect();
    let group_type = if rel.is_empty() {
        Cokernel::new(&Mat2::zeros(0, w, eta)).group_type()?
    } else {
        Cokernel::new(&Mat2::from_residue_rows(&rel, w, eta)?).group_type()?
    };
    Ok(Deg0Result { group_type, presentation_oracle, oracle })
}

/// Which case of the rank theorem applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TheoremCase {
    /// No logarithmically signed place.
    NoSignedPlace,
    /// Signed places but no exceptional one; needs narrow logarithmic classes.
    NarrowRequired,
    /// Some exceptional place.
    Exceptional,
}

impl fmt::Display for TheoremCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TheoremCase::NoSignedPlace => "i",
            TheoremCase::NarrowRequired => "ii",
            TheoremCase::Exceptional => "iii",
        })
    }
}

/// `rk_2 WK_2(F)`, or `None` when narrow classes are required.
pub fn wild_kernel_rank(c: &PlaceClassification, cl_tilde: &AbelianGroupType, cl_pos: Option<&AbelianGroupType>) -> (Option<usize>, TheoremCase) {
    if c.e > 0 {
        (cl_pos.map(AbelianGroupType::rank), TheoremCase::Exceptional)
    } else if c.m == 0 {
        (Some(cl_tilde.rank()), TheoremCase::NoSignedPlace)
    } else {
        (None, TheoremCase::NarrowRequired)
    }
}

/// Whether some exceptional place has a degree of minimal valuation. When
/// that minimum is 2, this is checked against the local test "2 is not a
/// square in the completion".
pub fn field_primitivity(f: &FieldData, c: &PlaceClassification, fb: &FactorBase) -> Result<bool> {
    let vmin = (0..fb.len()).map(|i| fb.degree_valuation(i)).min().ok_or(Error::NoPrimitivePlace)?;
    let pe = c.pe();
    let by_degree = pe.iter().any(|&q| fb.degree_valuation(q) == vmin);
    if vmin == 2 {
        let by_local = pe.iter().any(|&q| !two_is_square(f, q));
        if by_local != by_degree {
            return Err(Error::Inconsistent("primitivity tests disagree".into()));
        }
    }
    Ok(by_degree)
}

/// `sqrt 2` lies in `F_q` iff every local norm has trivial Hilbert symbol
/// with 2, i.e. unit part `+-1 mod 8`.
fn two_is_square(f: &FieldData, q: usize) -> bool {
    let local = &f.dyadic_places[q].local;
    local.generators().iter().all(|g| {
        let u = local.norm(g).unit() & 7;
        u == 1 || u == 7
    })
}

/// The structure of `WK_2(F)`: a 2-group and the odd invariant factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wk2Structure {
    pub two_part: AbelianGroupType,
    pub odd_part: Vec<u64>,
}

impl Wk2Structure {
    /// Invariant factors with odd parts merged in, ascending.
    pub fn invariant_factors(&self) -> Vec<u64> {
        let mut two: Vec<u64> = self.two_part.orders().iter().rev().copied().collect();
        let mut odd: Vec<u64> = self.odd_part.iter().rev().copied().collect();
        let len = two.len().max(odd.len());
        two.resize(len, 1);
        odd.resize(len, 1);
        let mut out: Vec<u64> = two.iter().zip(&odd).map(|(a, b)| a * b).collect();
        out.reverse();
        out
    }
}

impl fmt::Display for Wk2Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<alloc::string::String> = self.invariant_factors().iter().map(|o| format!("{o}")).collect();
        if parts.is_empty() {
            write!(f, "[ ]")
        } else {
            write!(f, "[ {} ]", parts.join(","))
        }
    }
}

/// Outcome of [`deduce_wk2`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Wk2Deduction {
    Determined(Wk2Structure),
    Ambiguous(Vec<AbelianGroupType>),
}

fn split_two(n: u64) -> (u32, u64) {
    let k = n.trailing_zeros();
    (k, n >> k)
}

fn prime_powers(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 3;
    while p * p <= n {
        let mut k = 0;
        while n % p == 0 {
            n /= p;
            k += 1;
        }
        if k > 0 {
            out.push((p, k));
        }
        p += 2;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// 2-groups of order `2^total` and rank `rank`, descending invariants
/// bounded by `bound` (the dominance filter).
fn partitions(total: u32, rank: usize, bound: &[u32]) -> Vec<Vec<u32>> {
    fn go(left: u32, slots: usize, max: u32, idx: usize, bound: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let cap = max.min(left).min(bound.get(idx).copied().unwrap_or(0));
        for part in (1..=cap).rev() {
            cur.push(part);
            go(left - part, slots - 1, part, idx + 1, bound, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(total, rank, total, 0, bound, &mut Vec::new(), &mut out);
    out
}

/// Deduce `WK_2(F)` from the tame kernel `k2o` (full invariant factors),
/// the index `(K_2 O_F : WK_2(F))` and the computed 2-rank.
///
/// `rank_cmp` compares the 2-ranks of Cl~^pos and Cl^pos; it matters only
/// for imprimitive fields, where `Less` forces a cyclic factor of order 2.
pub fn deduce_wk2(k2o: &[u64], index: u64, rk2: usize, primitive: bool, rank_cmp: Ordering) -> Result<Wk2Deduction> {
    if index == 0 || k2o.iter().any(|&o| o == 0) {
        return Err(Error::Inconsistent("orders must be positive".into()));
    }
    let order: u64 = k2o.iter().product();
    if order % index != 0 {
        return Err(Error::Inconsistent(format!("index {index} does not divide |K2 O| = {order}")));
    }
    let (a_k, _) = split_two(order);
    let (a_i, odd_index) = split_two(index);
    let total = a_k - a_i;
    let mut bound: Vec<u32> = k2o.iter().map(|&o| o.trailing_zeros()).filter(|&e| e > 0).collect();
    bound.sort_unstable_by(|a, b| b.cmp(a));

    // odd part: per prime, the subgroup of the given order, when unique
    let odd_k2o: Vec<u64> = k2o.iter().map(|&o| split_two(o).1).collect();
    let odd_total: u64 = odd_k2o.iter().product::<u64>() / odd_index;
    let mut odd_part_by_prime: Vec<Vec<u64>> = Vec::new();
    for (p, k) in prime_powers(odd_total) {
        let factors: Vec<u64> = odd_k2o.iter().filter(|&&o| o % p == 0).copied().collect();
        if factors.len() > 1 && k > 1 {
            return Ok(Wk2Deduction::Ambiguous(Vec::new()));
        }
        odd_part_by_prime.push(vec![p.pow(k)]);
    }
    let mut odd_part: Vec<u64> = Vec::new();
    for v in odd_part_by_prime {
        let o = v[0];
        match odd_part.first_mut() {
            Some(x) => *x *= o,
            None => odd_part.push(o),
        }
    }

    if rk2 == 0 {
        if total != 0 {
            return Err(Error::Inconsistent("2-rank 0 with a nontrivial 2-part".into()));
        }
        return Ok(Wk2Deduction::Determined(Wk2Structure { two_part: AbelianGroupType::trivial(), odd_part }));
    }
    let mut cands: Vec<Vec<u32>> = partitions(total, rk2, &bound);
    if !primitive && rank_cmp == Ordering::Less {
        cands.retain(|c| c.contains(&1));
    }
    match cands.len() {
        0 => Err(Error::Inconsistent(format!("no 2-group of order 2^{total} and rank {rk2} inside K2 O"))),
        1 => Ok(Wk2Deduction::Determined(Wk2Structure { two_part: AbelianGroupType::from_exponents(&cands[0]), odd_part })),
        _ => Ok(Wk2Deduction::Ambiguous(cands.iter().map(|c| AbelianGroupType::from_exponents(c)).collect())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::quadratic_field;
    use crate::logarithmic::{compute_log_class_group, primitive_divisor};
    use crate::signatures::classify_places;

    struct Run {
        pos: PositiveClassGroup,
        deg0: Deg0Result,
        exc: ExcUnitBasis,
        c: PlaceClassification,
    }

    fn run(d: i64) -> Run {
        let f = quadratic_field(d).unwrap();
        let fb = FactorBase::new(&f).unwrap();
        let g = compute_log_class_group(&f, &fb, 64).unwrap();
        let c = classify_places(&f, &g).unwrap();
        let signs = tracked_signs(&f, &c).unwrap();
        let exc = exceptional_units(&f, &g, &c, &signs).unwrap();
        let b = primitive_divisor(&f, &fb).unwrap();
        let pos = compute_cl_pos(&g, &c, &exc, &signs, &b).unwrap();
        let deg0 = compute_cl_pos_deg0(&pos).unwrap();
        Run { pos, deg0, exc, c }
    }

    fn ty(s: &str) -> AbelianGroupType {
        AbelianGroupType::parse(s).unwrap()
    }

    #[test]
    fn minus_184() {
        let r = run(-184);
        assert_eq!(r.pos.group_type, ty("[2]"));
        assert_eq!(r.pos.oracle_type, ty("[2]"));
        assert_eq!(r.deg0.group_type, ty("[]"));
        assert!(r.deg0.agree());
        assert_eq!(r.exc.free_rank(), 1);
        let (rk, case) = wild_kernel_rank(&r.c, &ty("[]"), Some(&r.pos.group_type));
        assert_eq!((rk, case), (Some(1), TheoremCase::Exceptional));
    }

    #[test]
    fn representatives_are_positive() {
        for d in [-959i64, 904, 29665] {
            let r = run(d);
            for (div, sv) in &r.pos.representatives {
                assert_eq!(positive_sign_check(div, sv, &r.c), 1, "d = {d}");
            }
        }
    }

    #[test]
    fn real_rows() {
        let r = run(29665);
        assert_eq!(r.pos.group_type, ty("[2,2]"));
        assert_eq!(r.deg0.group_type, ty("[2,2]"));
        let r = run(651784);
        assert_eq!(r.pos.group_type, ty("[2,2,16]"));
        assert_eq!(r.deg0.group_type, ty("[2,2,8]"));
        assert!(r.deg0.agree());
        assert_eq!(r.exc.free_rank(), 2);
    }

    #[test]
    fn positive_unit_index() {
        let r = run(776);
        let pu = positive_units(&r.exc);
        // -1 is negative at both real places
        assert!(pu.index >= 2);
        assert_eq!(pu.kernel.len() + pu.index.trailing_zeros() as usize, r.exc.signs.len());
    }

    #[test]
    fn wk2_table_rows() {
        let show = |x: Wk2Deduction| match x {
            Wk2Deduction::Determined(s) => format!("{s}"),
            Wk2Deduction::Ambiguous(_) => "ambiguous".into(),
        };
        assert_eq!(show(deduce_wk2(&[2, 18], 6, 1, true, Ordering::Equal).unwrap()), "[ 6 ]");
        assert_eq!(show(deduce_wk2(&[2, 4], 2, 2, true, Ordering::Equal).unwrap()), "[ 2,2 ]");
        assert_eq!(show(deduce_wk2(&[2, 4], 2, 1, true, Ordering::Equal).unwrap()), "[ 4 ]");
        assert_eq!(show(deduce_wk2(&[2], 1, 1, true, Ordering::Equal).unwrap()), "[ 2 ]");
        assert_eq!(show(deduce_wk2(&[8], 8, 0, true, Ordering::Equal).unwrap()), "[ ]");
        assert!(deduce_wk2(&[2], 1, 2, true, Ordering::Equal).is_err());
        assert_eq!(show(deduce_wk2(&[4, 8], 2, 2, true, Ordering::Equal).unwrap()), "ambiguous");
    }

    #[test]
    fn primitivity() {
        let f = quadratic_field(-184).unwrap();
        let fb = FactorBase::new(&f).unwrap();
        let g = compute_log_class_group(&f, &fb, 64).unwrap();
        let c = classify_places(&f, &g).unwrap();
        // the exceptional place is Q_2(sqrt 2)-like, the odd generator is primitive
        assert!(!field_primitivity(&f, &c, &fb).unwrap());
    }
}
