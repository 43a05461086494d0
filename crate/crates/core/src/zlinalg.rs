//! Linear algebra over `Z/2^eta`, standing in for `Z_2`.
//!
//! Matrices are dense and small. All eliminations pivot on an entry of
//! minimal 2-valuation, ties broken by the lowest row and then the lowest
//! column, so every result is deterministic.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::dyadic::{inv_odd, mask, TwoAdic};
use crate::error::{Error, Result};

/// Dense matrix with entries in `Z/2^eta`.
#[derive(Clone, PartialEq, Eq)]
pub struct Mat2 {
    rows: usize,
    cols: usize,
    eta: u32,
    data: Vec<u128>,
}

impl Mat2 {
    pub fn zeros(rows: usize, cols: usize, eta: u32) -> Self {
        assert!(eta >= 1 && eta <= 120);
        Mat2 { rows, cols, eta, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize, eta: u32) -> Self {
        let mut m = Self::zeros(n, n, eta);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows_i64(rows: &[Vec<i64>], cols: usize, eta: u32) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols, eta);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::MalformedMatrix("ragged rows"));
            }
            for (j, &x) in r.iter().enumerate() {
                m.set_i64(i, j, x);
            }
        }
        Ok(m)
    }

    pub fn from_residue_rows(rows: &[Vec<u128>], cols: usize, eta: u32) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols, eta);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::MalformedMatrix("ragged rows"));
            }
            for (j, &x) in r.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn eta(&self) -> u32 {
        self.eta
    }

    pub fn modulus_mask(&self) -> u128 {
        mask(self.eta)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u128 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: u128) {
        let m = mask(self.eta);
        self.data[i * self.cols + j] = x & m;
    }

    pub fn set_i64(&mut self, i: usize, j: usize, x: i64) {
        self.set(i, j, reduce_i64(x, self.eta));
    }

    pub fn row(&self, i: usize) -> Vec<u128> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<u128> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn push_row(&mut self, r: &[u128]) {
        assert_eq!(r.len(), self.cols);
        let m = mask(self.eta);
        self.data.extend(r.iter().map(|x| x & m));
        self.rows += 1;
    }

    /// Columns `keep` in the given order.
    pub fn select_cols(&self, keep: &[usize]) -> Mat2 {
        let mut out = Mat2::zeros(self.rows, keep.len(), self.eta);
        for i in 0..self.rows {
            for (jj, &j) in keep.iter().enumerate() {
                out.set(i, jj, self.get(i, j));
            }
        }
        out
    }

    pub fn select_rows(&self, keep: &[usize]) -> Mat2 {
        let mut out = Mat2::zeros(keep.len(), self.cols, self.eta);
        for (ii, &i) in keep.iter().enumerate() {
            for j in 0..self.cols {
                out.set(ii, j, self.get(i, j));
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat2 {
        let mut t = Mat2::zeros(self.cols, self.rows, self.eta);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        assert_eq!(self.cols, other.rows);
        let eta = self.eta.min(other.eta);
        let m = mask(eta);
        let mut out = Mat2::zeros(self.rows, other.cols, eta);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * out.cols + j;
                    out.data[idx] = out.data[idx].wrapping_add(a.wrapping_mul(other.get(k, j))) & m;
                }
            }
        }
        out
    }

    /// `x^T M` for a row vector `x`.
    pub fn left_apply(&self, x: &[u128]) -> Vec<u128> {
        assert_eq!(x.len(), self.rows);
        let m = mask(self.eta);
        let mut out = vec![0u128; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o = o.wrapping_add(xi.wrapping_mul(self.get(i, j))) & m;
            }
        }
        out
    }

    /// `M x` for a column vector `x`.
    pub fn apply(&self, x: &[u128]) -> Vec<u128> {
        assert_eq!(x.len(), self.cols);
        let m = mask(self.eta);
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(0u128, |acc, j| acc.wrapping_add(self.get(i, j).wrapping_mul(x[j])) & m)
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    /// Smith normal form `U M V = S` with unimodular transforms.
    pub fn snf(&self) -> Snf {
        SnfCalc::new(self).run()
    }

    /// Generators of `{x : M x = 0 mod 2^eta}` in Howell form.
    ///
    /// The lattice `2^eta Z^n` is implicit: it is the zero vector modulo the
    /// working modulus.
    pub fn nullspace_mod(&self) -> Vec<Vec<u128>> {
        let snf = self.snf();
        let n = self.cols;
        let mut gens = Vec::new();
        for i in 0..n {
            let scale = match snf.diag_val(i) {
                Some(v) if v == 0 => continue,
                Some(v) => 1u128 << (self.eta - v),
                None => 1,
            };
            let col: Vec<u128> = (0..n).map(|r| snf.v.get(r, i).wrapping_mul(scale) & mask(self.eta)).collect();
            gens.push(col);
        }
        howell_form(&gens, n, self.eta)
    }

    /// A solution of `M x = b mod 2^eta`, if any.
    pub fn solve_mod(&self, b: &[u128]) -> Option<Vec<u128>> {
        assert_eq!(b.len(), self.rows);
        let snf = self.snf();
        let c = snf.u.apply(b);
        let m = mask(self.eta);
        let mut y = vec![0u128; self.cols];
        for (i, &ci) in c.iter().enumerate() {
            match snf.diag_val(i) {
                Some(v) if i < self.cols => {
                    if ci & mask(v) != 0 {
                        return None;
                    }
                    y[i] = (ci >> v) & m;
                }
                _ => {
                    if ci != 0 {
                        return None;
                    }
                }
            }
        }
        Some(snf.v.apply(&y))
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat2 {}x{} mod 2^{}", self.rows, self.cols, self.eta)?;
        for i in 0..self.rows {
            let r: Vec<i128> = self.row(i).iter().map(|&x| centered(x, self.eta)).collect();
            writeln!(f, "  {:?}", r)?;
        }
        Ok(())
    }
}

pub fn reduce_i64(x: i64, eta: u32) -> u128 {
    (x as i128 as u128) & mask(eta)
}

pub fn reduce_bigint(x: &BigInt, eta: u32) -> u128 {
    let m = BigInt::one() << eta;
    x.mod_floor(&m).to_u128().expect("fits")
}

/// Symmetric representative in `(-2^(eta-1), 2^(eta-1)]`.
pub fn centered(x: u128, eta: u32) -> i128 {
    let x = x & mask(eta);
    if eta >= 1 && x > (1u128 << (eta - 1)) {
        x as i128 - (1i128 << eta)
    } else {
        x as i128
    }
}

/// 2-valuation of a residue, `None` for zero.
pub fn val(x: u128, eta: u32) -> Option<u32> {
    let x = x & mask(eta);
    if x == 0 {
        None
    } else {
        Some(x.trailing_zeros())
    }
}

/// Residue of a 2-adic integer at the given modulus.
pub fn residue_of(x: &TwoAdic, eta: u32) -> Result<u128> {
    x.residue(eta)
}

/// Output of [`Mat2::snf`].
#[derive(Clone, Debug)]
pub struct Snf {
    /// Valuations of the diagonal, ascending; entries past the rank are zero.
    diag: Vec<u32>,
    pub u: Mat2,
    pub u_inv: Mat2,
    pub v: Mat2,
    pub v_inv: Mat2,
    pub eta: u32,
}

impl Snf {
    pub fn rank(&self) -> usize {
        self.diag.len()
    }

    /// Valuation of the `i`-th diagonal entry, `None` if it is zero.
    pub fn diag_val(&self, i: usize) -> Option<u32> {
        self.diag.get(i).copied()
    }

    pub fn diagonal(&self) -> &[u32] {
        &self.diag
    }
}

struct SnfCalc {
    m: Mat2,
    u: Mat2,
    u_inv: Mat2,
    v: Mat2,
    v_inv: Mat2,
}

impl SnfCalc {
    fn new(m: &Mat2) -> Self {
        let eta = m.eta;
        SnfCalc {
            m: m.clone(),
            u: Mat2::identity(m.rows, eta),
            u_inv: Mat2::identity(m.rows, eta),
            v: Mat2::identity(m.cols, eta),
            v_inv: Mat2::identity(m.cols, eta),
        }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for mat in [&mut self.m, &mut self.u] {
            for c in 0..mat.cols {
                let a = mat.get(i, c);
                mat.set(i, c, mat.get(j, c));
                mat.set(j, c, a);
            }
        }
        let ui = &mut self.u_inv;
        for r in 0..ui.rows {
            let a = ui.get(r, i);
            ui.set(r, i, ui.get(r, j));
            ui.set(r, j, a);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for mat in [&mut self.m, &mut self.v] {
            for r in 0..mat.rows {
                let a = mat.get(r, i);
                mat.set(r, i, mat.get(r, j));
                mat.set(r, j, a);
            }
        }
        let vi = &mut self.v_inv;
        for c in 0..vi.cols {
            let a = vi.get(i, c);
            vi.set(i, c, vi.get(j, c));
            vi.set(j, c, a);
        }
    }

    fn scale_row(&mut self, i: usize, c: u128) {
        let eta = self.m.eta;
        let ci = inv_odd(c, eta);
        for mat in [&mut self.m, &mut self.u] {
            for k in 0..mat.cols {
                mat.set(i, k, mat.get(i, k).wrapping_mul(c));
            }
        }
        let ui = &mut self.u_inv;
        for r in 0..ui.rows {
            ui.set(r, i, ui.get(r, i).wrapping_mul(ci));
        }
    }

    /// row_i += c * row_k
    fn add_row(&mut self, i: usize, k: usize, c: u128) {
        if c == 0 {
            return;
        }
        for mat in [&mut self.m, &mut self.u] {
            for col in 0..mat.cols {
                let x = mat.get(i, col).wrapping_add(c.wrapping_mul(mat.get(k, col)));
                mat.set(i, col, x);
            }
        }
        let ui = &mut self.u_inv;
        for r in 0..ui.rows {
            let x = ui.get(r, k).wrapping_sub(c.wrapping_mul(ui.get(r, i)));
            ui.set(r, k, x);
        }
    }

    /// col_j += c * col_k
    fn add_col(&mut self, j: usize, k: usize, c: u128) {
        if c == 0 {
            return;
        }
        for mat in [&mut self.m, &mut self.v] {
            for r in 0..mat.rows {
                let x = mat.get(r, j).wrapping_add(c.wrapping_mul(mat.get(r, k)));
                mat.set(r, j, x);
            }
        }
        let vi = &mut self.v_inv;
        for col in 0..vi.cols {
            let x = vi.get(k, col).wrapping_sub(c.wrapping_mul(vi.get(j, col)));
            vi.set(k, col, x);
        }
    }

    fn run(mut self) -> Snf {
        let eta = self.m.eta;
        let (rows, cols) = (self.m.rows, self.m.cols);
        let mut diag = Vec::new();
        for k in 0..rows.min(cols) {
            let mut best: Option<(u32, usize, usize)> = None;
            for i in k..rows {
                for j in k..cols {
                    if let Some(v) = val(self.m.get(i, j), eta) {
                        if best.map_or(true, |(bv, _, _)| v < bv) {
                            best = Some((v, i, j));
                        }
                    }
                }
            }
            let Some((v, pi, pj)) = best else { break };
            self.swap_rows(k, pi);
            self.swap_cols(k, pj);
            let unit = self.m.get(k, k) >> v;
            self.scale_row(k, inv_odd(unit, eta));
            let m = mask(eta);
            for i in k + 1..rows {
                let a = self.m.get(i, k);
                if a != 0 {
                    let c = (a >> v).wrapping_neg() & m;
                    self.add_row(i, k, c);
                }
            }
            for j in k + 1..cols {
                let a = self.m.get(k, j);
                if a != 0 {
                    let c = (a >> v).wrapping_neg() & m;
                    self.add_col(j, k, c);
                }
            }
            diag.push(v);
        }
        Snf { diag, u: self.u, u_inv: self.u_inv, v: self.v, v_inv: self.v_inv, eta }
    }
}

/// Canonical echelon (Howell) form of the `Z/2^eta`-span of `vectors`.
pub fn howell_form(vectors: &[Vec<u128>], n: usize, eta: u32) -> Vec<Vec<u128>> {
    let m = mask(eta);
    let mut pool: Vec<Vec<u128>> =
        vectors.iter().map(|v| v.iter().map(|x| x & m).collect::<Vec<_>>()).filter(|v| v.iter().any(|&x| x != 0)).collect();
    let mut out: Vec<(usize, u32, Vec<u128>)> = Vec::new();
    for col in 0..n {
        // pivot: minimal valuation at this coordinate, lowest index on ties
        let mut best: Option<(u32, usize)> = None;
        for (idx, v) in pool.iter().enumerate() {
            if let Some(vv) = val(v[col], eta) {
                if best.map_or(true, |(bv, _)| vv < bv) {
                    best = Some((vv, idx));
                }
            }
        }
        let Some((pv, pidx)) = best else { continue };
        let mut piv = pool.remove(pidx);
        let unit = inv_odd(piv[col] >> pv, eta);
        for x in piv.iter_mut() {
            *x = x.wrapping_mul(unit) & m;
        }
        for v in pool.iter_mut() {
            if v[col] != 0 {
                let c = v[col] >> pv;
                for (x, p) in v.iter_mut().zip(piv.iter()) {
                    *x = x.wrapping_sub(c.wrapping_mul(*p)) & m;
                }
            }
        }
        // closure: 2^(eta - pv) * pivot has a zero leading entry but may not vanish
        if pv > 0 {
            let s: Vec<u128> = piv.iter().map(|&x| (x << (eta - pv)) & m).collect();
            pool.push(s);
        }
        pool.retain(|v| v.iter().any(|&x| x != 0));
        out.push((col, pv, piv));
    }
    // reduce entries above each pivot
    for i in 0..out.len() {
        let (col, pv, ref piv) = out[i].clone();
        let piv = piv.clone();
        let _ = col;
        for prev in out.iter_mut().take(i) {
            let x = prev.2[col];
            let c = x >> pv;
            if c != 0 {
                for (a, p) in prev.2.iter_mut().zip(piv.iter()) {
                    *a = a.wrapping_sub(c.wrapping_mul(*p)) & m;
                }
            }
        }
    }
    out.into_iter().map(|(_, _, v)| v).collect()
}

/// Type of a finite abelian 2-group: ascending list of cyclic orders.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AbelianGroupType {
    orders: Vec<u64>,
}

impl AbelianGroupType {
    pub fn trivial() -> Self {
        AbelianGroupType { orders: Vec::new() }
    }

    /// From any list of cyclic orders; entries equal to 1 are dropped.
    pub fn new(mut orders: Vec<u64>) -> Result<Self> {
        orders.retain(|&o| o != 1);
        for &o in &orders {
            if o < 2 || !o.is_power_of_two() {
                return Err(Error::Inconsistent(alloc::format!("{o} is not a power of 2")));
            }
        }
        orders.sort_unstable();
        Ok(AbelianGroupType { orders })
    }

    pub fn from_exponents(exps: &[u32]) -> Self {
        let mut orders: Vec<u64> = exps.iter().filter(|&&e| e > 0).map(|&e| 1u64 << e).collect();
        orders.sort_unstable();
        AbelianGroupType { orders }
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn log2_order(&self) -> u32 {
        self.orders.iter().map(|o| o.trailing_zeros()).sum()
    }

    pub fn is_trivial(&self) -> bool {
        self.orders.is_empty()
    }

    /// Dominance test on descending invariants: a subgroup of `self` can have
    /// type `other` exactly when this holds.
    pub fn admits_subgroup(&self, other: &AbelianGroupType) -> bool {
        if other.rank() > self.rank() {
            return false;
        }
        let a: Vec<u64> = self.orders.iter().rev().copied().collect();
        let b: Vec<u64> = other.orders.iter().rev().copied().collect();
        b.iter().zip(a.iter()).all(|(x, y)| x <= y)
    }

    /// Parse `"[ 2,4 ]"`, `"2,4"`, `"[]"` or `"[ 1 ]"`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('[').trim_end_matches(']').trim();
        if t.is_empty() {
            return Ok(Self::trivial());
        }
        let mut v = Vec::new();
        for part in t.split(',') {
            let p = part.trim();
            let n: u64 = p.parse().map_err(|_| Error::Inconsistent(alloc::format!("bad group order {p:?}")))?;
            v.push(n);
        }
        Self::new(v)
    }
}

impl fmt::Display for AbelianGroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.orders.is_empty() {
            return write!(f, "[ ]");
        }
        let parts: Vec<String> = self.orders.iter().map(|o| alloc::format!("{o}")).collect();
        write!(f, "[ {} ]", parts.join(","))
    }
}

/// Cokernel of a relation matrix (relations are rows).
#[derive(Clone, Debug)]
pub struct Cokernel {
    snf: Snf,
    ngens: usize,
}

impl Cokernel {
    pub fn new(relations: &Mat2) -> Self {
        Cokernel { snf: relations.snf(), ngens: relations.cols() }
    }

    pub fn eta(&self) -> u32 {
        self.snf.eta
    }

    /// Number of factors that vanish modulo `2^eta`.
    pub fn infinite_count(&self) -> usize {
        self.ngens - self.snf.rank().min(self.ngens)
    }

    /// Indices (into the SNF basis) of nontrivial finite factors, with their
    /// exponents.
    pub fn factors(&self) -> Vec<(usize, u32)> {
        (0..self.snf.rank()).filter_map(|i| {
            let v = self.snf.diag_val(i)?;
            (v > 0).then_some((i, v))
        }).collect()
    }

    pub fn finite_type(&self) -> AbelianGroupType {
        let e: Vec<u32> = self.factors().iter().map(|&(_, v)| v).collect();
        AbelianGroupType::from_exponents(&e)
    }

    /// Type of the quotient; fails if some factor is unbounded at this precision.
    pub fn group_type(&self) -> Result<AbelianGroupType> {
        if self.infinite_count() > 0 {
            return Err(Error::InfiniteAtPrecision { eta: self.snf.eta });
        }
        Ok(self.finite_type())
    }

    /// Coordinates of `x` along the nontrivial finite factors.
    pub fn coords(&self, x: &[u128]) -> Vec<u128> {
        let y = self.snf.v.left_apply(x);
        self.factors().iter().map(|&(i, v)| y[i] & mask(v)).collect()
    }

    /// Coordinates along the unbounded factors.
    pub fn free_coords(&self, x: &[u128]) -> Vec<u128> {
        let y = self.snf.v.left_apply(x);
        (self.snf.rank()..self.ngens).map(|i| y[i]).collect()
    }

    /// The vector representing the `k`-th nontrivial generator.
    pub fn generator(&self, k: usize) -> Vec<u128> {
        let (i, _) = self.factors()[k];
        self.snf.v_inv.row(i)
    }

    /// Expression of each original generator in the canonical generators.
    pub fn original_generator_coords(&self) -> Vec<Vec<u128>> {
        (0..self.ngens)
            .map(|j| {
                let mut e = vec![0u128; self.ngens];
                e[j] = 1;
                self.coords(&e)
            })
            .collect()
    }

    /// Write `x` (which must lie in the row span of the relations) as a
    /// combination `z` of relation rows: `z R = x`.
    pub fn relation_combination(&self, x: &[u128]) -> Option<Vec<u128>> {
        let eta = self.snf.eta;
        let w = self.snf.v.left_apply(x);
        let mut t = vec![0u128; self.snf.u.rows()];
        for (i, &wi) in w.iter().enumerate() {
            match self.snf.diag_val(i) {
                Some(v) => {
                    if wi & mask(v) != 0 {
                        return None;
                    }
                    t[i] = wi >> v;
                }
                None => {
                    if wi != 0 {
                        return None;
                    }
                }
            }
        }
        let _ = eta;
        Some(self.snf.u.left_apply(&t))
    }

    pub fn snf(&self) -> &Snf {
        &self.snf
    }
}

/// Invariant-factor type of the cokernel of `relations`.
pub fn cokernel_type(relations: &Mat2) -> Result<AbelianGroupType> {
    Cokernel::new(relations).group_type()
}

/// A presentation: labelled generators and relation rows.
#[derive(Clone, Debug)]
pub struct GroupPresentation {
    pub labels: Vec<String>,
    pub relations: Mat2,
    pub cokernel: Cokernel,
}

impl GroupPresentation {
    pub fn new(labels: Vec<String>, relations: Mat2) -> Result<Self> {
        if labels.len() != relations.cols() {
            return Err(Error::MalformedMatrix("label count differs from column count"));
        }
        let cokernel = Cokernel::new(&relations);
        Ok(GroupPresentation { labels, relations, cokernel })
    }

    pub fn group_type(&self) -> Result<AbelianGroupType> {
        self.cokernel.group_type()
    }
}

/// Invariant factors (all > 1, each dividing the next) of `Z^n / rows`,
/// computed exactly over the integers. A zero entry stands for a free factor.
pub fn integer_invariants(rows: &[Vec<i64>], n: usize) -> Vec<BigInt> {
    let mut a: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut diag = Vec::new();
    let mut k = 0;
    let nrows = a.len();
    while k < nrows.min(n) {
        // smallest nonzero absolute value in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in k..nrows {
            for j in k..n {
                if !a[i][j].is_zero() && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(k, pi);
        for r in a.iter_mut() {
            r.swap(k, pj);
        }
        let mut done = true;
        for i in k + 1..nrows {
            let q = a[i][k].div_floor(&a[k][k]);
            if !q.is_zero() {
                for j in k..n {
                    let t = &q * &a[k][j];
                    a[i][j] -= t;
                }
            }
            if !a[i][k].is_zero() {
                done = false;
            }
        }
        for j in k + 1..n {
            let q = a[k][j].div_floor(&a[k][k]);
            if !q.is_zero() {
                for i in k..nrows {
                    let t = &q * &a[i][k];
                    a[i][j] -= t;
                }
            }
            if !a[k][j].is_zero() {
                done = false;
            }
        }
        if !done {
            continue;
        }
        // divisibility of the rest
        let p = a[k][k].clone();
        let mut bad = None;
        'outer: for i in k + 1..nrows {
            for j in k + 1..n {
                if !(&a[i][j] % &p).is_zero() {
                    bad = Some(i);
                    break 'outer;
                }
            }
        }
        if let Some(i) = bad {
            for j in k..n {
                let t = a[i][j].clone();
                a[k][j] += t;
            }
            continue;
        }
        diag.push(p.abs());
        k += 1;
    }
    let mut out: Vec<BigInt> = diag.into_iter().filter(|d| !d.is_one()).collect();
    for _ in k..n {
        out.push(BigInt::zero());
    }
    out
}

/// Type of the kernel of homomorphisms on `A = sum Z/2^(exps_i)`. Each map
/// is given by the images of the generators in `Z/2^N`.
///
/// The preimage lattice `L` of the kernel in `Z^w` is found as a nullspace,
/// brought to triangular form, and the relations `2^(exps_i) e_i` are
/// rewritten in a basis of `L`; the cokernel of that matrix is the kernel.
pub fn kernel_type(exps: &[u32], maps: &[(Vec<u128>, u32)]) -> Result<AbelianGroupType> {
    let w = exps.len();
    if w == 0 {
        return Ok(AbelianGroupType::trivial());
    }
    let maps: Vec<&(Vec<u128>, u32)> = maps.iter().filter(|(_, n)| *n > 0).collect();
    for (c, n) in &maps {
        if c.len() != w {
            return Err(Error::MalformedMatrix("map length differs from the generator count"));
        }
        for (&ci, &k) in c.iter().zip(exps) {
            if let Some(v) = val(ci, *n) {
                if v + k < *n {
                    return Err(Error::MalformedMatrix("map is not defined on the group"));
                }
            }
        }
    }
    let t = maps.iter().map(|(_, n)| *n).chain(exps.iter().copied()).max().unwrap_or(1).max(1);
    let mut gens: Vec<Vec<i128>> = Vec::new();
    if maps.is_empty() {
        for i in 0..w {
            let mut e = vec![0i128; w];
            e[i] = 1;
            gens.push(e);
        }
    } else {
        let nm = maps.len();
        let mut m = Mat2::zeros(nm, w + nm, t);
        for (r, (c, n)) in maps.iter().enumerate() {
            for (i, &ci) in c.iter().enumerate() {
                m.set(r, i, ci);
            }
            if *n < t {
                m.set(r, w + r, 1u128 << n);
            }
        }
        for v in m.nullspace_mod() {
            gens.push(v[..w].iter().map(|&x| x as i128).collect());
        }
    }
    for i in 0..w {
        let mut e = vec![0i128; w];
        e[i] = 1i128 << t;
        gens.push(e);
    }
    let basis = triangular_basis(gens, w);
    let mut rows = Vec::with_capacity(w);
    for (i, &k) in exps.iter().enumerate() {
        let mut target = vec![0i128; w];
        target[i] = 1i128 << k;
        let mut x = vec![0i64; w];
        for j in 0..w {
            if target[j] % basis[j][j] != 0 {
                return Err(Error::MalformedMatrix("relation outside the kernel lattice"));
            }
            let q = target[j] / basis[j][j];
            x[j] = q as i64;
            for l in j..w {
                target[l] -= q * basis[j][l];
            }
        }
        rows.push(x);
    }
    let inv = integer_invariants(&rows, w);
    let orders: Vec<u64> = inv.iter().map(|x| x.to_u64().expect("small 2-group")).collect();
    AbelianGroupType::new(orders)
}

/// Upper-triangular basis (row echelon form) of a full-rank integer lattice.
fn triangular_basis(mut rows: Vec<Vec<i128>>, w: usize) -> Vec<Vec<i128>> {
    let mut basis = Vec::with_capacity(w);
    for j in 0..w {
        loop {
            let mut live: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][j] != 0).collect();
            if live.len() <= 1 {
                break;
            }
            live.sort_by_key(|&i| rows[i][j].abs());
            let p = live[0];
            for &i in &live[1..] {
                let q = rows[i][j] / rows[p][j];
                for l in j..w {
                    rows[i][l] -= q * rows[p][l];
                }
            }
        }
        let p = (0..rows.len()).find(|&i| rows[i][j] != 0).expect("full-rank lattice");
        let mut r = rows.swap_remove(p);
        if r[j] < 0 {
            r.iter_mut().for_each(|x| *x = -*x);
        }
        basis.push(r);
    }
    basis
}
