use std::collections::BTreeSet;
use std::sync::OnceLock;

use num_rational::BigRational;
use proptest::prelude::*;

use posdiv_core::dyadic::TwoAdic;
use posdiv_core::fields::{quadratic_field, Element, FieldData};
use posdiv_core::logarithmic::{compute_log_class_group, decompose_class, FactorBase, LogClassGroup};
use posdiv_core::pipeline::check_element;
use posdiv_core::positive::{deduce_wk2, Wk2Deduction};
use posdiv_core::signatures::{classify_places, PlaceClassification};
use posdiv_core::zlinalg::{kernel_type, AbelianGroupType, Cokernel, Mat2};

const ETA: u32 = 64;

struct Setup {
    f: FieldData,
    g: LogClassGroup,
    c: PlaceClassification,
}

fn setup(d: i64) -> Setup {
    let f = quadratic_field(d).unwrap();
    let fb = FactorBase::new(&f).unwrap();
    let g = compute_log_class_group(&f, &fb, ETA).unwrap();
    let c = classify_places(&f, &g).unwrap();
    Setup { f, g, c }
}

const FIELDS: [i64; 12] = [-184, -248, -399, -759, -959, -4, -3, 776, 904, 29665, 34689, 69064];

fn fields() -> &'static [Setup] {
    static CELL: OnceLock<Vec<Setup>> = OnceLock::new();
    CELL.get_or_init(|| FIELDS.iter().map(|&d| setup(d)).collect())
}

fn element(f: &FieldData, a: i64, b: i64) -> Element {
    let k = &f.field;
    k.add(&k.from_int(a), &k.scale(&k.theta(), &BigRational::from_integer(b.into())))
}

/// `(Z/2^eta)^n / rows` by enumeration: the number of cyclic factors of
/// order at least `2^k` is `log2 |G[2^k]| - log2 |G[2^(k-1)]|`.
fn brute_cokernel(rows: &[Vec<u128>], n: usize, eta: u32) -> Vec<u32> {
    let m = 1u128 << eta;
    let mut span: BTreeSet<Vec<u128>> = BTreeSet::new();
    span.insert(vec![0; n]);
    for r in rows {
        let cur: Vec<Vec<u128>> = span.iter().cloned().collect();
        for v in cur {
            for t in 1..m {
                span.insert((0..n).map(|i| (v[i] + t * r[i]) % m).collect());
            }
        }
    }
    let all: Vec<Vec<u128>> = (0..m.pow(n as u32))
        .map(|mut x| {
            (0..n)
                .map(|_| {
                    let c = x % m;
                    x /= m;
                    c
                })
                .collect()
        })
        .collect();
    let killed = |k: u32| all.iter().filter(|x| span.contains(&x.iter().map(|&c| (c << k) % m).collect::<Vec<_>>())).count() / span.len();
    let mut exps = Vec::new();
    let mut prev = killed(0);
    for k in 1..=eta {
        let cur = killed(k);
        let count = (cur / prev).trailing_zeros();
        for _ in 0..count {
            exps.push(k);
        }
        prev = cur;
    }
    // exps lists, per k, one entry for each factor of order >= 2^k
    let mut orders = Vec::new();
    for k in (1..=eta).rev() {
        let at_least = exps.iter().filter(|&&e| e == k).count();
        let higher = orders.len();
        for _ in higher..at_least {
            orders.push(k);
        }
    }
    orders.sort_unstable();
    orders
}

fn matrix() -> impl Strategy<Value = (usize, usize, Vec<u128>)> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(0u128..8, r * c)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn log_is_additive_on_units(u in any::<u64>(), v in any::<u64>()) {
        let u = TwoAdic::from_residue(u128::from(u | 1), 64);
        let v = TwoAdic::from_residue(u128::from(v | 1), 64);
        let lhs = u.mul(&v).iwasawa_log().unwrap();
        let rhs = u.iwasawa_log().unwrap().add(&v.iwasawa_log().unwrap());
        prop_assert!(lhs.eq_mod(&rhs, 60));
    }

    #[test]
    fn canonical_decomposition_reassembles(n in 1i64..1 << 40) {
        let x = TwoAdic::from_i64(n, 64);
        let (k, u, s) = x.canonical_decompose().unwrap();
        prop_assert_eq!(u.residue(2).unwrap(), 1);
        let back = TwoAdic::from_i64(1 << k, 64).mul(&u).mul(&TwoAdic::from_i64(i64::from(s), 64));
        prop_assert!(back.eq_mod(&x, 60));
        prop_assert_eq!(x.epsilon().unwrap(), s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn cokernel_matches_enumeration((r, c, entries) in matrix()) {
        let rows: Vec<Vec<u128>> = entries.chunks(c).map(|x| x.to_vec()).collect();
        let m = Mat2::from_residue_rows(&rows, c, 3).unwrap();
        let co = Cokernel::new(&m);
        let mut ours: Vec<u32> = co.factors().iter().map(|&(_, v)| v).collect();
        ours.extend(std::iter::repeat(3).take(co.infinite_count()));
        ours.sort_unstable();
        prop_assert_eq!(ours, brute_cokernel(&rows, c, 3), "{} x {}", r, c);
    }

    #[test]
    fn nullspace_matches_enumeration((r, c, entries) in matrix()) {
        let rows: Vec<Vec<u128>> = entries.chunks(c).map(|x| x.to_vec()).collect();
        let m = Mat2::from_residue_rows(&rows, c, 3).unwrap();
        let basis = m.nullspace_mod();
        let kernel: BTreeSet<Vec<u128>> = (0..8u128.pow(c as u32))
            .map(|mut x| (0..c).map(|_| { let t = x % 8; x /= 8; t }).collect::<Vec<u128>>())
            .filter(|x| rows.iter().all(|row| row.iter().zip(x).map(|(a, b)| a * b).sum::<u128>() % 8 == 0))
            .collect();
        let mut span: BTreeSet<Vec<u128>> = BTreeSet::new();
        span.insert(vec![0; c]);
        for b in &basis {
            let cur: Vec<Vec<u128>> = span.iter().cloned().collect();
            for v in cur {
                for t in 1..8u128 {
                    span.insert((0..c).map(|i| (v[i] + t * b[i]) % 8).collect());
                }
            }
        }
        prop_assert_eq!(span, kernel, "{} x {}", r, c);
    }

    #[test]
    fn solve_finds_solutions((_r, c, entries) in matrix(), x in prop::collection::vec(0u128..8, 3)) {
        let rows: Vec<Vec<u128>> = entries.chunks(c).map(|x| x.to_vec()).collect();
        let m = Mat2::from_residue_rows(&rows, c, 3).unwrap();
        let x = &x[..c];
        let b = m.apply(x);
        let y = m.solve_mod(&b).expect("consistent system");
        prop_assert_eq!(m.apply(&y), b);
    }

    #[test]
    fn kernel_type_matches_enumeration(exps in prop::collection::vec(1u32..=3, 1..=3), c in prop::collection::vec(0u128..8, 3), n in 1u32..=2) {
        let w = exps.len();
        // the map x -> sum c_i x_i mod 2^n must be well defined
        let c: Vec<u128> = (0..w).map(|i| (c[i] << n.saturating_sub(exps[i])) & ((1 << n) - 1)).collect();
        let ours = kernel_type(&exps, &[(c.clone(), n)]).unwrap();
        // a finite 2-group is determined by the orders of its 2^k-torsion
        let sizes: Vec<u128> = exps.iter().map(|&e| 1u128 << e).collect();
        let total: u128 = sizes.iter().product();
        let elems: Vec<Vec<u128>> = (0..total).map(|mut x| sizes.iter().map(|&s| { let t = x % s; x /= s; t }).collect()).collect();
        let kernel: Vec<&Vec<u128>> = elems.iter().filter(|x| x.iter().zip(&c).map(|(a, b)| a * b).sum::<u128>() % (1 << n) == 0).collect();
        let order = kernel.len() as u64;
        prop_assert_eq!(1u64 << ours.log2_order(), order);
        let mut counts = Vec::new();
        for k in 0..=3u32 {
            counts.push(kernel.iter().filter(|x| x.iter().zip(&sizes).all(|(a, s)| (a << k) % s == 0)).count() as u64);
        }
        let ours_counts: Vec<u64> = (0..=3u32).map(|k| ours.orders().iter().map(|&o| o.min(1 << k)).product()).collect();
        prop_assert_eq!(ours_counts, counts);
    }

    #[test]
    fn deduced_wild_kernel_has_requested_shape(k2 in prop::collection::vec(prop::sample::select(vec![2u64, 4, 8, 6, 12, 18, 24]), 1..=3), rk2 in 0usize..=3, idx in prop::sample::select(vec![1u64, 2, 3, 4, 6])) {
        let order: u64 = k2.iter().product();
        if order % idx != 0 {
            return Ok(());
        }
        if let Ok(Wk2Deduction::Determined(s)) = deduce_wk2(&k2, idx, rk2, true, std::cmp::Ordering::Equal) {
            prop_assert_eq!(s.two_part.rank(), rk2);
            let full: u64 = s.invariant_factors().iter().product();
            prop_assert_eq!(full, order / idx);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sign_and_degree_identities(i in 0..FIELDS.len(), a in -60i64..60, b in -60i64..60) {
        prop_assume!(b != 0 || a != 0);
        let s = &fields()[i];
        let x = element(&s.f, a, b);
        let r = match check_element(&s.f, &s.c, &x, ETA) {
            // norms with a prime factor above the root search bound
            Err(posdiv_core::Error::UnsupportedLocal(_)) => return Err(TestCaseError::reject("large prime in norm")),
            r => r.unwrap(),
        };
        prop_assert!(r.degree_sum, "{:?}", r);
        prop_assert!(r.degree_norm, "{:?}", r);
        prop_assert!(r.sign_product, "{:?}", r);
        prop_assert!(r.signed_places, "{:?}", r);
        prop_assert!(r.principal_positive, "{:?}", r);
    }

    #[test]
    fn degree_zero_divisors_decompose(i in 0..FIELDS.len(), coeffs in prop::collection::vec(-20i64..20, 6)) {
        let s = &fields()[i];
        let g = &s.g;
        let n = g.factor_base.len();
        let mask = (1u128 << ETA) - 1;
        // a random combination of relations plus class generators has degree 0
        let mut d = vec![0u128; n];
        for (k, row) in g.relations.iter().chain(g.generators.iter()).enumerate() {
            let c = posdiv_core::zlinalg::reduce_i64(coeffs[k % coeffs.len()], ETA);
            for (x, y) in d.iter_mut().zip(row) {
                *x = x.wrapping_add(c.wrapping_mul(*y)) & mask;
            }
        }
        let (y, z) = decompose_class(&d, g).unwrap();
        prop_assert_eq!(g.reassemble(&y, &z), d);
    }
}

#[test]
fn rank_orders_type() {
    let t = AbelianGroupType::parse("[ 2,4 ]").unwrap();
    assert_eq!(t.rank(), 2);
    assert_eq!(t.log2_order(), 3);
}
