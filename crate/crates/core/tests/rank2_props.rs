use std::collections::BTreeSet;

use forge_core::dimension::rank2_k_matrices;
use forge_core::graph::{check_graph_automorphism, GraphAutomorphism, PathGraph};
use forge_core::rank2::{
    build_rank2, compute_orders, rank2_automorphism, telescope_rank2, RBlue, RVertex, Rank2Data, Rank2Diagram,
};
use forge_core::scalar::IntMatrix;
use num_integer::lcm;
use proptest::prelude::*;

/// One more level of compatible data: given `T_n`, picks `T_{n+1}` as
/// multiples of `lcm(T_n)` and `B_n ≥ 1`, then solves `A_n T_n = T_{n+1} B_n`.
fn extend(t: Vec<i128>, c1: usize) -> impl Strategy<Value = (IntMatrix, IntMatrix, Vec<i128>)> {
    let l = t.iter().copied().fold(1, lcm);
    let c0 = t.len();
    (prop::collection::vec(1i128..=2, c1), prop::collection::vec(1i128..=2, c1 * c0)).prop_map(move |(mult, b)| {
        let t1: Vec<i128> = mult.iter().map(|m| m * l).collect();
        let bm = IntMatrix::new(c1, c0, b).unwrap();
        let mut a = IntMatrix::zeros(c1, c0);
        for i in 0..c1 {
            for j in 0..c0 {
                a.set(i, j, t1[i] * bm.get(i, j) / t[j]);
            }
        }
        (a, bm, t1)
    })
}

/// Compatible data on two edge levels with at most two cycles per level.
fn data() -> impl Strategy<Value = Rank2Data> {
    (prop::collection::vec(1i128..=3, 1..=2), 1usize..=2, 1usize..=2)
        .prop_flat_map(|(t0, c1, c2)| (Just(t0.clone()), extend(t0, c1), Just(c2)))
        .prop_flat_map(|(t0, (a0, b0, t1), c2)| (Just((t0, a0, b0, t1.clone())), extend(t1, c2)))
        .prop_map(|((t0, a0, b0, t1), (a1, b1, t2))| Rank2Data {
            a: vec![a0, a1],
            b: vec![b0, b1],
            t: vec![IntMatrix::diagonal(&t0), IntMatrix::diagonal(&t1), IntMatrix::diagonal(&t2)],
        })
}

fn orbit(d: &Rank2Diagram, e: RBlue) -> Vec<RBlue> {
    let mut out = vec![e];
    let mut x = d.factor(&e);
    while x != e {
        out.push(x);
        x = d.factor(&x);
    }
    out
}

fn all_blue(d: &Rank2Diagram) -> Vec<RBlue> {
    (0..d.horizon()).flat_map(|n| d.blue_edges(n).collect::<Vec<_>>()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_round_trip(data in data(), orientation in prop::sample::select(vec![1i8, -1])) {
        data.check(2).unwrap();
        let d = build_rank2(&data, 2, orientation).unwrap();
        prop_assert!(d.validate().passed());
        let counts = rank2_k_matrices(&d).unwrap();
        prop_assert_eq!(&counts.a, &data.a);
        prop_assert_eq!(&counts.b, &data.b);
        prop_assert_eq!(&counts.t, &data.t);
    }

    #[test]
    fn orders_are_orbit_lengths(data in data(), orientation in prop::sample::select(vec![1i8, -1])) {
        let d = build_rank2(&data, 2, orientation).unwrap();
        let ord = compute_orders(&d).unwrap();
        for n in 0..2 {
            let mut level_lcm = 1u128;
            for e in d.blue_edges(n) {
                let orb = orbit(&d, e);
                prop_assert_eq!(ord.o[n][e.index], orb.len() as u128);
                level_lcm = lcm(level_lcm, orb.len() as u128);
                // the orbit is the block: A_n(i,j)·T_n(j,j) edges between the same cycles
                let be = d.edge(&e);
                let (i, j) = (be.source.cycle, be.range.cycle);
                prop_assert_eq!(orb.len() as i128, data.a(n).get(i, j) * data.t(n).get(j, j));
                let same_block = orb.iter().all(|x| d.edge(x).source.cycle == i && d.edge(x).range.cycle == j);
                prop_assert!(same_block);
            }
            prop_assert_eq!(ord.big_o[n], level_lcm);
        }
        prop_assert_eq!(ord.m[0], 0);
        for n in 0..2 {
            prop_assert_eq!(ord.m[n + 1], ord.m[n] + n as u128 * ord.big_o[n]);
        }
    }

    #[test]
    fn factorisation_shifts_along_red_cycles(data in data(), orientation in prop::sample::select(vec![1i8, -1])) {
        let d = build_rank2(&data, 2, orientation).unwrap();
        for e in all_blue(&d) {
            let (be, bf) = (d.edge(&e), d.edge(&d.factor(&e)));
            prop_assert_eq!(bf.range, d.pred(&be.range));
            prop_assert_eq!(bf.source, d.pred(&be.source));
        }
    }

    #[test]
    fn automorphism_is_well_defined(data in data(), orientation in prop::sample::select(vec![1i8, -1])) {
        let d = build_rank2(&data, 2, orientation).unwrap();
        let ord = compute_orders(&d).unwrap();
        let a = rank2_automorphism(&d, &ord).unwrap();
        prop_assert!(a.check_well_defined().passed());
        let edges = all_blue(&d);
        prop_assert!(check_graph_automorphism(&d, &a, &edges).passed());
        for e in &edges {
            // α = F^{m_n} on level n
            let mut x = *e;
            for _ in 0..a.m(e.level) {
                x = d.factor(&x);
            }
            prop_assert_eq!(a.edge_pow(e, 1), x);
            prop_assert_eq!(a.factor_pow(e, -3), a.factor_pow(&a.factor_pow(e, -1), -2));
            let p = a.edge_period(e) as i64;
            prop_assert_eq!(a.edge_pow(e, p), *e);
            let seen: BTreeSet<RBlue> = (0..p).map(|k| a.edge_pow(e, k)).collect();
            prop_assert_eq!(seen.len() as i64, p);
        }
        for n in 0..=d.horizon() {
            for v in d.vertices(n) {
                prop_assert_eq!(a.vertex_pow(&a.vertex_pow(&v, 1), -1), v);
            }
        }
    }
}

fn one(x: i128) -> IntMatrix {
    IntMatrix::from_rows(&[vec![x]]).unwrap()
}

#[test]
fn two_level_orders_and_counts() {
    let d = build_rank2(&Rank2Data::two_level_example(), 2, 1).unwrap();
    let ord = compute_orders(&d).unwrap();
    assert_eq!(ord.o[0], vec![3; 3]);
    assert_eq!(ord.o[1], vec![12; 12]);
    assert_eq!(ord.big_o, vec![3, 12]);
    assert_eq!(ord.m, vec![0, 0, 12]);
    let c = rank2_k_matrices(&d).unwrap();
    assert_eq!(c.a, vec![one(3), one(4)]);
    assert_eq!(c.b, vec![one(1), one(2)]);
    assert_eq!(c.t, vec![one(1), one(3), one(6)]);
    for n in 0..2 {
        assert_eq!(c.a[n].checked_mul(&c.t[n]).unwrap(), c.t[n + 1].checked_mul(&c.b[n]).unwrap());
    }
    // the 3 edges into the single vertex on level 0 start at the 3 vertices of the 3-cycle
    let v = RVertex { level: 0, cycle: 0, pos: 0 };
    let sources: BTreeSet<usize> = d.edges_into(&v, None).unwrap().iter().map(|e| d.source(e).pos).collect();
    assert_eq!(sources, BTreeSet::from([0, 1, 2]));
}

#[test]
fn constant_two_subsequence() {
    let data = Rank2Data::constant(one(2), one(2), one(1));
    let t = telescope_rank2(&data, 6, 64).unwrap();
    assert_eq!(t.l, vec![0, 1, 2, 5, 11, 21, 36]);
    assert_eq!(t.big_m, vec![0, 0, 2, 18, 210, 4306]);
    assert!(t.reverify(&data));
    let d = build_rank2(&t.data, 6, 1).unwrap();
    let ord = compute_orders(&d).unwrap();
    assert_eq!(ord.big_o, vec![2, 2, 8, 64, 1024, 32768]);
    assert_eq!(&ord.m[..6], &[0, 0, 2, 18, 210, 4306]);
    for (n, min, bound, ok) in ord.growth_table() {
        assert!(ok, "level {n}: {min} <= {bound}");
        let a = t.data.a(n).get(0, 0);
        let tt = t.data.t(n).get(0, 0);
        assert!(ord.o[n].iter().all(|&o| o as i128 == a * tt));
    }
}
