mod common;

use std::collections::BTreeMap;

use common::{g_spec, small_coeff};
use forge_core::convolution::{
    compose_alpha, convolve, delta, involution, iota_embed, iota_embed_finite, module_inner_product,
    regular_representation, right_action, x_times, ConvBackend, ConvElement, TwistedFunction,
};
use forge_core::germ::{hinf, hinf_word, words_up_to, BasicBisection, GermElement};
use forge_core::graph::{Eid, PathWord, Vid};
use forge_core::groupoid::{FiniteGroupoid, GroupoidAutomorphism};
use forge_core::scalar::{coeff, Coeff, CoeffMatrix};
use forge_core::twisted::twisted_product;
use num_traits::Zero;
use proptest::prelude::*;

type Fun = BTreeMap<usize, Coeff>;

fn s3() -> (FiniteGroupoid, Vec<[usize; 3]>) {
    let perms: Vec<[usize; 3]> = vec![[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1], [2, 1, 0]];
    let idx = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
    let table: Vec<Vec<usize>> = perms
        .iter()
        .map(|a| perms.iter().map(|b| idx([a[b[0]], a[b[1]], a[b[2]]])).collect())
        .collect();
    (FiniteGroupoid::group_from_table(&table).unwrap(), perms)
}

/// Conjugation by the transposition (0 1).
fn s3_conjugation() -> (FiniteGroupoid, GroupoidAutomorphism) {
    let (g, perms) = s3();
    let t = [1, 0, 2];
    let perm = perms
        .iter()
        .map(|p| {
            let c = [t[p[t[0]]], t[p[t[1]]], t[p[t[2]]]];
            perms.iter().position(|q| *q == c).unwrap()
        })
        .collect();
    (g, GroupoidAutomorphism::new(perm).unwrap())
}

/// Every finite G of at most 6 elements used for the module identities.
fn small_gs() -> Vec<(&'static str, FiniteGroupoid, GroupoidAutomorphism)> {
    let full2 = FiniteGroupoid::full_relation(2);
    let two_points = FiniteGroupoid::disjoint_union(&FiniteGroupoid::cyclic_group(1), &FiniteGroupoid::cyclic_group(1));
    vec![
        ("Z/1", FiniteGroupoid::cyclic_group(1), GroupoidAutomorphism::identity(1)),
        ("two points, swap", two_points, GroupoidAutomorphism::new(vec![1, 0]).unwrap()),
        ("Z/3, a -> 2a", FiniteGroupoid::cyclic_group(3), GroupoidAutomorphism::cyclic_multiplier(3, 2).unwrap()),
        ("Z/3, identity", FiniteGroupoid::cyclic_group(3), GroupoidAutomorphism::identity(3)),
        ("R_2, swap", full2.clone(), GroupoidAutomorphism::full_relation_permutation(&[1, 0]).unwrap()),
        ("R_2, identity", full2, GroupoidAutomorphism::identity(4)),
        ("Z/5, a -> 2a", FiniteGroupoid::cyclic_group(5), GroupoidAutomorphism::cyclic_multiplier(5, 2).unwrap()),
        ("Z/6, a -> 5a", FiniteGroupoid::cyclic_group(6), GroupoidAutomorphism::cyclic_multiplier(6, 5).unwrap()),
        ("S_3, conjugation", s3_conjugation().0, s3_conjugation().1),
    ]
}

fn conv_g(g: &FiniteGroupoid, a: &Fun, b: &Fun) -> Fun {
    match convolve(&ConvBackend::Finite(g), &ConvElement::finite(a.clone()), &ConvElement::finite(b.clone())).unwrap() {
        ConvElement::Finite(m) => m,
        _ => unreachable!(),
    }
}

fn star_g(g: &FiniteGroupoid, a: &Fun) -> Fun {
    match involution(&ConvBackend::Finite(g), &ConvElement::finite(a.clone())).unwrap() {
        ConvElement::Finite(m) => m,
        _ => unreachable!(),
    }
}

fn point(x: usize, c: Coeff) -> Fun {
    BTreeMap::from([(x, c)])
}

#[test]
fn module_identities_exhaustive() {
    let (cf, cf2) = (coeff(1, 2), coeff(3, -1));
    let mut checked = 0;
    for (name, g, alpha) in small_gs() {
        assert!(alpha.check(&g).passed(), "{name}");
        let b = ConvBackend::Hinf { g: &g, alpha: &alpha };
        for p in 0..g.len() {
            for q in 0..g.len() {
                let (f, f2) = (point(p, cf), point(q, cf2));
                for i in 1..=3 {
                    for j in 1..=3 {
                        // (x_i × f)* (x_j × f′) = δ_ij ι((f∘α⁻¹)* (f′∘α⁻¹))
                        let lhs = convolve(&b, &involution(&b, &x_times(i, &f)).unwrap(), &x_times(j, &f2)).unwrap();
                        let rhs = if i == j {
                            let fa = compose_alpha(&f, &alpha, -1);
                            let f2a = compose_alpha(&f2, &alpha, -1);
                            iota_embed(&conv_g(&g, &star_g(&g, &fa), &f2a))
                        } else {
                            ConvElement::Twisted(TwistedFunction::zero())
                        };
                        assert_eq!(lhs, rhs, "comp: {name} p={p} q={q} i={i} j={j}");
                        checked += 1;
                    }
                    // ι(f′) (x_i × f) = x_i × (f′ f)
                    let lhs = convolve(&b, &iota_embed(&f2), &x_times(i, &f)).unwrap();
                    assert_eq!(lhs, x_times(i, &conv_g(&g, &f2, &f)), "comp2: {name} p={p} q={q} i={i}");
                    // (x_i × f)·f′ = x_i × (f (f′∘α))
                    let lhs = right_action(&b, &x_times(i, &f), &f2).unwrap();
                    let f2a = compose_alpha(&f2, &alpha, 1);
                    assert_eq!(lhs, x_times(i, &conv_g(&g, &f, &f2a)), "right action: {name} p={p} q={q} i={i}");
                }
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn right_action_collapses_for_identity() {
    let g = FiniteGroupoid::cyclic_group(4);
    let alpha = GroupoidAutomorphism::identity(4);
    let b = ConvBackend::Hinf { g: &g, alpha: &alpha };
    for p in 0..4 {
        for q in 0..4 {
            let (f, f2) = (point(p, coeff(1, 0)), point(q, coeff(0, 1)));
            assert_eq!(right_action(&b, &x_times(2, &f), &f2).unwrap(), x_times(2, &conv_g(&g, &f, &f2)));
        }
    }
}

#[test]
fn isometries_and_orthogonality() {
    for (name, g, alpha) in small_gs() {
        let b = ConvBackend::Hinf { g: &g, alpha: &alpha };
        let units: Fun = g.units().into_iter().map(|u| (u, coeff(1, 0))).collect();
        for i in 1..=3 {
            assert_eq!(module_inner_product(&b, &x_times(i, &units), &x_times(i, &units)).unwrap(), units, "{name}");
            for j in 1..=3 {
                if i != j {
                    assert!(module_inner_product(&b, &x_times(i, &units), &x_times(j, &units)).unwrap().is_empty());
                }
            }
        }
    }
}

#[test]
fn full_relation_is_a_matrix_algebra() {
    for n in 1..=4 {
        let g = FiniteGroupoid::full_relation(n);
        let b = ConvBackend::Finite(&g);
        for x in 0..n * n {
            for y in 0..n * n {
                let (i, j, k, l) = (x / n, x % n, y / n, y % n);
                let want = if j == k { delta(i * n + l) } else { ConvElement::finite(BTreeMap::new()) };
                assert_eq!(convolve(&b, &delta(x), &delta(y)).unwrap(), want);
            }
            assert_eq!(involution(&b, &delta(x)).unwrap(), delta((x % n) * n + x / n));
        }
    }
}

fn element(g_len: usize) -> impl Strategy<Value = Fun> {
    prop::collection::btree_map(0..g_len, small_coeff(), 0..=5)
}

fn mat(g: &FiniteGroupoid, u: usize, x: &Fun) -> CoeffMatrix {
    regular_representation(&ConvBackend::Finite(g), u, &ConvElement::finite(x.clone())).unwrap().matrix
}

fn finite_groupoid() -> impl Strategy<Value = FiniteGroupoid> {
    // groupoids of at most 12 elements, from the seeded twisted family
    (common::h_leaf(), g_spec())
        .prop_filter("<= 12 elements", |(h, g)| h.size() * g.size() <= 12)
        .prop_map(|(h, g)| {
            let (hg, c) = h.build();
            let (gg, a) = g.build().unwrap();
            twisted_product(&hg, &c, &gg, &a).unwrap().groupoid().clone()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn regular_representation_is_a_star_homomorphism(
        (g, x, y) in finite_groupoid().prop_flat_map(|g| { let n = g.len(); (Just(g), element(n), element(n)) })
    ) {
        let xy = conv_g(&g, &x, &y);
        for u in g.units() {
            prop_assert_eq!(mat(&g, u, &xy), mat(&g, u, &x).mul(&mat(&g, u, &y)).unwrap());
            prop_assert_eq!(mat(&g, u, &star_g(&g, &x)), mat(&g, u, &x).adjoint());
            // ⟨ξ*ξ⟩ is positive in every regular representation
            prop_assert!(mat(&g, u, &conv_g(&g, &star_g(&g, &x), &x)).is_positive_semidefinite());
        }
        // (ξη)* = η*ξ*
        prop_assert_eq!(star_g(&g, &xy), conv_g(&g, &star_g(&g, &y), &star_g(&g, &x)));
    }

    #[test]
    fn iota_is_a_star_homomorphism(
        (spec, x, y) in (common::h_leaf(), g_spec())
            .prop_filter("small", |(h, g)| h.size() * g.size() <= 36)
            .prop_flat_map(|(h, g)| { let n = g.size(); (Just((h, g)), element(n), element(n)) })
    ) {
        let (hs, gs) = spec;
        let (hg, c) = hs.build();
        let (gg, a) = gs.build().unwrap();
        let tp = twisted_product(&hg, &c, &gg, &a).unwrap();
        let b = ConvBackend::Finite(tp.groupoid());
        let ix = iota_embed_finite(&tp, &x).unwrap();
        let iy = iota_embed_finite(&tp, &y).unwrap();
        prop_assert_eq!(convolve(&b, &ix, &iy).unwrap(), iota_embed_finite(&tp, &conv_g(&gg, &x, &y)).unwrap());
        prop_assert_eq!(involution(&b, &ix).unwrap(), iota_embed_finite(&tp, &star_g(&gg, &x)).unwrap());
        if let ConvElement::Finite(m) = &ix {
            for k in m.keys() {
                prop_assert!(hg.is_unit(tp.pair(*k).0));
            }
        }
    }
}

/// A bisection as it was added, kept so the oracle never sees the
/// canonical form.
type Raw = Vec<(BasicBisection<Vid, Eid>, usize, Coeff)>;

fn bisection() -> impl Strategy<Value = BasicBisection<Vid, Eid>> {
    (
        prop::collection::vec(0usize..3, 0..=2),
        prop::collection::vec(0usize..3, 0..=2),
        prop::collection::btree_set(0usize..3, 0..=2),
    )
        .prop_map(|(a, b, f)| {
            BasicBisection::new(&hinf(), hinf_word(&a), hinf_word(&b), f.into_iter().map(Eid).collect()).unwrap()
        })
}

fn raw_function(g_len: usize) -> impl Strategy<Value = Raw> {
    prop::collection::vec((bisection(), 0..g_len, small_coeff()), 1..=3)
}

fn to_function(raw: &Raw) -> TwistedFunction {
    let mut f = TwistedFunction::zero();
    for (b, g, c) in raw {
        f.add_piece(b, *g, *c);
    }
    f
}

/// Value at the literal element `((x, |x| − |y|, y), g)`.
fn raw_eval(raw: &Raw, x: &PathWord<Vid, Eid>, y: &PathWord<Vid, Eid>, g: usize) -> Coeff {
    let germ = GermElement::finite(x.clone(), y.clone()).unwrap();
    raw.iter()
        .filter(|(b, gg, _)| *gg == g && b.contains(&germ))
        .fold(Coeff::zero(), |acc, (_, _, c)| acc + c)
}

/// Sum over factorisations `((x, w), g₁)((w, y), g₂)`, with `w` forced by
/// the piece of the left factor that contains a germ with range `x`.
fn raw_convolution(
    g: &FiniteGroupoid,
    alpha: &GroupoidAutomorphism,
    a: &Raw,
    b: &Raw,
    x: &PathWord<Vid, Eid>,
    y: &PathWord<Vid, Eid>,
    target: usize,
) -> Coeff {
    let mut total = Coeff::zero();
    for (u, g1, c1) in a {
        let Some(t) = x.strip_prefix(&u.alpha) else { continue };
        if t.first_edge().is_some_and(|e| u.excluded.contains(e)) {
            continue;
        }
        let w = u.beta.concat(&t).unwrap();
        let Some(q) = g.mul(g.inv(*g1), target) else { continue };
        let g2 = alpha.apply_pow(q, u.degree());
        total += c1 * raw_eval(b, &w, y, g2);
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tail_trees_evaluate_like_their_pieces(raw in raw_function(3)) {
        let f = to_function(&raw);
        let words = words_up_to(3, 3);
        for x in &words {
            for y in &words {
                for g in 0..3 {
                    prop_assert_eq!(f.eval(x, y, g), raw_eval(&raw, x, y, g));
                }
            }
        }
    }

    #[test]
    fn symbolic_convolution_matches_brute_force(
        which in 0usize..3, a in raw_function(4), b in raw_function(4),
    ) {
        let (g, alpha) = match which {
            0 => (FiniteGroupoid::full_relation(2), GroupoidAutomorphism::full_relation_permutation(&[1, 0]).unwrap()),
            1 => (FiniteGroupoid::cyclic_group(4), GroupoidAutomorphism::cyclic_multiplier(4, 3).unwrap()),
            _ => (FiniteGroupoid::cyclic_group(4), GroupoidAutomorphism::identity(4)),
        };
        let be = ConvBackend::Hinf { g: &g, alpha: &alpha };
        let (fa, fb) = (to_function(&a), to_function(&b));
        let ConvElement::Twisted(p) = convolve(&be, &ConvElement::Twisted(fa.clone()), &ConvElement::Twisted(fb.clone())).unwrap() else {
            unreachable!()
        };
        let words = words_up_to(3, 4);
        for x in &words {
            for y in words.iter().filter(|y| y.len() <= 3) {
                for t in 0..g.len() {
                    prop_assert_eq!(p.eval(x, y, t), raw_convolution(&g, &alpha, &a, &b, x, y, t));
                }
            }
        }
        // star reverses products
        let star = |f: &TwistedFunction| involution(&be, &ConvElement::Twisted(f.clone())).unwrap();
        let lhs = involution(&be, &ConvElement::Twisted(p)).unwrap();
        prop_assert_eq!(lhs, convolve(&be, &star(&fb), &star(&fa)).unwrap());
    }
}

#[test]
fn gram_matrix_is_diagonal_and_positive() {
    let (g, alpha) = s3_conjugation();
    let b = ConvBackend::Hinf { g: &g, alpha: &alpha };
    let f: Fun = BTreeMap::from([(0, coeff(1, 0)), (1, coeff(2, -1)), (3, coeff(0, 1))]);
    let xs = [x_times(1, &f), x_times(2, &f)];
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in xs.iter().enumerate() {
            let ip = module_inner_product(&b, x, y).unwrap();
            if i != j {
                assert!(ip.is_empty());
            } else {
                let m = regular_representation(&ConvBackend::Finite(&g), 0, &ConvElement::finite(ip)).unwrap();
                assert!(m.matrix.is_hermitian());
                assert!(m.matrix.is_positive_semidefinite());
            }
        }
    }
}
