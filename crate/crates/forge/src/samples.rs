//! Seeded instance families shared by the acceptance suite and the demos.

use std::collections::{BTreeMap, BTreeSet};

use forge_core::families::{GSpec, HSpec};
use forge_core::germ::{hinf, hinf_word, UnitCylinder};
use forge_core::graph::{Eid, Vid};
use forge_core::groupoid::{FiniteGroupoid, GroupoidAutomorphism};
use forge_core::scalar::{coeff, Coeff};
use forge_core::twisted::twisted_product;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn h_leaf(r: &mut impl Rng) -> HSpec {
    if r.gen_bool(0.5) {
        let n = r.gen_range(1..=4);
        HSpec::Full {
            potential: (0..n).map(|_| r.gen_range(-3..=3)).collect(),
        }
    } else {
        HSpec::Bundle {
            units: r.gen_range(1..=3),
            order: r.gen_range(1..=4),
        }
    }
}

/// `|H| ≤ max`.
pub fn h_spec(r: &mut impl Rng, max: usize) -> HSpec {
    loop {
        let h = if r.gen_ratio(1, 4) {
            HSpec::Union(Box::new(h_leaf(r)), Box::new(h_leaf(r)))
        } else {
            h_leaf(r)
        };
        if h.size() <= max {
            return h;
        }
    }
}

fn g_leaf(r: &mut impl Rng) -> GSpec {
    if r.gen_bool(0.5) {
        let n = r.gen_range(1..=4);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(r);
        GSpec::Full { perm }
    } else {
        let order = r.gen_range(1..=6);
        let units: Vec<usize> = (1..=order).filter(|&m| gcd(m, order) == 1).collect();
        GSpec::Cyclic {
            order,
            multiplier: *units.choose(r).expect("1 is a unit"),
        }
    }
}

/// `|G| ≤ max`.
pub fn g_spec(r: &mut impl Rng, max: usize) -> GSpec {
    loop {
        let g = match r.gen_range(0..5) {
            0 => GSpec::Product(Box::new(g_leaf(r)), Box::new(g_leaf(r))),
            1 => GSpec::Swap(Box::new(g_leaf(r))),
            _ => g_leaf(r),
        };
        if g.size() <= max {
            return g;
        }
    }
}

/// `count` pairs with `|H|, |G| ≤ max`.
pub fn twisted_family(seed: u64, count: usize, max: usize) -> Vec<(HSpec, GSpec)> {
    let mut r = rng(seed);
    (0..count).map(|_| (h_spec(&mut r, max), g_spec(&mut r, max))).collect()
}

/// A twisted product with at most `max` elements.
pub fn small_twisted_groupoid(r: &mut impl Rng, max: usize) -> FiniteGroupoid {
    loop {
        let h = h_leaf(r);
        let g = g_spec(r, max);
        if h.size() * g.size() > max {
            continue;
        }
        let (hg, c) = h.build();
        let (gg, a) = g.build().expect("sampled specs are valid");
        return twisted_product(&hg, &c, &gg, &a).expect("valid data").groupoid().clone();
    }
}

/// Small Gaussian-integer coefficients on up to five elements.
pub fn element(r: &mut impl Rng, n: usize) -> BTreeMap<usize, Coeff> {
    let k = r.gen_range(0..=5);
    (0..k)
        .map(|_| (r.gen_range(0..n), coeff(r.gen_range(-3..=3), r.gen_range(-3..=3))))
        .collect()
}

fn s3_conjugation() -> (FiniteGroupoid, GroupoidAutomorphism) {
    let perms: Vec<[usize; 3]> = vec![[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1], [2, 1, 0]];
    let idx = |p: [usize; 3]| perms.iter().position(|q| *q == p).expect("closed");
    let table: Vec<Vec<usize>> = perms
        .iter()
        .map(|a| perms.iter().map(|b| idx([a[b[0]], a[b[1]], a[b[2]]])).collect())
        .collect();
    let g = FiniteGroupoid::group_from_table(&table).expect("S_3");
    let t = [1, 0, 2];
    let perm = perms.iter().map(|p| idx([t[p[t[0]]], t[p[t[1]]], t[p[t[2]]]])).collect();
    (g, GroupoidAutomorphism::new(perm).expect("conjugation"))
}

/// Every finite `G` of at most six elements used for the module identities.
pub fn small_g_family() -> Vec<(&'static str, FiniteGroupoid, GroupoidAutomorphism)> {
    let full2 = FiniteGroupoid::full_relation(2);
    let two = FiniteGroupoid::disjoint_union(&FiniteGroupoid::cyclic_group(1), &FiniteGroupoid::cyclic_group(1));
    let (s3, conj) = s3_conjugation();
    let mult = |k, m| GroupoidAutomorphism::cyclic_multiplier(k, m).expect("unit");
    vec![
        ("Z/1", FiniteGroupoid::cyclic_group(1), GroupoidAutomorphism::identity(1)),
        ("two points, swap", two, GroupoidAutomorphism::new(vec![1, 0]).expect("swap")),
        ("Z/3, a -> 2a", FiniteGroupoid::cyclic_group(3), mult(3, 2)),
        ("Z/3, identity", FiniteGroupoid::cyclic_group(3), GroupoidAutomorphism::identity(3)),
        (
            "R_2, swap",
            full2.clone(),
            GroupoidAutomorphism::full_relation_permutation(&[1, 0]).expect("swap"),
        ),
        ("R_2, identity", full2, GroupoidAutomorphism::identity(4)),
        ("Z/5, a -> 2a", FiniteGroupoid::cyclic_group(5), mult(5, 2)),
        ("Z/6, a -> 5a", FiniteGroupoid::cyclic_group(6), mult(6, 5)),
        ("S_3, conjugation", s3, conj),
    ]
}

/// A basic open `Z(u∖F)` of the `H_∞` unit space, `|u| ≤ 3`, `|F| ≤ 4`.
pub fn hinf_basic_open(r: &mut impl Rng) -> UnitCylinder<Vid, Eid> {
    let len = r.gen_range(0..=3);
    let path: Vec<usize> = (0..len).map(|_| r.gen_range(0..6)).collect();
    let k = r.gen_range(0..=4);
    let excluded: BTreeSet<Eid> = (0..k).map(|_| Eid(r.gen_range(0..10))).collect();
    UnitCylinder::new(&hinf(), hinf_word(&path), excluded).expect("one vertex")
}
