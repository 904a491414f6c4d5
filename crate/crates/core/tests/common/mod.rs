#![allow(dead_code)]

use forge_core::families::{GSpec, HSpec};
use forge_core::scalar::{coeff, Coeff};
use proptest::prelude::*;

pub fn h_leaf() -> impl Strategy<Value = HSpec> {
    prop_oneof![
        prop::collection::vec(-3i64..=3, 1..=4).prop_map(|potential| HSpec::Full { potential }),
        (1usize..=3, 1usize..=4).prop_map(|(units, order)| HSpec::Bundle { units, order }),
    ]
}

pub fn h_spec() -> impl Strategy<Value = HSpec> {
    prop_oneof![
        3 => h_leaf(),
        1 => (h_leaf(), h_leaf()).prop_map(|(a, b)| HSpec::Union(Box::new(a), Box::new(b))),
    ]
    .prop_filter("|H| <= 24", |h| h.size() <= 24)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

pub fn g_leaf() -> impl Strategy<Value = GSpec> {
    prop_oneof![
        (1usize..=4).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())
            .prop_map(|perm| GSpec::Full { perm }),
        (1usize..=6).prop_flat_map(|order| {
            let units: Vec<usize> = (1..=order).filter(|&m| gcd(m, order) == 1).collect();
            prop::sample::select(units).prop_map(move |multiplier| GSpec::Cyclic { order, multiplier })
        }),
    ]
}

pub fn g_spec() -> impl Strategy<Value = GSpec> {
    prop_oneof![
        3 => g_leaf(),
        1 => (g_leaf(), g_leaf()).prop_map(|(a, b)| GSpec::Product(Box::new(a), Box::new(b))),
        1 => g_leaf().prop_map(|a| GSpec::Swap(Box::new(a))),
    ]
    .prop_filter("|G| <= 24", |g| g.size() <= 24)
}

pub fn small_coeff() -> impl Strategy<Value = Coeff> {
    (-3i128..=3, -3i128..=3).prop_map(|(a, b)| coeff(a, b))
}
