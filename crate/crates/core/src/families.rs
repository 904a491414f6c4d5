//! Parametrised finite instances: groupoids with a cocycle for the `H`
//! side, groupoids with an automorphism for the `G` side.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::groupoid::{Cocycle, FiniteGroupoid, GroupoidAutomorphism, GroupoidError};

/// A finite `H` with an integer cocycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HSpec {
    /// Full relation on `potential.len()` points, `c(i, j) = φ(i) − φ(j)`.
    Full { potential: Vec<i64> },
    /// `units` copies of `ℤ/order` with the zero cocycle.
    Bundle { units: usize, order: usize },
    Union(Box<HSpec>, Box<HSpec>),
}

impl HSpec {
    pub fn build(&self) -> (FiniteGroupoid, Cocycle) {
        match self {
            HSpec::Full { potential } => (
                FiniteGroupoid::full_relation(potential.len()),
                Cocycle::full_relation_potential(potential),
            ),
            HSpec::Bundle { units, order } => {
                let g = FiniteGroupoid::group_bundle(*units, *order);
                let n = g.len();
                (g, Cocycle::zero(n))
            }
            HSpec::Union(a, b) => {
                let (ga, ca) = a.build();
                let (gb, cb) = b.build();
                let mut values = ca.values;
                values.extend(cb.values);
                (FiniteGroupoid::disjoint_union(&ga, &gb), Cocycle { values })
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            HSpec::Full { potential } => potential.len() * potential.len(),
            HSpec::Bundle { units, order } => units * order,
            HSpec::Union(a, b) => a.size() + b.size(),
        }
    }
}

/// A finite `G` with an automorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GSpec {
    /// Full relation on `perm.len()` points, moved by the point permutation.
    Full { perm: Vec<usize> },
    /// `ℤ/order` with `a ↦ multiplier·a`; the multiplier must be a unit mod `order`.
    Cyclic { order: usize, multiplier: usize },
    /// Componentwise product.
    Product(Box<GSpec>, Box<GSpec>),
    /// Two copies of `inner`; `α` carries copy 0 to copy 1 by the inner
    /// automorphism and copy 1 back to copy 0 identically.
    Swap(Box<GSpec>),
}

impl GSpec {
    pub fn build(&self) -> Result<(FiniteGroupoid, GroupoidAutomorphism), GroupoidError> {
        match self {
            GSpec::Full { perm } => Ok((
                FiniteGroupoid::full_relation(perm.len()),
                GroupoidAutomorphism::full_relation_permutation(perm)?,
            )),
            GSpec::Cyclic { order, multiplier } => Ok((
                FiniteGroupoid::cyclic_group(*order),
                GroupoidAutomorphism::cyclic_multiplier(*order, *multiplier)?,
            )),
            GSpec::Product(a, b) => {
                let (ga, aa) = a.build()?;
                let (gb, ab) = b.build()?;
                Ok((FiniteGroupoid::product(&ga, &gb), GroupoidAutomorphism::product(&aa, &ab)))
            }
            GSpec::Swap(inner) => {
                let (g, a) = inner.build()?;
                let n = g.len();
                let perm = (0..n).map(|x| a.apply(x) + n).chain(0..n).collect();
                Ok((FiniteGroupoid::disjoint_union(&g, &g), GroupoidAutomorphism::new(perm)?))
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            GSpec::Full { perm } => perm.len() * perm.len(),
            GSpec::Cyclic { order, .. } => *order,
            GSpec::Product(a, b) => a.size() * b.size(),
            GSpec::Swap(inner) => 2 * inner.size(),
        }
    }
}
