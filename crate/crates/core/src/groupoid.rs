//! Finite groupoids stored as composition tables, with exhaustive checks.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::report::ValidationReport;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupoidError {
    #[error("element {0} is not a unit")]
    NotAUnit(usize),
    #[error("element {0} does not exist")]
    NoSuchElement(usize),
    #[error("expected {expected} entries, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("cocycle rejected: {0}")]
    InvalidCocycle(ValidationReport),
    #[error("automorphism rejected: {0}")]
    InvalidAutomorphism(ValidationReport),
    #[error("groupoid too large for a dense table")]
    TooLarge,
}

/// A finite groupoid: elements `0..n`, range, source, inverse and a dense
/// composition table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroupoid {
    range: Vec<usize>,
    source: Vec<usize>,
    inverse: Vec<usize>,
    table: Vec<u32>,
}

impl FiniteGroupoid {
    /// Builds the table from `mul(g, h)`, consulted only when `s(g) = r(h)`.
    pub fn from_fn(
        range: Vec<usize>,
        source: Vec<usize>,
        inverse: Vec<usize>,
        mut mul: impl FnMut(usize, usize) -> Option<usize>,
    ) -> Result<Self, GroupoidError> {
        let n = range.len();
        if source.len() != n || inverse.len() != n {
            return Err(GroupoidError::SizeMismatch {
                expected: n,
                got: source.len().min(inverse.len()),
            });
        }
        if n >= NONE as usize || n.checked_mul(n).is_none() {
            return Err(GroupoidError::TooLarge);
        }
        let mut by_range: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (g, &r) in range.iter().enumerate() {
            if r >= n {
                return Err(GroupoidError::NoSuchElement(r));
            }
            by_range[r].push(g);
        }
        let mut table = vec![NONE; n * n];
        for g in 0..n {
            let s = source[g];
            if s >= n {
                return Err(GroupoidError::NoSuchElement(s));
            }
            for &h in &by_range[s] {
                if let Some(p) = mul(g, h) {
                    table[g * n + h] = p as u32;
                }
            }
        }
        Ok(FiniteGroupoid {
            range,
            source,
            inverse,
            table,
        })
    }

    /// Builds a groupoid from explicit composition triples `(g, h, gh)`.
    pub fn from_triples(
        range: Vec<usize>,
        source: Vec<usize>,
        inverse: Vec<usize>,
        triples: &[(usize, usize, usize)],
    ) -> Result<Self, GroupoidError> {
        let n = range.len();
        if n >= NONE as usize {
            return Err(GroupoidError::TooLarge);
        }
        let mut table = vec![NONE; n * n];
        for &(g, h, p) in triples {
            if g >= n || h >= n || p >= n {
                return Err(GroupoidError::NoSuchElement(g.max(h).max(p)));
            }
            table[g * n + h] = p as u32;
        }
        if source.len() != n || inverse.len() != n {
            return Err(GroupoidError::SizeMismatch {
                expected: n,
                got: source.len().min(inverse.len()),
            });
        }
        Ok(FiniteGroupoid {
            range,
            source,
            inverse,
            table,
        })
    }

    /// Full equivalence relation on `n` points; `(i, j)` has id `i * n + j`.
    pub fn full_relation(n: usize) -> Self {
        let idx = |i: usize, j: usize| i * n + j;
        let mut range = Vec::with_capacity(n * n);
        let mut source = Vec::with_capacity(n * n);
        let mut inverse = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                range.push(idx(i, i));
                source.push(idx(j, j));
                inverse.push(idx(j, i));
            }
        }
        Self::from_fn(range, source, inverse, |g, h| Some(idx(g / n, h % n)))
            .expect("full relation is well formed")
    }

    /// Cyclic group `ℤ/k` on one unit (element 0).
    pub fn cyclic_group(k: usize) -> Self {
        let inverse = (0..k).map(|a| (k - a) % k).collect();
        Self::from_fn(vec![0; k], vec![0; k], inverse, |a, b| Some((a + b) % k))
            .expect("cyclic group is well formed")
    }

    /// Group from a multiplication table `mul[a][b]` with identity `0`.
    pub fn group_from_table(mul: &[Vec<usize>]) -> Result<Self, GroupoidError> {
        let k = mul.len();
        let mut inverse = vec![0; k];
        for (a, row) in mul.iter().enumerate() {
            if row.len() != k {
                return Err(GroupoidError::SizeMismatch {
                    expected: k,
                    got: row.len(),
                });
            }
            inverse[a] = row
                .iter()
                .position(|&p| p == 0)
                .ok_or(GroupoidError::NoSuchElement(a))?;
        }
        Self::from_fn(vec![0; k], vec![0; k], inverse, |a, b| Some(mul[a][b]))
    }

    /// Disjoint union; elements of `b` are shifted by `a.len()`.
    pub fn disjoint_union(a: &Self, b: &Self) -> Self {
        let off = a.len();
        let range = a
            .range
            .iter()
            .copied()
            .chain(b.range.iter().map(|x| x + off))
            .collect();
        let source = a
            .source
            .iter()
            .copied()
            .chain(b.source.iter().map(|x| x + off))
            .collect();
        let inverse = a
            .inverse
            .iter()
            .copied()
            .chain(b.inverse.iter().map(|x| x + off))
            .collect();
        Self::from_fn(range, source, inverse, |g, h| match (g < off, h < off) {
            (true, true) => a.mul(g, h),
            (false, false) => b.mul(g - off, h - off).map(|p| p + off),
            _ => None,
        })
        .expect("union of tables")
    }

    /// `n` copies of `ℤ/k`, one per unit.
    pub fn group_bundle(n: usize, k: usize) -> Self {
        let mut acc = Self::cyclic_group(k);
        for _ in 1..n {
            acc = Self::disjoint_union(&acc, &Self::cyclic_group(k));
        }
        acc
    }

    /// Cartesian product; `(g, h)` has id `g * b.len() + h`.
    pub fn product(a: &Self, b: &Self) -> Self {
        let m = b.len();
        let pair = |g: usize, h: usize| g * m + h;
        let n = a.len() * m;
        let mut range = Vec::with_capacity(n);
        let mut source = Vec::with_capacity(n);
        let mut inverse = Vec::with_capacity(n);
        for g in 0..a.len() {
            for h in 0..m {
                range.push(pair(a.r(g), b.r(h)));
                source.push(pair(a.s(g), b.s(h)));
                inverse.push(pair(a.inv(g), b.inv(h)));
            }
        }
        Self::from_fn(range, source, inverse, |x, y| {
            Some(pair(a.mul(x / m, y / m)?, b.mul(x % m, y % m)?))
        })
        .expect("product of tables")
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    pub fn r(&self, g: usize) -> usize {
        self.range[g]
    }

    pub fn s(&self, g: usize) -> usize {
        self.source[g]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inverse[g]
    }

    /// `gh`, defined when `s(g) = r(h)`.
    pub fn mul(&self, g: usize, h: usize) -> Option<usize> {
        let p = self.table[g * self.len() + h];
        (p != NONE).then_some(p as usize)
    }

    pub fn is_unit(&self, g: usize) -> bool {
        self.range[g] == g && self.source[g] == g
    }

    pub fn units(&self) -> Vec<usize> {
        (0..self.len()).filter(|&g| self.is_unit(g)).collect()
    }

    /// Composition triples `(g, h, gh)` in table order.
    pub fn triples(&self) -> Vec<(usize, usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for g in 0..n {
            for h in 0..n {
                if let Some(p) = self.mul(g, h) {
                    out.push((g, h, p));
                }
            }
        }
        out
    }

    /// Elements with range `u`, per unit.
    pub fn fibers_by_range(&self) -> Vec<Vec<usize>> {
        let mut by_range = vec![Vec::new(); self.len()];
        for g in 0..self.len() {
            by_range[self.r(g)].push(g);
        }
        by_range
    }

    fn require_unit(&self, u: usize) -> Result<(), GroupoidError> {
        if u >= self.len() {
            return Err(GroupoidError::NoSuchElement(u));
        }
        if !self.is_unit(u) {
            return Err(GroupoidError::NotAUnit(u));
        }
        Ok(())
    }

    /// All `g` with `r(g) = s(g) = u`.
    pub fn isotropy_group(&self, u: usize) -> Result<Vec<usize>, GroupoidError> {
        self.require_unit(u)?;
        Ok((0..self.len())
            .filter(|&g| self.r(g) == u && self.s(g) == u)
            .collect())
    }

    /// `r(G_u)`, sorted.
    pub fn orbit(&self, u: usize) -> Result<Vec<usize>, GroupoidError> {
        self.require_unit(u)?;
        let set: BTreeSet<usize> = (0..self.len())
            .filter(|&g| self.s(g) == u)
            .map(|g| self.r(g))
            .collect();
        Ok(set.into_iter().collect())
    }

    /// Orbit index of every unit (`usize::MAX` for non-units).
    pub fn orbit_labels(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.len()];
        let mut next = 0;
        for u in self.units() {
            if label[u] != usize::MAX {
                continue;
            }
            for v in self.orbit(u).expect("unit") {
                label[v] = next;
            }
            next += 1;
        }
        label
    }

    pub fn is_principal(&self) -> bool {
        (0..self.len()).all(|g| self.r(g) != self.s(g) || self.is_unit(g))
    }

    /// Single orbit.
    pub fn is_minimal(&self) -> bool {
        let units = self.units();
        match units.first() {
            Some(&u) => self.orbit(u).map(|o| o.len() == units.len()).unwrap_or(false),
            None => true,
        }
    }

    /// `G × K_N` with `K_N` the full relation on `{-N, …, N}`.
    pub fn product_with_full_relation(&self, n: usize) -> Self {
        Self::product(self, &Self::full_relation(2 * n + 1))
    }
}

/// Exhaustive check of the groupoid axioms.
pub fn verify_groupoid_axioms(g: &FiniteGroupoid) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let n = g.len();
    for x in 0..n {
        let (r, s, i) = (g.r(x), g.s(x), g.inv(x));
        if r >= n || s >= n || i >= n {
            rep.push("structure maps in range", format!("element {x}"));
            continue;
        }
        if !g.is_unit(r) {
            rep.push("range is a unit", format!("element {x}"));
        }
        if !g.is_unit(s) {
            rep.push("source is a unit", format!("element {x}"));
        }
    }
    if !rep.passed() {
        return rep;
    }
    for x in 0..n {
        for y in 0..n {
            let composable = g.s(x) == g.r(y);
            match (composable, g.mul(x, y)) {
                (true, None) => rep.push("composition defined", format!("pair ({x}, {y})")),
                (false, Some(_)) => rep.push("composition only when s(g) = r(h)", format!("pair ({x}, {y})")),
                (true, Some(p)) => {
                    if g.r(p) != g.r(x) || g.s(p) != g.s(y) {
                        rep.push("product preserves range and source", format!("pair ({x}, {y})"));
                    }
                }
                (false, None) => {}
            }
        }
    }
    for x in 0..n {
        let (r, s, i) = (g.r(x), g.s(x), g.inv(x));
        if g.mul(r, x) != Some(x) || g.mul(x, s) != Some(x) {
            rep.push("units act trivially", format!("element {x}"));
        }
        if g.mul(i, x) != Some(s) || g.mul(x, i) != Some(r) {
            rep.push("inverse", format!("element {x}"));
        }
    }
    if !rep.passed() {
        return rep;
    }
    let fibers = g.fibers_by_range();
    for x in 0..n {
        for &y in &fibers[g.s(x)] {
            let xy = g.mul(x, y).expect("checked above");
            for &z in &fibers[g.s(y)] {
                let yz = g.mul(y, z).expect("checked above");
                if g.mul(xy, z) != g.mul(x, yz) {
                    rep.push("associativity", format!("triple ({x}, {y}, {z})"));
                }
            }
        }
    }
    rep
}

/// Integer label per element, additive over composition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cocycle {
    pub values: Vec<i64>,
}

impl Cocycle {
    pub fn zero(n: usize) -> Self {
        Cocycle { values: vec![0; n] }
    }

    /// `c(i, j) = φ(i) − φ(j)` on the full relation on `φ.len()` points.
    pub fn full_relation_potential(phi: &[i64]) -> Self {
        let n = phi.len();
        Cocycle {
            values: (0..n * n).map(|x| phi[x / n] - phi[x % n]).collect(),
        }
    }

    /// `c(g, h) = c_a(g) + c_b(h)` on [`FiniteGroupoid::product`].
    pub fn product(a: &Cocycle, b: &Cocycle) -> Self {
        let m = b.values.len();
        Cocycle {
            values: (0..a.values.len() * m)
                .map(|x| a.values[x / m] + b.values[x % m])
                .collect(),
        }
    }

    pub fn value(&self, g: usize) -> i64 {
        self.values[g]
    }

    /// Additivity over all composable pairs, vanishing on units.
    pub fn check(&self, g: &FiniteGroupoid) -> ValidationReport {
        let mut rep = ValidationReport::new();
        if self.values.len() != g.len() {
            rep.push("one label per element", format!("{} labels", self.values.len()));
            return rep;
        }
        for u in g.units() {
            if self.values[u] != 0 {
                rep.push("vanishes on units", format!("unit {u}"));
            }
        }
        for x in 0..g.len() {
            for y in 0..g.len() {
                if let Some(p) = g.mul(x, y) {
                    if self.values[p] != self.values[x] + self.values[y] {
                        rep.push("additive", format!("pair ({x}, {y})"));
                    }
                }
            }
        }
        rep
    }
}

/// A bijection of elements, with constant-time integer powers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupoidAutomorphism {
    perm: Vec<usize>,
    cycle_of: Vec<(usize, usize)>,
    cycles: Vec<Vec<usize>>,
}

impl GroupoidAutomorphism {
    /// Fails only if `perm` is not a permutation of `0..perm.len()`.
    pub fn new(perm: Vec<usize>) -> Result<Self, GroupoidError> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                let mut rep = ValidationReport::new();
                rep.push("bijection", format!("image {p}"));
                return Err(GroupoidError::InvalidAutomorphism(rep));
            }
            seen[p] = true;
        }
        let mut cycle_of = vec![(0, 0); n];
        let mut cycles = Vec::new();
        let mut done = vec![false; n];
        for start in 0..n {
            if done[start] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut x = start;
            while !done[x] {
                done[x] = true;
                cycle_of[x] = (cycles.len(), cyc.len());
                cyc.push(x);
                x = perm[x];
            }
            cycles.push(cyc);
        }
        Ok(GroupoidAutomorphism {
            perm,
            cycle_of,
            cycles,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).collect()).expect("identity")
    }

    /// `(i, j) ↦ (π(i), π(j))` on the full relation on `π.len()` points.
    pub fn full_relation_permutation(pi: &[usize]) -> Result<Self, GroupoidError> {
        let n = pi.len();
        Self::new((0..n * n).map(|x| pi[x / n] * n + pi[x % n]).collect())
    }

    /// `a ↦ m·a` on `ℤ/k`; an automorphism when `gcd(m, k) = 1`.
    pub fn cyclic_multiplier(k: usize, m: usize) -> Result<Self, GroupoidError> {
        Self::new((0..k).map(|a| (a * m) % k).collect())
    }

    /// Componentwise on [`FiniteGroupoid::product`].
    pub fn product(a: &Self, b: &Self) -> Self {
        let m = b.len();
        Self::new(
            (0..a.len() * m)
                .map(|x| a.apply(x / m) * m + b.apply(x % m))
                .collect(),
        )
        .expect("product of permutations")
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn apply(&self, g: usize) -> usize {
        self.perm[g]
    }

    /// `α^k(g)` for any integer `k`.
    pub fn apply_pow(&self, g: usize, k: i64) -> usize {
        let (c, pos) = self.cycle_of[g];
        let cyc = &self.cycles[c];
        let len = cyc.len() as i64;
        cyc[(pos as i64 + k).rem_euclid(len) as usize]
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// lcm of cycle lengths.
    pub fn order(&self) -> u128 {
        self.cycles
            .iter()
            .fold(1u128, |acc, c| crate::scalar::lcm_u128(acc, c.len() as u128).unwrap_or(u128::MAX))
    }

    pub fn pow(&self, k: i64) -> Self {
        Self::new((0..self.len()).map(|g| self.apply_pow(g, k)).collect()).expect("power")
    }

    /// Preserves units, range, source, inverse and composition.
    pub fn check(&self, g: &FiniteGroupoid) -> ValidationReport {
        let mut rep = ValidationReport::new();
        if self.len() != g.len() {
            rep.push("acts on every element", format!("{} images", self.len()));
            return rep;
        }
        for x in 0..g.len() {
            let a = self.apply(x);
            if g.is_unit(x) != g.is_unit(a) {
                rep.push("preserves units", format!("element {x}"));
            }
            if g.r(a) != self.apply(g.r(x)) || g.s(a) != self.apply(g.s(x)) {
                rep.push("preserves range and source", format!("element {x}"));
            }
            if g.inv(a) != self.apply(g.inv(x)) {
                rep.push("preserves inverses", format!("element {x}"));
            }
        }
        for x in 0..g.len() {
            for y in 0..g.len() {
                if let Some(p) = g.mul(x, y) {
                    if g.mul(self.apply(x), self.apply(y)) != Some(self.apply(p)) {
                        rep.push("preserves composition", format!("pair ({x}, {y})"));
                    }
                }
            }
        }
        rep
    }
}
