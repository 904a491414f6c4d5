//! Twisted products `H ×_{c,α} G`: the finite materialisation, elements of
//! `G^∞_α = H_∞ ×_{c,α} G`, and bounded certificates for orbit freeness,
//! local contraction and minimality.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::dimension::{rank2_k_matrices, DimensionError};
use crate::germ::{
    bisection_product, find_cylinder_inside, hinf, hinf_word, lift_graph_automorphism, BasicBisection, GermElement,
    GermError, HinfOpen, Tail, UnitCylinder,
};
use crate::graph::{BEdge, BVertex, BratteliDiagram, EdgeCycle, Eid, GraphError, PathWord, Vid};
use crate::groupoid::{Cocycle, FiniteGroupoid, GroupoidAutomorphism, GroupoidError};
use crate::rank2::{Rank2Automorphism, Rank2Diagram, RBlue, RVertex};
use crate::report::Verdict;
use crate::scalar::IntMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TwistedError {
    #[error(transparent)]
    Groupoid(#[from] GroupoidError),
    #[error(transparent)]
    Germ(#[from] GermError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error("depth {depth} needs edge level {depth}, the diagram stops at {horizon}")]
    DepthBeyondHorizon { depth: usize, horizon: usize },
    #[error("no lc witness given; run check_lc on the G-part first")]
    MissingLc,
    #[error("alpha^-{0}(V) is not contained in V")]
    LcFails(u64),
    #[error("no l <= {0} with alpha^-l(V) inside V")]
    OrbitCap(u64),
}

/// `H ×_{c,α} G` for finite `H` and `G`; the pair `(h, g)` has id `h·|G| + g`.
#[derive(Debug, Clone)]
pub struct TwistedProduct {
    h: FiniteGroupoid,
    c: Cocycle,
    g: FiniteGroupoid,
    alpha: GroupoidAutomorphism,
    groupoid: FiniteGroupoid,
}

/// Validates `c` and `α`, then builds the composition table:
/// `r(h,g) = (r h, r g)`, `s(h,g) = (s h, α^{c(h)}(s g))`,
/// `(h₁,g₁)(h₂,g₂) = (h₁h₂, g₁·α^{−c(h₁)}(g₂))`, `(h,g)⁻¹ = (h⁻¹, α^{c(h)}(g⁻¹))`.
pub fn twisted_product(
    h: &FiniteGroupoid,
    c: &Cocycle,
    g: &FiniteGroupoid,
    alpha: &GroupoidAutomorphism,
) -> Result<TwistedProduct, GroupoidError> {
    let rep = c.check(h);
    if !rep.passed() {
        return Err(GroupoidError::InvalidCocycle(rep));
    }
    let rep = alpha.check(g);
    if !rep.passed() {
        return Err(GroupoidError::InvalidAutomorphism(rep));
    }
    let m = g.len();
    let n = h.len().checked_mul(m).ok_or(GroupoidError::TooLarge)?;
    let split = |x: usize| (x / m, x % m);
    let mut range = Vec::with_capacity(n);
    let mut source = Vec::with_capacity(n);
    let mut inverse = Vec::with_capacity(n);
    for x in 0..n {
        let (hh, gg) = split(x);
        let ch = c.value(hh);
        range.push(h.r(hh) * m + g.r(gg));
        source.push(h.s(hh) * m + alpha.apply_pow(g.s(gg), ch));
        inverse.push(h.inv(hh) * m + alpha.apply_pow(g.inv(gg), ch));
    }
    let groupoid = FiniteGroupoid::from_fn(range, source, inverse, |x, y| {
        let ((h1, g1), (h2, g2)) = (split(x), split(y));
        let hh = h.mul(h1, h2)?;
        let gg = g.mul(g1, alpha.apply_pow(g2, -c.value(h1)))?;
        Some(hh * m + gg)
    })?;
    Ok(TwistedProduct {
        h: h.clone(),
        c: c.clone(),
        g: g.clone(),
        alpha: alpha.clone(),
        groupoid,
    })
}

impl TwistedProduct {
    pub fn groupoid(&self) -> &FiniteGroupoid {
        &self.groupoid
    }

    pub fn h(&self) -> &FiniteGroupoid {
        &self.h
    }

    pub fn g(&self) -> &FiniteGroupoid {
        &self.g
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.c
    }

    pub fn alpha(&self) -> &GroupoidAutomorphism {
        &self.alpha
    }

    pub fn id(&self, h: usize, g: usize) -> usize {
        h * self.g.len() + g
    }

    pub fn pair(&self, x: usize) -> (usize, usize) {
        (x / self.g.len(), x % self.g.len())
    }

    /// Exhaustive isotropy scan of the materialised groupoid.
    pub fn is_principal(&self) -> bool {
        self.groupoid.is_principal()
    }

    /// Nonzero cocycle values taken on isotropy of `H`.
    pub fn isotropy_degrees(&self) -> BTreeSet<i64> {
        (0..self.h.len())
            .filter(|&x| self.h.r(x) == self.h.s(x))
            .map(|x| self.c.value(x))
            .filter(|&v| v != 0)
            .collect()
    }

    /// `H` and `G` principal and no unit `y` of `G` with `[y] = [α^l(y)]`
    /// for a nonzero `l` the cocycle takes on isotropy of `H`.
    pub fn principal_by_orbit_criterion(&self) -> bool {
        if !self.h.is_principal() || !self.g.is_principal() {
            return false;
        }
        let labels = self.g.orbit_labels();
        self.isotropy_degrees().into_iter().all(|l| {
            self.g
                .units()
                .into_iter()
                .all(|y| labels[y] != labels[self.alpha.apply_pow(y, l)])
        })
    }
}

/// An element `(h, g)` of `G^∞_α` with `h` a germ of `H_∞` and `c(h)` its degree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct HinfTwisted {
    pub h: GermElement<Vid, Eid>,
    pub g: usize,
}

impl HinfTwisted {
    pub fn degree(&self) -> i64 {
        self.h.degree()
    }

    /// G-coordinate of the range.
    pub fn g_range(&self, g: &FiniteGroupoid) -> usize {
        g.r(self.g)
    }

    /// G-coordinate of the source, `α^{c(h)}(s(g))`.
    pub fn g_source(&self, g: &FiniteGroupoid, alpha: &GroupoidAutomorphism) -> usize {
        alpha.apply_pow(g.s(self.g), self.degree())
    }

    pub fn inverse(&self, g: &FiniteGroupoid, alpha: &GroupoidAutomorphism) -> Self {
        HinfTwisted {
            h: self.h.inverse(),
            g: alpha.apply_pow(g.inv(self.g), self.degree()),
        }
    }

    /// `Ok(None)` when the pair is not composable.
    pub fn product(
        &self,
        other: &Self,
        g: &FiniteGroupoid,
        alpha: &GroupoidAutomorphism,
    ) -> Result<Option<Self>, GermError> {
        let Some(h) = self.h.product(&other.h)? else {
            return Ok(None);
        };
        Ok(g.mul(self.g, alpha.apply_pow(other.g, -self.degree()))
            .map(|gg| HinfTwisted { h, g: gg }))
    }
}

/// The G-side of a twisted product, with its automorphism.
#[derive(Debug, Clone, Copy)]
pub enum GBackend<'a> {
    Finite {
        groupoid: &'a FiniteGroupoid,
        alpha: &'a GroupoidAutomorphism,
    },
    Af(&'a EdgeCycle),
    Rank2(&'a Rank2Automorphism),
}

/// One ruled-out shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WfcWitness {
    /// No unit `y` of the finite groupoid lies in the orbit of `α^l(y)`.
    Finite { l: i64 },
    /// No multiplicity on levels `level..=through` divides `l`.
    Af { l: i64, level: usize, through: usize },
    /// `l·m_t − s` is nonzero modulo every `o(e)` on levels `level..=through`.
    Rank2 {
        l: i64,
        s: u64,
        level: usize,
        through: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WfcCounterexample {
    /// `arrow` goes from `unit` to `α^l(unit)`.
    FiniteUnit { unit: usize, l: i64, arrow: usize },
    /// The path starting at `start` that repeats `period` forever; every
    /// edge is fixed by `α^l`, so `α^l(x) = x`.
    PeriodicPath { l: i64, start: BVertex, period: Vec<BEdge> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WfcOutcome {
    Certificate(Vec<WfcWitness>),
    Counterexample(WfcCounterexample),
    /// Shifts (and red offsets in the rank-2 case) not settled at this depth.
    Unknown(Vec<(i64, Option<u64>)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WfcCertificate {
    pub depth: usize,
    pub lbound: i64,
    pub outcome: WfcOutcome,
    /// Rank-2 only: `(n, min o(e), n·m_n, min o(e) > n·m_n)` for `n ≤ depth`.
    pub order_table: Vec<(usize, u128, u128, bool)>,
}

impl WfcCertificate {
    pub fn verdict(&self) -> Verdict {
        match self.outcome {
            WfcOutcome::Certificate(_) => Verdict::Yes,
            WfcOutcome::Counterexample(_) => Verdict::No,
            WfcOutcome::Unknown(_) => Verdict::Unknown,
        }
    }
}

fn shifts(lbound: i64) -> impl Iterator<Item = i64> {
    (1..=lbound).flat_map(|l| [l, -l])
}

/// Orbit freeness `[x] = [α^l(x)] ⇒ l = 0`, checked for `0 < |l| ≤ lbound`
/// at levels up to `depth`.
pub fn check_wfc(backend: &GBackend<'_>, depth: usize, lbound: i64) -> Result<WfcCertificate, TwistedError> {
    let mut cert = WfcCertificate {
        depth,
        lbound,
        outcome: WfcOutcome::Certificate(Vec::new()),
        order_table: Vec::new(),
    };
    cert.outcome = match backend {
        GBackend::Finite { groupoid, alpha } => wfc_finite(groupoid, alpha, lbound),
        GBackend::Af(a) => wfc_af(a, depth, lbound)?,
        GBackend::Rank2(a) => {
            let d = a.diagram();
            if depth >= d.horizon() {
                return Err(TwistedError::DepthBeyondHorizon {
                    depth,
                    horizon: d.horizon(),
                });
            }
            cert.order_table = a.orders().growth_table().into_iter().take(depth + 1).collect();
            wfc_rank2(a, depth, lbound)
        }
    };
    Ok(cert)
}

fn wfc_finite(g: &FiniteGroupoid, alpha: &GroupoidAutomorphism, lbound: i64) -> WfcOutcome {
    let labels = g.orbit_labels();
    let mut witnesses = Vec::new();
    for l in shifts(lbound) {
        for y in g.units() {
            let ay = alpha.apply_pow(y, l);
            if labels[y] == labels[ay] {
                let arrow = (0..g.len())
                    .find(|&x| g.s(x) == y && g.r(x) == ay)
                    .expect("same orbit");
                return WfcOutcome::Counterexample(WfcCounterexample::FiniteUnit { unit: y, l, arrow });
            }
        }
        witnesses.push(WfcWitness::Finite { l });
    }
    WfcOutcome::Certificate(witnesses)
}

fn af_level_rules_out(m: &IntMatrix, l: i64) -> bool {
    m.entries().iter().all(|&k| k <= 0 || (l as i128) % k != 0)
}

fn wfc_af(a: &EdgeCycle, depth: usize, lbound: i64) -> Result<WfcOutcome, TwistedError> {
    let d = a.diagram();
    let mats: Vec<&IntMatrix> = (0..=depth)
        .map(|t| d.k_matrix(t))
        .collect::<Option<_>>()
        .ok_or(TwistedError::DepthBeyondHorizon {
            depth,
            horizon: d.horizon(),
        })?;
    let mut witnesses = Vec::new();
    let mut undecided = Vec::new();
    for l in shifts(lbound) {
        let mut p = depth + 1;
        while p > 0 && af_level_rules_out(mats[p - 1], l) {
            p -= 1;
        }
        if p <= depth {
            witnesses.push(WfcWitness::Af {
                l,
                level: p,
                through: depth,
            });
            continue;
        }
        if let Some(cx) = af_periodic_fixed_path(d, l) {
            return Ok(WfcOutcome::Counterexample(cx));
        }
        undecided.push((l, None));
    }
    Ok(if undecided.is_empty() {
        WfcOutcome::Certificate(witnesses)
    } else {
        WfcOutcome::Unknown(undecided)
    })
}

/// Looks for a loop through the repeating block using only edges whose
/// multiplicity divides `l`.
fn af_periodic_fixed_path(d: &BratteliDiagram, l: i64) -> Option<WfcCounterexample> {
    let p = d.repeat_from()?;
    let top = d.horizon();
    let period = top - p;
    let n = d.level_size(p)?;
    let allowed = |t: usize, u: usize, w: usize| {
        d.multiplicity(t, u, w)
            .is_some_and(|k| k > 0 && (l as i128) % k == 0)
    };
    // block paths from each vertex of level p to level `top`
    let mut block: Vec<BTreeMap<usize, Vec<BEdge>>> = Vec::with_capacity(n);
    for v in 0..n {
        let mut layer: BTreeMap<usize, Vec<BEdge>> = BTreeMap::new();
        layer.insert(v, Vec::new());
        for t in p..top {
            let mut next: BTreeMap<usize, Vec<BEdge>> = BTreeMap::new();
            for (&u, path) in &layer {
                for w in 0..d.level_size(t + 1)? {
                    if allowed(t, u, w) && !next.contains_key(&w) {
                        let mut q = path.clone();
                        q.push(BEdge {
                            level: t,
                            range: u,
                            source: w,
                            label: 0,
                        });
                        next.insert(w, q);
                    }
                }
            }
            layer = next;
        }
        block.push(layer);
    }
    for start in 0..n {
        // BFS over block steps back to `start`
        let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        let mut closing = None;
        while let Some(u) = queue.pop_front() {
            for &w in block[u].keys() {
                if w == start {
                    closing = Some(u);
                    break;
                }
                if let alloc::collections::btree_map::Entry::Vacant(e) = parent.entry(w) {
                    e.insert(u);
                    queue.push_back(w);
                }
            }
            if closing.is_some() {
                break;
            }
        }
        let Some(last) = closing else { continue };
        let mut chain = vec![start];
        let mut x = last;
        while x != start {
            chain.push(x);
            x = parent[&x];
        }
        chain[1..].reverse();
        chain.push(start);
        let mut edges = Vec::new();
        for (j, w) in chain.windows(2).enumerate() {
            for e in &block[w[0]][&w[1]] {
                edges.push(BEdge {
                    level: e.level + j * period,
                    ..*e
                });
            }
        }
        return Some(WfcCounterexample::PeriodicPath {
            l,
            start: BVertex { level: p, index: start },
            period: edges,
        });
    }
    None
}

fn rank2_level_rules_out(a: &Rank2Automorphism, t: usize, l: i64, s: u64, orders: &BTreeSet<u128>) -> bool {
    let m = a.m(t);
    orders.iter().all(|&o| {
        let o = o as i128;
        let lm = ((l as i128).rem_euclid(o) * (m % o as u128) as i128).rem_euclid(o);
        (lm - (s as i128).rem_euclid(o)).rem_euclid(o) != 0
    })
}

fn wfc_rank2(a: &Rank2Automorphism, depth: usize, lbound: i64) -> WfcOutcome {
    let level_orders: Vec<BTreeSet<u128>> = (0..=depth)
        .map(|t| a.orders().o[t].iter().copied().collect())
        .collect();
    let mut pairs: Vec<(i64, u64)> = Vec::new();
    for s in 1..=lbound as u64 {
        pairs.push((0, s));
    }
    for l in shifts(lbound) {
        for s in 0..=lbound as u64 {
            pairs.push((l, s));
        }
    }
    let mut witnesses = Vec::new();
    let mut undecided = Vec::new();
    for (l, s) in pairs {
        let mut p = depth + 1;
        while p > 0 && rank2_level_rules_out(a, p - 1, l, s, &level_orders[p - 1]) {
            p -= 1;
        }
        if p <= depth {
            witnesses.push(WfcWitness::Rank2 {
                l,
                s,
                level: p,
                through: depth,
            });
        } else {
            undecided.push((l, Some(s)));
        }
    }
    if undecided.is_empty() {
        WfcOutcome::Certificate(witnesses)
    } else {
        WfcOutcome::Unknown(undecided)
    }
}

/// Recomputes every witness of a certificate from the backend.
pub fn reverify_wfc(backend: &GBackend<'_>, cert: &WfcCertificate) -> bool {
    match (&cert.outcome, backend) {
        (WfcOutcome::Certificate(ws), _) => ws.iter().all(|w| match (w, backend) {
            (WfcWitness::Finite { l }, GBackend::Finite { groupoid, alpha }) => {
                let labels = groupoid.orbit_labels();
                groupoid
                    .units()
                    .into_iter()
                    .all(|y| labels[y] != labels[alpha.apply_pow(y, *l)])
            }
            (WfcWitness::Af { l, level, through }, GBackend::Af(a)) => (*level..=*through).all(|t| {
                a.diagram()
                    .k_matrix(t)
                    .is_some_and(|m| af_level_rules_out(m, *l))
            }),
            (WfcWitness::Rank2 { l, s, level, through }, GBackend::Rank2(a)) => (*level..=*through).all(|t| {
                let os: BTreeSet<u128> = a.orders().o[t].iter().copied().collect();
                rank2_level_rules_out(a, t, *l, *s, &os)
            }),
            _ => false,
        }),
        (WfcOutcome::Counterexample(WfcCounterexample::FiniteUnit { unit, l, arrow }), GBackend::Finite { groupoid, alpha }) => {
            groupoid.s(*arrow) == *unit && groupoid.r(*arrow) == alpha.apply_pow(*unit, *l)
        }
        (WfcOutcome::Counterexample(WfcCounterexample::PeriodicPath { l, start, period }), GBackend::Af(a)) => {
            let d = a.diagram();
            let closes = period.first().is_some_and(|e| e.level == start.level && e.range == start.index)
                && period.last().is_some_and(|e| {
                    d.level_size(e.level + 1) == d.level_size(start.level) && e.source == start.index
                });
            let linked = period.windows(2).all(|w| w[0].source == w[1].range && w[0].level + 1 == w[1].level);
            let fixed = period.iter().all(|e| {
                d.multiplicity(e.level, e.range, e.source)
                    .is_some_and(|k| k > 0 && (*l as i128) % k == 0 && (e.label as i128) < k)
            });
            let periodic = d.repeat_from().is_some_and(|p| {
                let len = period.len();
                len > 0 && start.level >= p && len % (d.horizon() - p) == 0
            });
            closes && linked && fixed && periodic
        }
        _ => false,
    }
}

/// Unit sets on which the automorphism of `G` acts.
pub trait UnitBackend {
    type Set: Clone + PartialEq + fmt::Debug;

    /// `α^k(V)`.
    fn pow_set(&self, v: &Self::Set, k: i64) -> Self::Set;
    fn subset(&self, a: &Self::Set, b: &Self::Set) -> Result<bool, TwistedError>;
    fn is_empty(&self, a: &Self::Set) -> Result<bool, TwistedError>;
    fn describe(&self, a: &Self::Set) -> String;
}

/// Subsets of the units of a finite groupoid.
pub struct FiniteUnits<'a> {
    pub groupoid: &'a FiniteGroupoid,
    pub alpha: &'a GroupoidAutomorphism,
}

impl UnitBackend for FiniteUnits<'_> {
    type Set = BTreeSet<usize>;

    fn pow_set(&self, v: &BTreeSet<usize>, k: i64) -> BTreeSet<usize> {
        v.iter().map(|&x| self.alpha.apply_pow(x, k)).collect()
    }

    fn subset(&self, a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> Result<bool, TwistedError> {
        Ok(a.is_subset(b))
    }

    fn is_empty(&self, a: &BTreeSet<usize>) -> Result<bool, TwistedError> {
        Ok(a.is_empty())
    }

    fn describe(&self, a: &BTreeSet<usize>) -> String {
        format!("{a:?}")
    }
}

/// Cylinders `Z(μ∖F)` of an AF path space under an edge-cycle automorphism.
pub struct AfUnits<'a>(pub &'a EdgeCycle);

impl UnitBackend for AfUnits<'_> {
    type Set = UnitCylinder<BVertex, BEdge>;

    fn pow_set(&self, v: &Self::Set, k: i64) -> Self::Set {
        lift_graph_automorphism(self.0).cylinder::<BratteliDiagram>(v, k)
    }

    fn subset(&self, a: &Self::Set, b: &Self::Set) -> Result<bool, TwistedError> {
        Ok(a.is_subset(self.0.diagram(), b)?)
    }

    fn is_empty(&self, a: &Self::Set) -> Result<bool, TwistedError> {
        Ok(a.is_empty(self.0.diagram())?)
    }

    fn describe(&self, a: &Self::Set) -> String {
        format!("{a}")
    }
}

/// Cylinders of a rank-2 path space; `Z(λ)` depends only on the blue part.
pub struct Rank2Units<'a>(pub &'a Rank2Automorphism);

impl UnitBackend for Rank2Units<'_> {
    type Set = UnitCylinder<RVertex, RBlue>;

    fn pow_set(&self, v: &Self::Set, k: i64) -> Self::Set {
        lift_graph_automorphism(self.0).cylinder::<Rank2Diagram>(v, k)
    }

    fn subset(&self, a: &Self::Set, b: &Self::Set) -> Result<bool, TwistedError> {
        Ok(a.is_subset(self.0.diagram(), b)?)
    }

    fn is_empty(&self, a: &Self::Set) -> Result<bool, TwistedError> {
        Ok(a.is_empty(self.0.diagram())?)
    }

    fn describe(&self, a: &Self::Set) -> String {
        format!("{a}")
    }
}

/// The one-point groupoid.
pub struct TrivialUnits;

impl UnitBackend for TrivialUnits {
    type Set = ();

    fn pow_set(&self, _v: &(), _k: i64) {}

    fn subset(&self, _a: &(), _b: &()) -> Result<bool, TwistedError> {
        Ok(true)
    }

    fn is_empty(&self, _a: &()) -> Result<bool, TwistedError> {
        Ok(false)
    }

    fn describe(&self, _a: &()) -> String {
        String::from("{*}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcEntry<S> {
    pub set: S,
    pub l: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcWitness<S> {
    pub entries: Vec<LcEntry<S>>,
}

/// Least `l ≥ 1` with `α^{−l}(V) ⊆ V`, searched up to `cap`.
pub fn least_lc<B: UnitBackend>(b: &B, v: &B::Set, cap: u64) -> Result<u64, TwistedError> {
    for l in 1..=cap {
        if b.subset(&b.pow_set(v, -(l as i64)), v)? {
            return Ok(l);
        }
    }
    Err(TwistedError::OrbitCap(cap))
}

pub fn check_lc<B: UnitBackend>(b: &B, sample: &[B::Set], cap: u64) -> Result<LcWitness<B::Set>, TwistedError> {
    let entries = sample
        .iter()
        .map(|v| {
            least_lc(b, v, cap).map(|l| LcEntry { set: v.clone(), l })
        })
        .collect::<Result<_, _>>()?;
    Ok(LcWitness { entries })
}

pub fn verify_lc<B: UnitBackend>(b: &B, v: &B::Set, l: u64) -> Result<bool, TwistedError> {
    Ok(l >= 1 && b.subset(&b.pow_set(v, -(l as i64)), v)?)
}

/// `B = U × S` with `U` a basic bisection of `H_∞` and `S` a unit set of `G`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractingWitness<S> {
    pub lambda: PathWord<Vid, Eid>,
    pub l: u64,
    pub n: usize,
    pub bisection: BasicBisection<Vid, Eid>,
    /// G-part of `r(B)`; `B` consists of the pairs `(h, g)` with `g` in it.
    pub g_range: S,
    /// G-part of `s(B)`, `α^{c(U)}` of the above.
    pub g_source: S,
    pub checks: Vec<(&'static str, bool)>,
}

impl<S> ContractingWitness<S> {
    pub fn verified(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }

    pub fn range_h(&self) -> UnitCylinder<Vid, Eid> {
        self.bisection.range_set()
    }

    pub fn source_h(&self) -> UnitCylinder<Vid, Eid> {
        self.bisection.source_set()
    }
}

fn sub_h(a: &UnitCylinder<Vid, Eid>, b: &UnitCylinder<Vid, Eid>) -> Result<bool, TwistedError> {
    Ok(a.is_subset(&hinf(), b)?)
}

/// Re-derives `BB⁻¹ = r(B)` and `B⁻¹B = s(B)` through the bisection product.
fn product_checks<B: UnitBackend>(
    b: &B,
    u: &BasicBisection<Vid, Eid>,
    g_range: &B::Set,
    g_source: &B::Set,
) -> Result<Vec<(&'static str, bool)>, TwistedError> {
    let c = u.degree();
    let single = |s: &crate::germ::BisectionSum<Vid, Eid>, want: &UnitCylinder<Vid, Eid>| {
        s.pieces().len() == 1 && s.pieces()[0] == BasicBisection::diagonal(want)
    };
    let bb = bisection_product(u, &u.inverse());
    let bb_g = b.pow_set(&b.pow_set(g_range, c), -c);
    let rr = single(&bb, &u.range_set()) && b.subset(g_range, &bb_g)? && b.subset(&bb_g, g_range)?;
    let ib = bisection_product(&u.inverse(), u);
    let ib_g = b.pow_set(g_range, c);
    let ss = single(&ib, &u.source_set()) && b.subset(g_source, &ib_g)? && b.subset(&ib_g, g_source)?;
    Ok(vec![("B B^-1 = r(B)", rr), ("B^-1 B = s(B)", ss)])
}

/// `B = Z(λ^{2l}, λ^l) × α^{−Nl}(V_G)` with `Z(λ) ⊆ V_H`, `N = |λ| ≥ 1`.
pub fn contracting_bisection_witness<B: UnitBackend>(
    b: &B,
    v_h: &UnitCylinder<Vid, Eid>,
    v_g: &B::Set,
    lc: Option<u64>,
) -> Result<ContractingWitness<B::Set>, TwistedError> {
    let l = lc.ok_or(TwistedError::MissingLc)?;
    if !verify_lc(b, v_g, l)? {
        return Err(TwistedError::LcFails(l));
    }
    let mut lambda = find_cylinder_inside(&HinfOpen::Cylinder(v_h.clone()))?;
    if lambda.is_vertex() {
        lambda = lambda.push(&hinf(), Eid(0))?;
    }
    let n = lambda.len();
    let short = lambda.power(l as usize)?;
    let long = lambda.power(2 * l as usize)?;
    let u = BasicBisection::plain(long, short)?;
    let c = u.degree();
    let g_range = b.pow_set(v_g, -c);
    let g_source = b.pow_set(&g_range, c);
    let (rh, sh) = (u.range_set(), u.source_set());
    let mut checks = vec![
        (
            "s(B) has G-part V_G",
            b.subset(&g_source, v_g)? && b.subset(v_g, &g_source)?,
        ),
        ("r(B) inside s(B)", sub_h(&rh, &sh)? && b.subset(&g_range, &g_source)?),
        ("r(B) differs from s(B)", !sub_h(&sh, &rh)? && !b.is_empty(&g_range)?),
        ("s(B) inside W", sub_h(&sh, v_h)? && b.subset(&g_source, v_g)?),
    ];
    checks.extend(product_checks(b, &u, &g_range, &g_source)?);
    Ok(ContractingWitness {
        lambda,
        l,
        n,
        bisection: u,
        g_range,
        g_source,
        checks,
    })
}

/// Trivial `G`: `B = Z(λe_1, λ)` for `Z(λ) ⊆ W`.
pub fn trivial_contracting_witness(w: &UnitCylinder<Vid, Eid>) -> Result<ContractingWitness<()>, TwistedError> {
    let lambda = find_cylinder_inside(&HinfOpen::Cylinder(w.clone()))?;
    let u = BasicBisection::plain(lambda.push(&hinf(), Eid(1))?, lambda.clone())?;
    let (rh, sh) = (u.range_set(), u.source_set());
    let mut checks = vec![
        ("r(B) inside s(B)", sub_h(&rh, &sh)?),
        ("r(B) differs from s(B)", !sub_h(&sh, &rh)?),
        ("s(B) inside W", sub_h(&sh, w)?),
    ];
    checks.extend(product_checks(&TrivialUnits, &u, &(), &())?);
    Ok(ContractingWitness {
        n: lambda.len(),
        lambda,
        l: 1,
        bisection: u,
        g_range: (),
        g_source: (),
        checks,
    })
}

/// Whether `⋃_{n ≤ 0} α^n([y])` is everything, for every unit `y`.
/// Finite backends are decided exactly; Bratteli backends get a bounded
/// cofinality test that answers Yes or Unknown.
pub fn minimality_verdict(backend: &GBackend<'_>, depth: usize) -> Result<Verdict, TwistedError> {
    match backend {
        GBackend::Finite { groupoid, alpha } => {
            let units = groupoid.units();
            let ord = alpha.order().min(units.len() as u128 * groupoid.len().max(1) as u128) as i64;
            for &y in &units {
                let orbit = groupoid.orbit(y)?;
                let mut covered = BTreeSet::new();
                for n in 0..ord.max(1) {
                    covered.extend(orbit.iter().map(|&z| alpha.apply_pow(z, -n)));
                }
                if covered.len() != units.len() {
                    return Ok(Verdict::No);
                }
            }
            Ok(Verdict::Yes)
        }
        GBackend::Af(a) => {
            let d = a.diagram();
            let mut mats = Vec::new();
            for t in 0..depth {
                mats.push(
                    d.k_matrix(t)
                        .ok_or(TwistedError::DepthBeyondHorizon {
                            depth,
                            horizon: d.horizon(),
                        })?
                        .transpose(),
                );
            }
            Ok(cofinal_within(&mats))
        }
        GBackend::Rank2(a) => {
            let d = a.diagram();
            if depth > d.horizon() {
                return Err(TwistedError::DepthBeyondHorizon {
                    depth,
                    horizon: d.horizon(),
                });
            }
            let counts = rank2_k_matrices(d)?;
            Ok(cofinal_within(&counts.a[..depth]))
        }
    }
}

/// `mats[t]` is `c_{t+1} × c_t` with entry `(i, j)` counting edges from
/// block `i` one level up into block `j`. Yes when every block on every
/// level is reached from every block of some higher level up to the top.
fn cofinal_within(mats: &[IntMatrix]) -> Verdict {
    for n in 0..mats.len() {
        let mut acc = IntMatrix::identity(mats[n].cols());
        let mut reached = vec![false; mats[n].cols()];
        for m in &mats[n..] {
            acc = match m.checked_mul(&acc) {
                Ok(x) => x,
                Err(_) => return Verdict::Unknown,
            };
            for (j, r) in reached.iter_mut().enumerate() {
                *r |= (0..acc.rows()).all(|i| acc.get(i, j) > 0);
            }
        }
        if !reached.iter().all(|&r| r) {
            return Verdict::Unknown;
        }
    }
    Verdict::Yes
}

/// A nontrivial isotropy element of `G^∞_α` found by the bounded scan:
/// `h = (μν^k z, k|ν|, μz)` at `z = ν^∞`, paired with `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HinfIsotropy {
    pub nu: PathWord<Vid, Eid>,
    pub element: HinfTwisted,
}

/// Scans units `(x, y)` of `G^∞_α` with `x` a finite path or `ν^∞` for a
/// primitive `ν` of length at most `max_period` over `e_0, e_1`, and
/// isotropy degrees `0 ≤ |l| ≤ lbound`.
pub fn hinf_isotropy_scan(
    g: &FiniteGroupoid,
    alpha: &GroupoidAutomorphism,
    max_period: usize,
    lbound: i64,
) -> Option<HinfIsotropy> {
    // finite paths and degree 0: isotropy of G itself
    for x in 0..g.len() {
        if g.r(x) == g.s(x) && !g.is_unit(x) {
            let v = hinf_word(&[]);
            let h = GermElement::finite(v.clone(), v.clone()).expect("vertex");
            return Some(HinfIsotropy {
                nu: v,
                element: HinfTwisted { h, g: x },
            });
        }
    }
    for p in 1..=max_period {
        for idx in 0..(1usize << p) {
            let letters: Vec<usize> = (0..p).map(|i| (idx >> i) & 1).collect();
            if (1..p).any(|d| p % d == 0 && (0..p).all(|i| letters[i] == letters[i % d])) {
                continue;
            }
            let nu = hinf_word(&letters);
            for k in 1..=(lbound / p as i64) {
                for sign in [1i64, -1] {
                    let l = sign * k * p as i64;
                    for y in g.units() {
                        let target = alpha.apply_pow(y, -l);
                        if let Some(x) = (0..g.len()).find(|&x| g.r(x) == y && g.s(x) == target) {
                            let (mu, nu_side) = if sign > 0 {
                                (nu.power(k as usize).expect("loop"), hinf_word(&[]))
                            } else {
                                (hinf_word(&[]), nu.power(k as usize).expect("loop"))
                            };
                            let h = GermElement::new(mu, nu_side, Tail::Symbolic).expect("one vertex");
                            return Some(HinfIsotropy {
                                nu: nu.clone(),
                                element: HinfTwisted { h, g: x },
                            });
                        }
                    }
                }
            }
        }
    }
    None
}

/// `G` principal and no unit with `[y] = [α^l(y)]` for `0 < |l| ≤ lbound`.
pub fn hinf_principal_by_orbit_criterion(g: &FiniteGroupoid, alpha: &GroupoidAutomorphism, lbound: i64) -> bool {
    g.is_principal() && matches!(wfc_finite(g, alpha, lbound), WfcOutcome::Certificate(_))
}
