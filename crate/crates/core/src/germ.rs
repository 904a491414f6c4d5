//! Symbolic graph groupoids: germs `(μz, |μ| − |ν|, νz)`, basic bisections
//! `Z((α,β)∖F)` and their product calculus, the cylinder finder for the
//! Cuntz groupoid `H_∞`, and lifts of graph automorphisms.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::graph::{DirectedGraph, Eid, GraphAutomorphism, GraphError, PathGraph, PathWord, Vid};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GermError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("s(μ) and s(ν) differ")]
    SourceMismatch,
    #[error("tail does not start at s(μ)")]
    TailMismatch,
    #[error("excluded edge {0} does not have range s(α)")]
    ExcludedEdge(String),
    #[error("concrete and symbolic tails cannot be multiplied")]
    MixedTails,
    #[error("a symbolic tail of unknown length cannot be shifted")]
    SymbolicShift,
    #[error("the open set is empty")]
    EmptyOpen,
    #[error("cannot parse {0:?}")]
    Parse(String),
}

type Word<V, E> = PathWord<V, E>;

/// The continuation `z` of a germ.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tail<V, E> {
    /// A known finite continuation (a unit itself when finite paths are units).
    Concrete(Word<V, E>),
    /// An unspecified point of `s(μ)P`.
    Symbolic,
}

impl<V: Clone + Ord + fmt::Debug, E: Clone + Ord + fmt::Debug> Tail<V, E> {
    /// σ^n on the tail.
    pub fn shift(&self, n: usize) -> Result<Self, GermError> {
        match self {
            Tail::Concrete(w) => Ok(Tail::Concrete(w.shift(n)?)),
            Tail::Symbolic if n == 0 => Ok(Tail::Symbolic),
            Tail::Symbolic => Err(GermError::SymbolicShift),
        }
    }
}

/// `(μz, |μ| − |ν|, νz)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GermElement<V, E> {
    mu: Word<V, E>,
    nu: Word<V, E>,
    tail: Tail<V, E>,
}

impl<V: Clone + Ord + fmt::Debug, E: Clone + Ord + fmt::Debug> GermElement<V, E> {
    pub fn new(mu: Word<V, E>, nu: Word<V, E>, tail: Tail<V, E>) -> Result<Self, GermError> {
        if mu.source() != nu.source() {
            return Err(GermError::SourceMismatch);
        }
        if let Tail::Concrete(t) = &tail {
            if t.range() != mu.source() {
                return Err(GermError::TailMismatch);
            }
        }
        Ok(GermElement { mu, nu, tail })
    }

    /// The element `(x, |x| − |y|, y)` of two finite paths with equal source.
    pub fn finite(x: Word<V, E>, y: Word<V, E>) -> Result<Self, GermError> {
        let t = Word::vertex(x.source().clone());
        Self::new(x, y, Tail::Concrete(t))
    }

    pub fn mu(&self) -> &Word<V, E> {
        &self.mu
    }

    pub fn nu(&self) -> &Word<V, E> {
        &self.nu
    }

    pub fn tail(&self) -> &Tail<V, E> {
        &self.tail
    }

    pub fn degree(&self) -> i64 {
        self.mu.len() as i64 - self.nu.len() as i64
    }

    /// Range and source as finite words, when the tail is concrete.
    pub fn endpoints(&self) -> Option<(Word<V, E>, Word<V, E>)> {
        match &self.tail {
            Tail::Concrete(t) => Some((
                self.mu.concat(t).expect("tail checked"),
                self.nu.concat(t).expect("tail checked"),
            )),
            Tail::Symbolic => None,
        }
    }

    pub fn inverse(&self) -> Self {
        GermElement {
            mu: self.nu.clone(),
            nu: self.mu.clone(),
            tail: self.tail.clone(),
        }
    }

    /// Canonical representative: a concrete tail is absorbed into `μ, ν`
    /// (the element is then `(x, |x| − |y|, y)` literally); a symbolic one
    /// has the common suffix of `μ, ν` stripped.
    pub fn normalized(&self) -> Self {
        match self.endpoints() {
            Some((x, y)) => Self::finite(x, y).expect("endpoints share a source"),
            None => {
                let (mu, nu, _) = reduce_pair(&self.mu, &self.nu);
                GermElement { mu, nu, tail: Tail::Symbolic }
            }
        }
    }

    /// `gh` when `s(g) = r(h)`; `Ok(None)` when not composable.
    pub fn product(&self, other: &Self) -> Result<Option<Self>, GermError> {
        match (&self.tail, &other.tail) {
            (Tail::Concrete(_), Tail::Concrete(_)) => {
                let (x, y) = self.endpoints().expect("concrete");
                let (y2, z) = other.endpoints().expect("concrete");
                if y != y2 {
                    return Ok(None);
                }
                Ok(Some(Self::finite(x, z)?))
            }
            (Tail::Symbolic, Tail::Symbolic) => {
                if let Some(k) = other.mu.strip_prefix(&self.nu) {
                    let mu = self.mu.concat(&k)?;
                    return Ok(Some(Self::new(mu, other.nu.clone(), Tail::Symbolic)?));
                }
                if let Some(k) = self.nu.strip_prefix(&other.mu) {
                    let nu = other.nu.concat(&k)?;
                    return Ok(Some(Self::new(self.mu.clone(), nu, Tail::Symbolic)?));
                }
                Ok(None)
            }
            _ => Err(GermError::MixedTails),
        }
    }
}

/// Strips the longest common suffix: returns `(α₀, β₀, κ)` with
/// `α = α₀κ`, `β = β₀κ`.
pub fn reduce_pair<V: Clone + Ord + fmt::Debug, E: Clone + Ord + fmt::Debug>(
    alpha: &Word<V, E>,
    beta: &Word<V, E>,
) -> (Word<V, E>, Word<V, E>, Word<V, E>) {
    let (a, b) = (alpha.edges(), beta.edges());
    let mut k = 0;
    while k < a.len() && k < b.len() && a[a.len() - 1 - k] == b[b.len() - 1 - k] {
        k += 1;
    }
    let kappa = alpha.shift(alpha.len() - k).expect("suffix fits");
    (alpha.drop_last(k), beta.drop_last(k), kappa)
}

/// The unit set `Z(u∖F) = Z(u) ∖ ⋃_{e∈F} Z(ue)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct UnitCylinder<V, E> {
    pub path: Word<V, E>,
    pub excluded: BTreeSet<E>,
}

impl<V: Clone + Ord + fmt::Debug, E: Clone + Ord + fmt::Debug> UnitCylinder<V, E> {
    pub fn new<G>(g: &G, path: Word<V, E>, excluded: BTreeSet<E>) -> Result<Self, GermError>
    where
        G: PathGraph<Vertex = V, Edge = E> + ?Sized,
    {
        for e in &excluded {
            if &g.range(e) != path.source() {
                return Err(GermError::ExcludedEdge(format!("{e:?}")));
            }
        }
        Ok(UnitCylinder { path, excluded })
    }

    pub fn cylinder(path: Word<V, E>) -> Self {
        UnitCylinder {
            path,
            excluded: BTreeSet::new(),
        }
    }

    /// Exact emptiness: only a finite receiver can have all its edges removed.
    pub fn is_empty<G>(&self, g: &G) -> Result<bool, GermError>
    where
        G: PathGraph<Vertex = V, Edge = E> + ?Sized,
    {
        let v = self.path.source();
        if g.is_infinite_receiver(v) || self.excluded.is_empty() {
            return Ok(false);
        }
        let all = g.edges_into(v, None)?;
        Ok(all.iter().all(|e| self.excluded.contains(e)))
    }

    /// Exact inclusion `self ⊆ other`.
    pub fn is_subset<G>(&self, g: &G, other: &Self) -> Result<bool, GermError>
    where
        G: PathGraph<Vertex = V, Edge = E> + ?Sized,
    {
        if self.is_empty(g)? {
            return Ok(true);
        }
        if let Some(k) = self.path.strip_prefix(&other.path) {
            return Ok(match k.first_edge() {
                Some(e) => !other.excluded.contains(e),
                None => other.excluded.is_subset(&self.excluded),
            });
        }
        if !self.path.is_prefix_of(&other.path) {
            return Ok(false);
        }
        // other.path is strictly longer
        let v = self.path.source();
        if g.is_infinite_receiver(v) || g.finite_paths_are_units() {
            // self holds a point the longer cylinder misses
            return Ok(false);
        }
        for e in g.edges_into(v, None)? {
            if self.excluded.contains(&e) {
                continue;
            }
            let piece = UnitCylinder::cylinder(self.path.push(g, e)?);
            if !piece.is_subset(g, other)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether the finite word `x` (a unit when finite paths are units) lies
    /// in the set.
    pub fn contains_word(&self, x: &Word<V, E>) -> bool {
        match x.strip_prefix(&self.path) {
            Some(rest) => rest.first_edge().is_none_or(|e| !self.excluded.contains(e)),
            None => false,
        }
    }
}

impl<V: fmt::Display, E: fmt::Display> fmt::Display for UnitCylinder<V, E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z({}", self.path)?;
        write_excluded(f, &self.excluded)?;
        f.write_str(")")
    }
}

fn write_excluded<E: fmt::Display>(f: &mut fmt::Formatter<'_>, excluded: &BTreeSet<E>) -> fmt::Result {
    if excluded.is_empty() {
        return Ok(());
    }
    f.write_str("∖{")?;
    for (i, e) in excluded.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{e}")?;
    }
    f.write_str("}")
}

/// `Z((α,β)∖F) = {(αx, |α| − |β|, βx) : x ∈ s(α)P ∖ ⋃_{e∈F} Z(e)}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BasicBisection<V, E> {
    pub alpha: Word<V, E>,
    pub beta: Word<V, E>,
    pub excluded: BTreeSet<E>,
}

impl<V: Clone + Ord + fmt::Debug, E: Clone + Ord + fmt::Debug> BasicBisection<V, E> {
    pub fn new<G>(g: &G, alpha: Word<V, E>, beta: Word<V, E>, excluded: BTreeSet<E>) -> Result<Self, GermError>
    where
        G: PathGraph<Vertex = V, Edge = E> + ?Sized,
    {
        if alpha.source() != beta.source() {
            return Err(GermError::SourceMismatch);
        }
        for e in &excluded {
            if &g.range(e) != alpha.source() {
                return Err(GermError::ExcludedEdge(format!("{e:?}")));
            }
        }
        Ok(BasicBisection {
            alpha,
            beta,
            excluded,
        })
    }

    /// `Z(α, β)` with nothing excluded.
    pub fn plain(alpha: Word<V, E>, beta: Word<V, E>) -> Result<Self, GermError> {
        if alpha.source() != beta.source() {
            return Err(GermError::SourceMismatch);
        }
        Ok(BasicBisection {
            alpha,
            beta,
            excluded: BTreeSet::new(),
        })
    }

    /// `Z((u, u)∖F)`, the unit set `Z(u∖F)` viewed as a bisection.
    pub fn diagonal(c: &UnitCylinder<V, E>) -> Self {
        BasicBisection {
            alpha: c.path.clone(),
            beta: c.path.clone(),
            excluded: c.excluded.clone(),
        }
    }

    pub fn degree(&self) -> i64 {
        self.alpha.len() as i64 - self.beta.len() as i64
    }

    pub fn inverse(&self) -> Self {
        BasicBisection {
            alpha: self.beta.clone(),
            beta: self.alpha.clone(),
            excluded: self.excluded.clone(),
        }
    }

    pub fn range_set(&self) -> UnitCylinder<V, E> {
        UnitCylinder {
            path: self.alpha.clone(),
            excluded: self.excluded.clone(),
        }
    }

    pub fn source_set(&self) -> UnitCylinder<V, E> {
        UnitCylinder {
            path: self.beta.clone(),
            excluded: self.excluded.clone(),
        }
    }

    pub fn is_empty<G>(&self, g: &G) -> Result<bool, GermError>
    where
        G: PathGraph<Vertex = V, Edge = E> + ?Sized,
    {
        self.range_set().is_empty(g)
    }

    /// Membership of a germ with concrete tail, taken literally as the
    /// element of finite words `(x, m, y)`.
    pub fn contains(&self, germ: &GermElement<V, E>) -> bool {
        let Some((x, y)) = germ.endpoints() else {
            return false;
        };
        if germ.degree() != self.degree() {
            return false;
        }
        let (Some(tx), Some(ty)) = (x.strip_prefix(&self.alpha), y.strip_prefix(&self.beta)) else {
            return false;
        };
        tx == ty && tx.first_edge().is_none_or(|e| !self.excluded.contains(e))
    }

    /// The germ `(α, |α| − |β|, β)` with a symbolic tail.
    pub fn generic_germ(&self) -> GermElement<V, E> {
        GermElement {
            mu: self.alpha.clone(),
            nu: self.beta.clone(),
            tail: Tail::Symbolic,
        }
    }

    /// Common refinement: `self ∩ other` is empty or again basic.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        if self.degree() != other.degree() {
            return None;
        }
        // make `a` the one with the longer α
        let (a, b) = if self.alpha.len() >= other.alpha.len() {
            (self, other)
        } else {
            (other, self)
        };
        let ka = a.alpha.strip_prefix(&b.alpha)?;
        let kb = a.beta.strip_prefix(&b.beta)?;
        if ka.edges() != kb.edges() {
            return None;
        }
        match ka.first_edge() {
            None => Some(BasicBisection {
                alpha: a.alpha.clone(),
                beta: a.beta.clone(),
                excluded: a.excluded.union(&b.excluded).cloned().collect(),
            }),
            Some(e) if b.excluded.contains(e) => None,
            Some(_) => Some(a.clone()),
        }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersect(other).is_none()
    }

    /// Exact inclusion, via the range sets (a bisection is determined by its
    /// range set and its root pair).
    pub fn is_subset<G>(&self, g: &G, other: &Self) -> Result<bool, GermError>
    where
        G: PathGraph<Vertex = V, Edge = E> + ?Sized,
    {
        if self.is_empty(g)? {
            return Ok(true);
        }
        if self.degree() != other.degree() {
            return Ok(false);
        }
        if !self.range_set().is_subset(g, &other.range_set())? {
            return Ok(false);
        }
        // the pieces of self must sit under other's root with the same shift
        let (long, short) = (&self.alpha, &other.alpha);
        if let Some(k) = long.strip_prefix(short) {
            return Ok(other.beta.concat(&k).ok().as_ref() == Some(&self.beta));
        }
        // self is split further below its own root; compare on each piece
        for e in g.edges_into(self.alpha.source(), None)? {
            if self.excluded.contains(&e) {
                continue;
            }
            let piece = BasicBisection::plain(self.alpha.push(g, e.clone())?, self.beta.push(g, e)?)?;
            if !piece.is_subset(g, other)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl<V: fmt::Display, E: fmt::Display> fmt::Display for BasicBisection<V, E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z(({}, {})", self.alpha, self.beta)?;
        write_excluded(f, &self.excluded)?;
        f.write_str(")")
    }
}

/// A finite union of pairwise disjoint basic bisections.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BisectionSum<V, E> {
    pieces: Vec<BasicBisection<V, E>>,
}

impl<V: Clone + Ord + fmt::Debug, E: Clone + Ord + fmt::Debug> BisectionSum<V, E> {
    pub fn empty() -> Self {
        BisectionSum { pieces: Vec::new() }
    }

    /// Adds a piece, refusing overlaps.
    pub fn push(&mut self, b: BasicBisection<V, E>) -> Result<(), BasicBisection<V, E>> {
        if self.pieces.iter().any(|p| !p.is_disjoint(&b)) {
            return Err(b);
        }
        self.pieces.push(b);
        Ok(())
    }

    pub fn pieces(&self) -> &[BasicBisection<V, E>] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains(&self, germ: &GermElement<V, E>) -> bool {
        self.pieces.iter().any(|p| p.contains(germ))
    }
}

impl<V: fmt::Display, E: fmt::Display> fmt::Display for BisectionSum<V, E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return f.write_str("∅");
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                f.write_str(" ⊔ ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// `{gh : g ∈ a, h ∈ b, s(g) = r(h)}` by comparing the source word of `a`
/// with the range word of `b`.
pub fn bisection_product<V, E>(a: &BasicBisection<V, E>, b: &BasicBisection<V, E>) -> BisectionSum<V, E>
where
    V: Clone + Ord + fmt::Debug,
    E: Clone + Ord + fmt::Debug,
{
    let mut out = BisectionSum::empty();
    let piece = if let Some(mu) = b.alpha.strip_prefix(&a.beta) {
        match mu.first_edge() {
            None => Some(BasicBisection {
                alpha: a.alpha.clone(),
                beta: b.beta.clone(),
                excluded: a.excluded.union(&b.excluded).cloned().collect(),
            }),
            Some(e) if a.excluded.contains(e) => None,
            Some(_) => Some(BasicBisection {
                alpha: a.alpha.concat(&mu).expect("sources agree"),
                beta: b.beta.clone(),
                excluded: b.excluded.clone(),
            }),
        }
    } else if let Some(nu) = a.beta.strip_prefix(&b.alpha) {
        match nu.first_edge() {
            Some(e) if b.excluded.contains(e) => None,
            _ => Some(BasicBisection {
                alpha: a.alpha.clone(),
                beta: b.beta.concat(&nu).expect("sources agree"),
                excluded: a.excluded.clone(),
            }),
        }
    } else {
        None
    };
    if let Some(p) = piece {
        out.pieces.push(p);
    }
    out
}

/// The one-vertex graph with edges `e_0, e_1, …`.
pub fn hinf() -> DirectedGraph {
    DirectedGraph::OneVertexInfinite
}

/// Word `e_{i_1} … e_{i_n}` in `H_∞`; the empty list gives the vertex.
pub fn hinf_word(indices: &[usize]) -> PathWord<Vid, Eid> {
    let mut p = PathWord::vertex(Vid(0));
    for &i in indices {
        p = p.push(&hinf(), Eid(i)).expect("one vertex");
    }
    p
}

/// Any open set of `H_∞` units that the cylinder finder accepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HinfOpen {
    /// `Z(u∖F)` for a finite path `u`.
    Cylinder(UnitCylinder<Vid, Eid>),
    /// The neighbourhood `Z(x(0,n))` of an infinite path `x`, given by a
    /// prefix of `x` of length at least `n`.
    InfiniteAnchor { prefix: PathWord<Vid, Eid>, depth: usize },
}

/// A cylinder `Z(λ) ⊆ W`: `u` itself when nothing is excluded, otherwise
/// `u·e_n` with `n` one past the largest excluded index.
pub fn find_cylinder_inside(w: &HinfOpen) -> Result<PathWord<Vid, Eid>, GermError> {
    match w {
        HinfOpen::Cylinder(c) => {
            let Some(max) = c.excluded.iter().next_back() else {
                return Ok(c.path.clone());
            };
            Ok(c.path.push(&hinf(), Eid(max.0 + 1))?)
        }
        HinfOpen::InfiniteAnchor { prefix, depth } => {
            if *depth > prefix.len() {
                return Err(GermError::Graph(GraphError::ShiftTooLong {
                    by: *depth,
                    len: prefix.len(),
                }));
            }
            Ok(prefix.prefix(*depth))
        }
    }
}

/// Generic version for any graph: the least admissible edge below `u`, or
/// `u` itself when `F` is empty; fails if `Z(u∖F)` is empty.
pub fn find_cylinder_inside_graph<G>(
    g: &G,
    c: &UnitCylinder<G::Vertex, G::Edge>,
) -> Result<PathWord<G::Vertex, G::Edge>, GermError>
where
    G: PathGraph + ?Sized,
{
    if c.excluded.is_empty() {
        return Ok(c.path.clone());
    }
    let v = c.path.source();
    let mut bound = c.excluded.len() + 1;
    loop {
        let b = g.is_infinite_receiver(v).then_some(bound);
        let edges = g.edges_into(v, b)?;
        let max = c.excluded.iter().next_back().expect("nonempty");
        let pick = if g.is_infinite_receiver(v) {
            edges.into_iter().find(|e| e > max)
        } else {
            edges.into_iter().find(|e| !c.excluded.contains(e))
        };
        match pick {
            Some(e) => return Ok(c.path.push(g, e)?),
            None if g.is_infinite_receiver(v) => bound *= 2,
            None => return Err(GermError::EmptyOpen),
        }
    }
}

/// A graph automorphism acting on paths, germs and bisections:
/// `α(x, m, y) = (α(x), m, α(y))`.
#[derive(Debug, Clone)]
pub struct LiftedAutomorphism<A> {
    pub graph_map: A,
}

pub fn lift_graph_automorphism<A>(a: A) -> LiftedAutomorphism<A> {
    LiftedAutomorphism { graph_map: a }
}

impl<A> LiftedAutomorphism<A> {
    pub fn path<G>(&self, p: &PathWord<G::Vertex, G::Edge>, power: i64) -> PathWord<G::Vertex, G::Edge>
    where
        G: PathGraph + ?Sized,
        A: GraphAutomorphism<G>,
    {
        self.graph_map.path_pow(p, power)
    }

    pub fn germ<G>(&self, g: &GermElement<G::Vertex, G::Edge>, power: i64) -> GermElement<G::Vertex, G::Edge>
    where
        G: PathGraph + ?Sized,
        A: GraphAutomorphism<G>,
    {
        GermElement {
            mu: self.path::<G>(&g.mu, power),
            nu: self.path::<G>(&g.nu, power),
            tail: match &g.tail {
                Tail::Concrete(t) => Tail::Concrete(self.path::<G>(t, power)),
                Tail::Symbolic => Tail::Symbolic,
            },
        }
    }

    pub fn bisection<G>(
        &self,
        b: &BasicBisection<G::Vertex, G::Edge>,
        power: i64,
    ) -> BasicBisection<G::Vertex, G::Edge>
    where
        G: PathGraph + ?Sized,
        A: GraphAutomorphism<G>,
    {
        BasicBisection {
            alpha: self.path::<G>(&b.alpha, power),
            beta: self.path::<G>(&b.beta, power),
            excluded: b
                .excluded
                .iter()
                .map(|e| self.graph_map.edge_pow(e, power))
                .collect(),
        }
    }

    pub fn cylinder<G>(&self, c: &UnitCylinder<G::Vertex, G::Edge>, power: i64) -> UnitCylinder<G::Vertex, G::Edge>
    where
        G: PathGraph + ?Sized,
        A: GraphAutomorphism<G>,
    {
        UnitCylinder {
            path: self.path::<G>(&c.path, power),
            excluded: c
                .excluded
                .iter()
                .map(|e| self.graph_map.edge_pow(e, power))
                .collect(),
        }
    }
}

fn parse_word(s: &str) -> Result<PathWord<Vid, Eid>, GermError> {
    let s = s.trim();
    if s == "v" || s == "v0" {
        return Ok(hinf_word(&[]));
    }
    let mut idx = Vec::new();
    for part in s.split('.') {
        idx.push(parse_edge(part)?);
    }
    Ok(hinf_word(&idx))
}

fn parse_edge(s: &str) -> Result<usize, GermError> {
    let s = s.trim();
    let digits = s
        .strip_prefix("e_")
        .or_else(|| s.strip_prefix('e'))
        .ok_or_else(|| GermError::Parse(s.to_string()))?;
    digits.parse().map_err(|_| GermError::Parse(s.to_string()))
}

/// Parses `Z((e1.e2, v)∖{e3,e5})` (also with `\` for `∖`) over `H_∞`.
pub fn parse_hinf_bisection(s: &str) -> Result<BasicBisection<Vid, Eid>, GermError> {
    let err = || GermError::Parse(s.to_string());
    let t = s.trim();
    let inner = t
        .strip_prefix("Z(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(err)?;
    let inner = inner.trim().strip_prefix('(').ok_or_else(err)?;
    let close = inner.find(')').ok_or_else(err)?;
    let pair = &inner[..close];
    let rest = inner[close + 1..].trim();
    let (a, b) = pair.split_once(',').ok_or_else(err)?;
    let mut excluded = BTreeSet::new();
    if !rest.is_empty() {
        let rest = rest
            .strip_prefix('∖')
            .or_else(|| rest.strip_prefix('\\'))
            .ok_or_else(err)?
            .trim();
        let set = rest
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(err)?;
        for part in set.split(',').filter(|p| !p.trim().is_empty()) {
            excluded.insert(Eid(parse_edge(part)?));
        }
    }
    BasicBisection::new(&hinf(), parse_word(a)?, parse_word(b)?, excluded)
}

/// All `H_∞` germs `(μw, νw)` over edges `e_0 … e_{alphabet-1}` with
/// `|μ|, |ν| ≤ max_len` and `|w| ≤ tail_len`, as test points.
pub fn hinf_test_germs(alphabet: usize, max_len: usize, tail_len: usize) -> Vec<GermElement<Vid, Eid>> {
    let words = words_up_to(alphabet, max_len.max(tail_len));
    let mut out = BTreeSet::new();
    for mu in words.iter().filter(|w| w.len() <= max_len) {
        for nu in words.iter().filter(|w| w.len() <= max_len) {
            for t in words.iter().filter(|w| w.len() <= tail_len) {
                let x = mu.concat(t).expect("one vertex");
                let y = nu.concat(t).expect("one vertex");
                out.insert(GermElement::finite(x, y).expect("one vertex").normalized());
            }
        }
    }
    out.into_iter().collect()
}

/// Every `H_∞` word over `e_0 … e_{alphabet-1}` of length at most `n`.
pub fn words_up_to(alphabet: usize, n: usize) -> Vec<PathWord<Vid, Eid>> {
    let mut out = vec![hinf_word(&[])];
    let mut layer = vec![Vec::<usize>::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &layer {
            for e in 0..alphabet {
                let mut v = w.clone();
                v.push(e);
                out.push(hinf_word(&v));
                next.push(v);
            }
        }
        layer = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Identity;

    fn z(a: &[usize], b: &[usize], f: &[usize]) -> BasicBisection<Vid, Eid> {
        BasicBisection::new(
            &hinf(),
            hinf_word(a),
            hinf_word(b),
            f.iter().map(|&i| Eid(i)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn mismatched_prefix_gives_empty() {
        assert!(bisection_product(&z(&[], &[1], &[]), &z(&[2], &[], &[])).is_empty());
    }

    #[test]
    fn isometry_relation() {
        let p = bisection_product(&z(&[], &[1], &[]), &z(&[1], &[], &[]));
        assert_eq!(p.pieces(), &[z(&[], &[], &[])]);
    }

    #[test]
    fn exclusions_propagate() {
        // a's source word is shorter: the extra letter must avoid a's exclusions
        assert!(bisection_product(&z(&[0], &[1], &[2]), &z(&[1, 2], &[3], &[])).is_empty());
        let p = bisection_product(&z(&[0], &[1], &[2]), &z(&[1, 4], &[3], &[5]));
        assert_eq!(p.pieces(), &[z(&[0, 4], &[3], &[5])]);
        let p = bisection_product(&z(&[0], &[1], &[2]), &z(&[1], &[3], &[5]));
        assert_eq!(p.pieces(), &[z(&[0], &[3], &[2, 5])]);
        let p = bisection_product(&z(&[0], &[1, 6], &[2]), &z(&[1], &[3], &[5]));
        assert_eq!(p.pieces(), &[z(&[0], &[3, 6], &[2])]);
        assert!(bisection_product(&z(&[0], &[1, 6], &[2]), &z(&[1], &[3], &[6])).is_empty());
    }

    #[test]
    fn display_and_parse_round_trip() {
        let b = z(&[1, 2], &[1], &[3, 5]);
        let s = b.to_string();
        assert_eq!(s, "Z((e1.e2, e1)∖{e3,e5})");
        assert_eq!(parse_hinf_bisection(&s).unwrap(), b);
        assert_eq!(parse_hinf_bisection("Z((v, e_1))").unwrap(), z(&[], &[1], &[]));
        assert!(parse_hinf_bisection("Z(v)").is_err());
    }

    #[test]
    fn cylinder_finder_formula() {
        let c = UnitCylinder::new(&hinf(), hinf_word(&[4]), [Eid(0), Eid(2)].into_iter().collect()).unwrap();
        let lam = find_cylinder_inside(&HinfOpen::Cylinder(c.clone())).unwrap();
        assert_eq!(lam, hinf_word(&[4, 3]));
        assert!(UnitCylinder::cylinder(lam.clone()).is_subset(&hinf(), &c).unwrap());
        assert_eq!(find_cylinder_inside_graph(&hinf(), &c).unwrap(), lam);
        let open = HinfOpen::Cylinder(UnitCylinder::cylinder(hinf_word(&[1])));
        assert_eq!(find_cylinder_inside(&open).unwrap(), hinf_word(&[1]));
        let anchored = HinfOpen::InfiniteAnchor {
            prefix: hinf_word(&[0, 1, 0, 1, 0]),
            depth: 3,
        };
        assert_eq!(find_cylinder_inside(&anchored).unwrap(), hinf_word(&[0, 1, 0]));
    }

    #[test]
    fn cylinder_inclusions() {
        let g = hinf();
        let big = UnitCylinder::new(&g, hinf_word(&[1]), [Eid(2)].into_iter().collect()).unwrap();
        let sub = UnitCylinder::cylinder(hinf_word(&[1, 3]));
        let bad = UnitCylinder::cylinder(hinf_word(&[1, 2]));
        assert!(sub.is_subset(&g, &big).unwrap());
        assert!(!bad.is_subset(&g, &big).unwrap());
        assert!(!big.is_subset(&g, &sub).unwrap());
        let tighter = UnitCylinder::new(&g, hinf_word(&[1]), [Eid(2), Eid(3)].into_iter().collect()).unwrap();
        assert!(tighter.is_subset(&g, &big).unwrap());
        assert!(!big.is_subset(&g, &tighter).unwrap());
    }

    #[test]
    fn finite_graph_cylinders_split() {
        let g = DirectedGraph::bouquet(2);
        let w = |e: &[usize]| PathWord::anchored(&g, Vid(0), e.iter().map(|&i| Eid(i)).collect()).unwrap();
        let minus = UnitCylinder::new(&g, w(&[]), [Eid(1)].into_iter().collect()).unwrap();
        let c0 = UnitCylinder::cylinder(w(&[0]));
        assert!(minus.is_subset(&g, &c0).unwrap());
        assert!(c0.is_subset(&g, &minus).unwrap());
        let none = UnitCylinder::new(&g, w(&[]), [Eid(0), Eid(1)].into_iter().collect()).unwrap();
        assert!(none.is_empty(&g).unwrap());
        assert_eq!(find_cylinder_inside_graph(&g, &none), Err(GermError::EmptyOpen));
        assert_eq!(find_cylinder_inside_graph(&g, &minus).unwrap(), w(&[0]));
    }

    #[test]
    fn germ_products_and_degrees() {
        let g = GermElement::finite(hinf_word(&[0, 1]), hinf_word(&[2])).unwrap();
        let h = GermElement::finite(hinf_word(&[2]), hinf_word(&[])).unwrap();
        let gh = g.product(&h).unwrap().unwrap();
        assert_eq!(gh.degree(), g.degree() + h.degree());
        assert_eq!(g.product(&g).unwrap(), None);
        let s = GermElement::new(hinf_word(&[0]), hinf_word(&[1]), Tail::Symbolic).unwrap();
        let t = GermElement::new(hinf_word(&[1, 3]), hinf_word(&[]), Tail::Symbolic).unwrap();
        let st = s.product(&t).unwrap().unwrap();
        assert_eq!(st.mu(), &hinf_word(&[0, 3]));
        assert!(matches!(s.product(&g), Err(GermError::MixedTails)));
        assert_eq!(Tail::<Vid, Eid>::Symbolic.shift(1), Err(GermError::SymbolicShift));
    }

    #[test]
    fn identity_lift() {
        let lift = lift_graph_automorphism(Identity);
        let b = z(&[1], &[2, 3], &[4]);
        assert_eq!(lift.bisection::<DirectedGraph>(&b, 3), b);
    }

    #[test]
    fn intersections() {
        assert_eq!(z(&[1], &[2], &[]).intersect(&z(&[1, 3], &[2, 3], &[])), Some(z(&[1, 3], &[2, 3], &[])));
        assert_eq!(z(&[1], &[2], &[3]).intersect(&z(&[1, 3], &[2, 3], &[])), None);
        assert_eq!(z(&[1], &[2], &[3]).intersect(&z(&[1], &[2], &[4])), Some(z(&[1], &[2], &[3, 4])));
        assert_eq!(z(&[1], &[2], &[]).intersect(&z(&[1, 3], &[2, 4], &[])), None);
        assert!(z(&[1, 3], &[2, 3], &[]).is_subset(&hinf(), &z(&[1], &[2], &[])).unwrap());
        assert!(!z(&[1], &[2], &[]).is_subset(&hinf(), &z(&[1, 3], &[2, 3], &[])).unwrap());
    }
}
