//! Directed graphs, Bratteli diagrams, path words, telescoping and the
//! edge-cycling automorphism.
//!
//! Edges point from source to range and a path `μ = μ_1 … μ_n` satisfies
//! `s(μ_i) = r(μ_{i+1})`, so paths grow away from their range. In a Bratteli
//! diagram edges have range at level `n` and source at level `n + 1`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::report::ValidationReport;
use crate::scalar::{lcm_u128, IntMatrix, MatrixError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("unknown edge {0}")]
    UnknownEdge(String),
    #[error("enumeration over an infinite edge family needs an index bound")]
    UnboundedFamily,
    #[error("level {0} lies beyond the horizon and no repetition rule is declared")]
    BeyondHorizon(usize),
    #[error("edges {0} and {1} of the word are not composable")]
    NotComposable(usize, usize),
    #[error("shift by {by} exceeds path length {len}")]
    ShiftTooLong { by: usize, len: usize },
    #[error("subsequence must start at 0 and increase strictly")]
    BadSubsequence,
    #[error("labelling is not a bijection onto the edges between {0}")]
    BadLabelling(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Anything with vertices, edges, ranges and sources.
pub trait PathGraph {
    type Vertex: Clone + Ord + fmt::Debug;
    type Edge: Clone + Ord + fmt::Debug;

    fn range(&self, e: &Self::Edge) -> Self::Vertex;
    fn source(&self, e: &Self::Edge) -> Self::Vertex;
    fn has_vertex(&self, v: &Self::Vertex) -> bool;
    /// Edges with range `v` in increasing order. Infinite receivers need
    /// `bound`, which then keeps only the first `bound` edges.
    fn edges_into(&self, v: &Self::Vertex, bound: Option<usize>) -> Result<Vec<Self::Edge>, GraphError>;
    fn is_infinite_receiver(&self, v: &Self::Vertex) -> bool;
    /// Whether finite paths ending at infinite receivers count as units.
    fn finite_paths_are_units(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vid(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Eid(pub usize);

impl fmt::Display for Vid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for Eid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// A directed graph with a finite vertex set, either with finitely many edges
/// or the one-vertex graph with edges `e_i`, `i ∈ ℕ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DirectedGraph {
    Finite {
        vertices: usize,
        /// `(range, source)` per edge id.
        edges: Vec<(usize, usize)>,
    },
    /// One vertex, edges `e_0, e_1, …`.
    OneVertexInfinite,
}

impl DirectedGraph {
    pub fn finite(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        for (i, &(r, s)) in edges.iter().enumerate() {
            if r >= vertices || s >= vertices {
                return Err(GraphError::UnknownEdge(format!("e{i}")));
            }
        }
        Ok(DirectedGraph::Finite { vertices, edges })
    }

    /// One vertex with `n` loops.
    pub fn bouquet(n: usize) -> Self {
        DirectedGraph::Finite {
            vertices: 1,
            edges: vec![(0, 0); n],
        }
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            DirectedGraph::Finite { vertices, .. } => *vertices,
            DirectedGraph::OneVertexInfinite => 1,
        }
    }

    /// Every vertex receives at least one edge.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::new();
        if let DirectedGraph::Finite { vertices, edges } = self {
            for v in 0..*vertices {
                if !edges.iter().any(|&(r, _)| r == v) {
                    rep.push("vE1=empty", format!("v{v}"));
                }
            }
        }
        rep
    }
}

impl PathGraph for DirectedGraph {
    type Vertex = Vid;
    type Edge = Eid;

    fn range(&self, e: &Eid) -> Vid {
        match self {
            DirectedGraph::Finite { edges, .. } => Vid(edges[e.0].0),
            DirectedGraph::OneVertexInfinite => Vid(0),
        }
    }

    fn source(&self, e: &Eid) -> Vid {
        match self {
            DirectedGraph::Finite { edges, .. } => Vid(edges[e.0].1),
            DirectedGraph::OneVertexInfinite => Vid(0),
        }
    }

    fn has_vertex(&self, v: &Vid) -> bool {
        v.0 < self.vertex_count()
    }

    fn edges_into(&self, v: &Vid, bound: Option<usize>) -> Result<Vec<Eid>, GraphError> {
        if !self.has_vertex(v) {
            return Err(GraphError::UnknownVertex(format!("{v}")));
        }
        match self {
            DirectedGraph::Finite { edges, .. } => {
                let it = edges
                    .iter()
                    .enumerate()
                    .filter(|(_, &(r, _))| r == v.0)
                    .map(|(i, _)| Eid(i));
                Ok(match bound {
                    Some(b) => it.take(b).collect(),
                    None => it.collect(),
                })
            }
            DirectedGraph::OneVertexInfinite => {
                let b = bound.ok_or(GraphError::UnboundedFamily)?;
                Ok((0..b).map(Eid).collect())
            }
        }
    }

    fn is_infinite_receiver(&self, _v: &Vid) -> bool {
        matches!(self, DirectedGraph::OneVertexInfinite)
    }

    fn finite_paths_are_units(&self) -> bool {
        matches!(self, DirectedGraph::OneVertexInfinite)
    }
}

/// A finite path, stored with its full vertex trail.
///
/// `vertices[0]` is the range and `vertices[n]` the source; edge `i` has range
/// `vertices[i]` and source `vertices[i + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathWord<V, E> {
    edges: Vec<E>,
    vertices: Vec<V>,
}

impl<V: Clone + Ord + fmt::Debug, E: Clone + Ord + fmt::Debug> PathWord<V, E> {
    pub fn vertex(v: V) -> Self {
        PathWord {
            edges: Vec::new(),
            vertices: vec![v],
        }
    }

    /// Checks composability; an empty edge list is rejected since it has no
    /// anchor (use [`PathWord::vertex`]).
    pub fn from_edges<G>(g: &G, edges: Vec<E>) -> Result<Self, GraphError>
    where
        G: PathGraph<Vertex = V, Edge = E> + ?Sized,
    {
        let first = edges.first().ok_or(GraphError::NotComposable(0, 0))?;
        let mut vertices = Vec::with_capacity(edges.len() + 1);
        vertices.push(g.range(first));
        for (i, e) in edges.iter().enumerate() {
            if i > 0 && g.range(e) != vertices[i] {
                return Err(GraphError::NotComposable(i - 1, i));
            }
            vertices.push(g.source(e));
        }
        Ok(PathWord { edges, vertices })
    }

    /// Path anchored at `v`; accepts empty `edges`.
    pub fn anchored<G>(g: &G, v: V, edges: Vec<E>) -> Result<Self, GraphError>
    where
        G: PathGraph<Vertex = V, Edge = E> + ?Sized,
    {
        if edges.is_empty() {
            if !g.has_vertex(&v) {
                return Err(GraphError::UnknownVertex(format!("{v:?}")));
            }
            return Ok(Self::vertex(v));
        }
        let p = Self::from_edges(g, edges)?;
        if p.range() != &v {
            return Err(GraphError::NotComposable(0, 0));
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_vertex(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[E] {
        &self.edges
    }

    pub fn vertices(&self) -> &[V] {
        &self.vertices
    }

    pub fn range(&self) -> &V {
        &self.vertices[0]
    }

    pub fn source(&self) -> &V {
        &self.vertices[self.vertices.len() - 1]
    }

    pub fn first_edge(&self) -> Option<&E> {
        self.edges.first()
    }

    /// Appends one edge, checking `r(e) = s(self)`.
    pub fn push<G>(&self, g: &G, e: E) -> Result<Self, GraphError>
    where
        G: PathGraph<Vertex = V, Edge = E> + ?Sized,
    {
        if &g.range(&e) != self.source() {
            return Err(GraphError::NotComposable(self.len(), self.len() + 1));
        }
        let mut out = self.clone();
        out.vertices.push(g.source(&e));
        out.edges.push(e);
        Ok(out)
    }

    pub fn concat(&self, other: &Self) -> Result<Self, GraphError> {
        if self.source() != other.range() {
            return Err(GraphError::NotComposable(self.len(), self.len() + 1));
        }
        let mut out = self.clone();
        out.edges.extend(other.edges.iter().cloned());
        out.vertices.extend(other.vertices[1..].iter().cloned());
        Ok(out)
    }

    /// `self` repeated `n` times; `n = 0` gives the source vertex.
    pub fn power(&self, n: usize) -> Result<Self, GraphError> {
        let mut out = Self::vertex(self.range().clone());
        if n > 0 && self.source() != self.range() && !self.is_vertex() {
            return Err(GraphError::NotComposable(self.len(), 0));
        }
        for _ in 0..n {
            out = out.concat(self)?;
        }
        Ok(out)
    }

    pub fn is_prefix_of(&self, other: &Self) -> bool {
        self.range() == other.range()
            && self.len() <= other.len()
            && other.edges[..self.len()] == self.edges[..]
    }

    /// `self = prefix · rest`; returns `rest`.
    pub fn strip_prefix(&self, prefix: &Self) -> Option<Self> {
        if !prefix.is_prefix_of(self) {
            return None;
        }
        Some(self.shift(prefix.len()).expect("prefix length fits"))
    }

    /// σ^n: drops the first `n` edges.
    pub fn shift(&self, n: usize) -> Result<Self, GraphError> {
        if n > self.len() {
            return Err(GraphError::ShiftTooLong {
                by: n,
                len: self.len(),
            });
        }
        Ok(PathWord {
            edges: self.edges[n..].to_vec(),
            vertices: self.vertices[n..].to_vec(),
        })
    }

    /// First `n` edges.
    pub fn prefix(&self, n: usize) -> Self {
        let n = n.min(self.len());
        PathWord {
            edges: self.edges[..n].to_vec(),
            vertices: self.vertices[..=n].to_vec(),
        }
    }

    /// Drops the last `n` edges.
    pub fn drop_last(&self, n: usize) -> Self {
        self.prefix(self.len().saturating_sub(n))
    }

    pub fn last_edge(&self) -> Option<&E> {
        self.edges.last()
    }

    /// Rebuilds the path with edges and vertices mapped; the caller guarantees
    /// the maps form a graph morphism.
    pub fn map_with(&self, fv: impl Fn(&V) -> V, fe: impl Fn(&E) -> E) -> Self {
        PathWord {
            edges: self.edges.iter().map(fe).collect(),
            vertices: self.vertices.iter().map(fv).collect(),
        }
    }
}

impl<V: fmt::Display, E: fmt::Display> fmt::Display for PathWord<V, E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.edges.is_empty() {
            return write!(f, "{}", self.vertices[0]);
        }
        for (i, e) in self.edges.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// All paths of length `depth` with range `anchor`, in lexicographic order.
pub fn enumerate_paths<G: PathGraph + ?Sized>(
    g: &G,
    anchor: &G::Vertex,
    depth: usize,
    bound: Option<usize>,
) -> Result<Vec<PathWord<G::Vertex, G::Edge>>, GraphError> {
    if !g.has_vertex(anchor) {
        return Err(GraphError::UnknownVertex(format!("{anchor:?}")));
    }
    let mut layer = vec![PathWord::vertex(anchor.clone())];
    for _ in 0..depth {
        let mut next = Vec::new();
        for p in &layer {
            for e in g.edges_into(p.source(), bound)? {
                next.push(p.push(g, e)?);
            }
        }
        layer = next;
    }
    layer.sort();
    Ok(layer)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BVertex {
    pub level: usize,
    pub index: usize,
}

/// Edge `label` (0-based) among the `k_{vw}` edges with range `(level, range)`
/// and source `(level + 1, source)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BEdge {
    pub level: usize,
    pub range: usize,
    pub source: usize,
    pub label: u64,
}

impl fmt::Display for BVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}_{}", self.level, self.index)
    }
}

impl fmt::Display for BEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}_{} {}_{})_{}",
            self.level,
            self.range,
            self.level + 1,
            self.source,
            self.label + 1
        )
    }
}

/// One line of the edge table as read from a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEdge {
    pub level: usize,
    pub range: usize,
    pub source: usize,
    pub mult: i128,
    pub source_level: Option<usize>,
}

/// Unvalidated Bratteli data: level sizes, edge table, repetition rule.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawBratteli {
    pub sizes: Vec<usize>,
    pub edges: Vec<RawEdge>,
    pub repeat_from: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructuralError {
    #[error("diagram has no levels")]
    NoLevels,
    #[error("level {0} is empty")]
    EmptyLevel(usize),
    #[error("edge {edge}: range level {level} has no successor level")]
    LevelOutOfRange { edge: usize, level: usize },
    #[error("edge {edge} runs from level {from} to level {to}")]
    SkipsLevel { edge: usize, from: usize, to: usize },
    #[error("edge {edge}: vertex {vertex} does not exist on level {level}")]
    VertexOutOfRange { edge: usize, level: usize, vertex: usize },
    #[error("edge {edge}: negative multiplicity")]
    NegativeMultiplicity { edge: usize },
    #[error("repetition level {0} must lie below the last level")]
    RepeatOutOfRange(usize),
    #[error("repetition from level {from} needs |V_{from}| = |V_{last}|")]
    RepeatSizeMismatch { from: usize, last: usize },
    #[error("matrix {level} has shape {rows}x{cols}, expected {want_rows}x{want_cols}")]
    BadMatrix {
        level: usize,
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("structural error: {0}")]
    Structural(#[from] StructuralError),
    #[error("diagram invariants violated: {0}")]
    Invalid(ValidationReport),
}

/// A Bratteli diagram up to an explicit last level `N`, optionally repeated.
///
/// `k[n]` has rows indexed by `V_n` (ranges) and columns by `V_{n+1}`
/// (sources). With `repeat_from = Some(p)` the block `k[p..N]` repeats
/// forever, so `K_n = K_{p + (n - p) mod (N - p)}` for `n ≥ N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BratteliDiagram {
    sizes: Vec<usize>,
    k: Vec<IntMatrix>,
    repeat_from: Option<usize>,
}

impl BratteliDiagram {
    pub fn from_matrices(k: Vec<IntMatrix>, repeat_from: Option<usize>) -> Result<Self, DiagramError> {
        let d = Self::from_matrices_unchecked(k, repeat_from)?;
        let rep = d.validate();
        if rep.passed() {
            Ok(d)
        } else {
            Err(DiagramError::Invalid(rep))
        }
    }

    /// Shape checks only.
    pub fn from_matrices_unchecked(
        k: Vec<IntMatrix>,
        repeat_from: Option<usize>,
    ) -> Result<Self, StructuralError> {
        let first = k.first().ok_or(StructuralError::NoLevels)?;
        let mut sizes = vec![first.rows()];
        for (n, m) in k.iter().enumerate() {
            if m.rows() != sizes[n] {
                return Err(StructuralError::BadMatrix {
                    level: n,
                    rows: m.rows(),
                    cols: m.cols(),
                    want_rows: sizes[n],
                    want_cols: m.cols(),
                });
            }
            if m.entries().iter().any(|&x| x < 0) {
                return Err(StructuralError::NegativeMultiplicity { edge: n });
            }
            sizes.push(m.cols());
        }
        if let Some(s) = sizes.iter().position(|&s| s == 0) {
            return Err(StructuralError::EmptyLevel(s));
        }
        let d = BratteliDiagram {
            sizes,
            k,
            repeat_from,
        };
        d.check_repeat()?;
        Ok(d)
    }

    /// Constant diagram: `K_n = k` for every `n` (square `k`).
    pub fn constant(k: IntMatrix) -> Result<Self, DiagramError> {
        Self::from_matrices(vec![k], Some(0))
    }

    pub fn from_raw(raw: &RawBratteli) -> Result<Self, DiagramError> {
        let rep = validate_bratteli(raw)?;
        if !rep.passed() {
            return Err(DiagramError::Invalid(rep));
        }
        Ok(Self::assemble(raw))
    }

    fn assemble(raw: &RawBratteli) -> Self {
        let n = raw.sizes.len() - 1;
        let mut k: Vec<IntMatrix> = (0..n)
            .map(|l| IntMatrix::zeros(raw.sizes[l], raw.sizes[l + 1]))
            .collect();
        for e in &raw.edges {
            k[e.level].set(e.range, e.source, e.mult);
        }
        BratteliDiagram {
            sizes: raw.sizes.clone(),
            k,
            repeat_from: raw.repeat_from,
        }
    }

    pub fn to_raw(&self) -> RawBratteli {
        let mut edges = Vec::new();
        for (level, m) in self.k.iter().enumerate() {
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    let mult = m.get(r, c);
                    if mult != 0 {
                        edges.push(RawEdge {
                            level,
                            range: r,
                            source: c,
                            mult,
                            source_level: None,
                        });
                    }
                }
            }
        }
        RawBratteli {
            sizes: self.sizes.clone(),
            edges,
            repeat_from: self.repeat_from,
        }
    }

    fn check_repeat(&self) -> Result<(), StructuralError> {
        if let Some(p) = self.repeat_from {
            let last = self.horizon();
            if p >= last {
                return Err(StructuralError::RepeatOutOfRange(p));
            }
            if self.sizes[p] != self.sizes[last] {
                return Err(StructuralError::RepeatSizeMismatch { from: p, last });
            }
        }
        Ok(())
    }

    /// Index `N` of the last explicit level.
    pub fn horizon(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn repeat_from(&self) -> Option<usize> {
        self.repeat_from
    }

    pub fn is_unbounded(&self) -> bool {
        self.repeat_from.is_some()
    }

    fn stored_matrix_index(&self, n: usize) -> Option<usize> {
        let last = self.horizon();
        if n < last {
            return Some(n);
        }
        let p = self.repeat_from?;
        Some(p + (n - p) % (last - p))
    }

    fn stored_level_index(&self, n: usize) -> Option<usize> {
        if n <= self.horizon() {
            return Some(n);
        }
        self.stored_matrix_index(n)
    }

    pub fn has_level(&self, n: usize) -> bool {
        self.stored_level_index(n).is_some()
    }

    pub fn level_size(&self, n: usize) -> Option<usize> {
        self.stored_level_index(n).map(|i| self.sizes[i])
    }

    /// `K_n`, rows `V_n`, columns `V_{n+1}`.
    pub fn k_matrix(&self, n: usize) -> Option<&IntMatrix> {
        self.stored_matrix_index(n).map(|i| &self.k[i])
    }

    pub fn stored_matrices(&self) -> &[IntMatrix] {
        &self.k
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn multiplicity(&self, n: usize, v: usize, w: usize) -> Option<i128> {
        let m = self.k_matrix(n)?;
        (v < m.rows() && w < m.cols()).then(|| m.get(v, w))
    }

    /// `K_from · K_{from+1} ⋯ K_{to-1}`: path counts from level `from` to `to`.
    pub fn product(&self, from: usize, to: usize) -> Result<IntMatrix, GraphError> {
        let size = self
            .level_size(from)
            .ok_or(GraphError::BeyondHorizon(from))?;
        let mut acc = IntMatrix::identity(size);
        for n in from..to {
            let m = self.k_matrix(n).ok_or(GraphError::BeyondHorizon(n))?;
            acc = acc.checked_mul(m)?;
        }
        Ok(acc)
    }

    /// Every vertex receives an edge from the next level (except on the last
    /// level of a diagram without repetition) and every vertex off level 0 is
    /// the source of an edge.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::new();
        let levels = self.horizon();
        for n in 0..levels {
            let m = &self.k[n];
            for v in 0..m.rows() {
                if m.row(v).iter().all(|&x| x == 0) {
                    rep.push("vE1=empty", format!("level {n} vertex {v}"));
                }
            }
            for w in 0..m.cols() {
                if (0..m.rows()).all(|v| m.get(v, w) == 0) {
                    rep.push("E1v=empty", format!("level {} vertex {w}", n + 1));
                }
            }
        }
        rep
    }
}

impl PathGraph for BratteliDiagram {
    type Vertex = BVertex;
    type Edge = BEdge;

    fn range(&self, e: &BEdge) -> BVertex {
        BVertex {
            level: e.level,
            index: e.range,
        }
    }

    fn source(&self, e: &BEdge) -> BVertex {
        BVertex {
            level: e.level + 1,
            index: e.source,
        }
    }

    fn has_vertex(&self, v: &BVertex) -> bool {
        self.level_size(v.level).is_some_and(|s| v.index < s)
    }

    fn edges_into(&self, v: &BVertex, bound: Option<usize>) -> Result<Vec<BEdge>, GraphError> {
        if !self.has_vertex(v) {
            return Err(GraphError::UnknownVertex(format!("{v}")));
        }
        let m = self
            .k_matrix(v.level)
            .ok_or(GraphError::BeyondHorizon(v.level + 1))?;
        let mut out = Vec::new();
        for w in 0..m.cols() {
            for label in 0..m.get(v.index, w) as u64 {
                out.push(BEdge {
                    level: v.level,
                    range: v.index,
                    source: w,
                    label,
                });
            }
        }
        if let Some(b) = bound {
            out.truncate(b);
        }
        Ok(out)
    }

    fn is_infinite_receiver(&self, _v: &BVertex) -> bool {
        false
    }
}

/// Checks a raw diagram. Structural problems (bad level or vertex indices,
/// skipped levels) are errors; violated diagram invariants go in the report.
pub fn validate_bratteli(raw: &RawBratteli) -> Result<ValidationReport, StructuralError> {
    if raw.sizes.is_empty() {
        return Err(StructuralError::NoLevels);
    }
    if let Some(l) = raw.sizes.iter().position(|&s| s == 0) {
        return Err(StructuralError::EmptyLevel(l));
    }
    let last = raw.sizes.len() - 1;
    let mut seen: BTreeMap<(usize, usize, usize), i128> = BTreeMap::new();
    let mut rep = ValidationReport::new();
    for (i, e) in raw.edges.iter().enumerate() {
        if let Some(sl) = e.source_level {
            if sl != e.level + 1 {
                return Err(StructuralError::SkipsLevel {
                    edge: i,
                    from: e.level,
                    to: sl,
                });
            }
        }
        if e.level >= last {
            return Err(StructuralError::LevelOutOfRange {
                edge: i,
                level: e.level,
            });
        }
        if e.range >= raw.sizes[e.level] {
            return Err(StructuralError::VertexOutOfRange {
                edge: i,
                level: e.level,
                vertex: e.range,
            });
        }
        if e.source >= raw.sizes[e.level + 1] {
            return Err(StructuralError::VertexOutOfRange {
                edge: i,
                level: e.level + 1,
                vertex: e.source,
            });
        }
        if e.mult < 0 {
            return Err(StructuralError::NegativeMultiplicity { edge: i });
        }
        if let Some(prev) = seen.insert((e.level, e.range, e.source), e.mult) {
            if prev != e.mult {
                rep.push(
                    "multiplicity",
                    format!(
                        "level {} pair ({}, {}) listed with {} and {}",
                        e.level, e.range, e.source, prev, e.mult
                    ),
                );
            }
        }
    }
    let d = BratteliDiagram::assemble(raw);
    d.check_repeat()?;
    rep.merge(d.validate());
    Ok(rep)
}

/// Collapses the diagram onto the levels in `subsequence`.
pub fn telescope(d: &BratteliDiagram, subsequence: &[usize]) -> Result<BratteliDiagram, GraphError> {
    if subsequence.first() != Some(&0) || subsequence.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GraphError::BadSubsequence);
    }
    if subsequence.len() < 2 {
        return Err(GraphError::BadSubsequence);
    }
    let mut k = Vec::with_capacity(subsequence.len() - 1);
    for w in subsequence.windows(2) {
        k.push(d.product(w[0], w[1])?);
    }
    BratteliDiagram::from_matrices_unchecked(k, None)
        .map_err(|_| GraphError::BadSubsequence)
}

/// Result of [`telescope_for_growth`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthTelescoping {
    pub subsequence: Vec<usize>,
    pub diagram: BratteliDiagram,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no level within reach makes every multiplicity exceed {needed}; partial subsequence {partial:?}")]
pub struct GrowthExhausted {
    pub needed: usize,
    pub partial: Vec<usize>,
}

/// Greedy telescoping so that every multiplicity between new levels `n` and
/// `n + 1` exceeds `n`, for `n ≤ max_level`. Each new level is the least
/// original level that works; the search looks at most `reach` levels past
/// the previous choice (and never past the horizon without repetition).
pub fn telescope_for_growth(
    d: &BratteliDiagram,
    max_level: usize,
    reach: usize,
) -> Result<GrowthTelescoping, GrowthExhausted> {
    let mut subsequence = vec![0usize];
    let mut k = Vec::new();
    for n in 0..=max_level {
        let from = subsequence[n];
        let mut acc = IntMatrix::identity(d.level_size(from).expect("level exists"));
        let mut found = None;
        for t in from + 1..=from + reach {
            let Some(m) = d.k_matrix(t - 1) else { break };
            acc = match acc.checked_mul(m) {
                Ok(a) => a,
                Err(_) => break,
            };
            if acc.min_entry().is_some_and(|x| x > n as i128) {
                found = Some(t);
                break;
            }
        }
        match found {
            Some(t) => {
                subsequence.push(t);
                k.push(acc);
            }
            None => {
                return Err(GrowthExhausted {
                    needed: n,
                    partial: subsequence,
                })
            }
        }
    }
    let diagram = BratteliDiagram::from_matrices_unchecked(k, None).expect("products chain");
    Ok(GrowthTelescoping {
        subsequence,
        diagram,
    })
}

/// A graph automorphism, acting through integer powers.
pub trait GraphAutomorphism<G: PathGraph + ?Sized> {
    fn vertex_pow(&self, v: &G::Vertex, power: i64) -> G::Vertex;
    fn edge_pow(&self, e: &G::Edge, power: i64) -> G::Edge;

    fn path_pow(&self, p: &PathWord<G::Vertex, G::Edge>, power: i64) -> PathWord<G::Vertex, G::Edge> {
        p.map_with(|v| self.vertex_pow(v, power), |e| self.edge_pow(e, power))
    }
}

impl<G: PathGraph + ?Sized, A: GraphAutomorphism<G> + ?Sized> GraphAutomorphism<G> for &A {
    fn vertex_pow(&self, v: &G::Vertex, power: i64) -> G::Vertex {
        (**self).vertex_pow(v, power)
    }

    fn edge_pow(&self, e: &G::Edge, power: i64) -> G::Edge {
        (**self).edge_pow(e, power)
    }
}

/// The identity automorphism of any graph.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl<G: PathGraph + ?Sized> GraphAutomorphism<G> for Identity {
    fn vertex_pow(&self, v: &G::Vertex, _power: i64) -> G::Vertex {
        v.clone()
    }

    fn edge_pow(&self, e: &G::Edge, _power: i64) -> G::Edge {
        e.clone()
    }
}

/// Checks `r(a(e)) = a(r(e))` and `s(a(e)) = a(s(e))` on the given edges.
pub fn check_graph_automorphism<G, A>(g: &G, a: &A, edges: &[G::Edge]) -> ValidationReport
where
    G: PathGraph + ?Sized,
    A: GraphAutomorphism<G> + ?Sized,
{
    let mut rep = ValidationReport::new();
    for e in edges {
        let ae = a.edge_pow(e, 1);
        if g.range(&ae) != a.vertex_pow(&g.range(e), 1) {
            rep.push("preserves range", format!("{e:?}"));
        }
        if g.source(&ae) != a.vertex_pow(&g.source(e), 1) {
            rep.push("preserves source", format!("{e:?}"));
        }
        if a.edge_pow(&ae, -1) != *e {
            rep.push("invertible", format!("{e:?}"));
        }
    }
    rep
}

/// Per vertex pair, the order in which `vEw` is enumerated as
/// `(vw)_1, …, (vw)_k`: position `i` holds the 0-based label of `(vw)_{i+1}`.
/// Pairs without an entry use label order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeLabelling {
    pub orders: BTreeMap<(usize, usize, usize), Vec<u64>>,
}

/// `(vw)_i ↦ (vw)_{i+1 mod k_{vw}}`, fixing every vertex.
#[derive(Debug, Clone)]
pub struct EdgeCycle {
    diagram: BratteliDiagram,
    order: BTreeMap<(usize, usize, usize), Vec<u64>>,
    position: BTreeMap<(usize, usize, usize), Vec<u64>>,
}

pub fn edge_cycle_automorphism(
    d: &BratteliDiagram,
    labelling: &EdgeLabelling,
) -> Result<EdgeCycle, GraphError> {
    let mut position = BTreeMap::new();
    for (&(level, v, w), seq) in &labelling.orders {
        let pair = format!("level {level} pair ({v}, {w})");
        let k = d
            .multiplicity(level, v, w)
            .ok_or_else(|| GraphError::BadLabelling(pair.clone()))?;
        if seq.len() as i128 != k {
            return Err(GraphError::BadLabelling(pair));
        }
        let mut pos = vec![u64::MAX; seq.len()];
        for (i, &lab) in seq.iter().enumerate() {
            let slot = pos
                .get_mut(lab as usize)
                .ok_or_else(|| GraphError::BadLabelling(pair.clone()))?;
            if *slot != u64::MAX {
                return Err(GraphError::BadLabelling(pair));
            }
            *slot = i as u64;
        }
        position.insert((level, v, w), pos);
    }
    Ok(EdgeCycle {
        diagram: d.clone(),
        order: labelling.orders.clone(),
        position,
    })
}

impl EdgeCycle {
    pub fn diagram(&self) -> &BratteliDiagram {
        &self.diagram
    }

    /// Size of the orbit of `e`, namely `k_{vw}`.
    pub fn orbit_len(&self, e: &BEdge) -> u128 {
        self.diagram
            .multiplicity(e.level, e.range, e.source)
            .unwrap_or(0) as u128
    }

    /// 1-based position of `e` in its pair, as serialized.
    pub fn serial_index(&self, e: &BEdge) -> u64 {
        match self.position.get(&(e.level, e.range, e.source)) {
            Some(pos) => pos[e.label as usize] + 1,
            None => e.label + 1,
        }
    }

    /// lcm of every `k_{vw}` on levels below `levels`.
    pub fn order_below(&self, levels: usize) -> Option<u128> {
        let mut acc = 1u128;
        for n in 0..levels {
            let m = self.diagram.k_matrix(n)?;
            for &x in m.entries() {
                if x > 0 {
                    acc = lcm_u128(acc, x as u128)?;
                }
            }
        }
        Some(acc)
    }
}

impl GraphAutomorphism<BratteliDiagram> for EdgeCycle {
    fn vertex_pow(&self, v: &BVertex, _power: i64) -> BVertex {
        *v
    }

    fn edge_pow(&self, e: &BEdge, power: i64) -> BEdge {
        let k = self.orbit_len(e) as i128;
        if k == 0 {
            return *e;
        }
        let key = (e.level, e.range, e.source);
        let pos = match self.position.get(&key) {
            Some(p) => p[e.label as usize] as i128,
            None => e.label as i128,
        };
        let np = (pos + power as i128).rem_euclid(k) as usize;
        let label = match self.order.get(&key) {
            Some(o) => o[np],
            None => np as u64,
        };
        BEdge { label, ..*e }
    }
}
