//! Rank-2 Bratteli diagrams: red cycles, blue edges and the factorisation
//! permutation `F`; orders `o(e)`, `O_n`, `m_n`; the subsequence algorithm
//! producing `o(e) > n·m_n`; and the automorphism `α = F^{m_n}` on level `n`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::graph::{GraphAutomorphism, GraphError, PathGraph, PathWord};
use crate::report::ValidationReport;
use crate::scalar::{gcd_u128, lcm_u128, IntMatrix, MatrixError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rank2Error {
    #[error("T_{0} is not a diagonal matrix with positive diagonal")]
    BadT(usize),
    #[error("A_{0} or B_{0} has the wrong shape or a negative entry")]
    BadShape(usize),
    #[error("A_{0} or B_{0} is not proper")]
    NotProper(usize),
    #[error("A_n T_n differs from T_(n+1) B_n at n = {0}")]
    Compatibility(usize),
    #[error("no data given")]
    Empty,
    #[error("diagram invariants violated: {0}")]
    Invalid(ValidationReport),
    #[error("arithmetic overflow")]
    Overflow,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Vertex `pos` on red cycle `cycle` of level `level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RVertex {
    pub level: usize,
    pub cycle: usize,
    pub pos: usize,
}

/// Blue edge `index` among the edges with range on level `level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RBlue {
    pub level: usize,
    pub index: usize,
}

impl fmt::Display for RVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}_{}_{}", self.level, self.cycle, self.pos)
    }
}

impl fmt::Display for RBlue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}_{}", self.level, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlueEdge {
    pub range: RVertex,
    pub source: RVertex,
}

/// Matrix data `(A_n, B_n, T_n)`; the last entry of each list repeats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rank2Data {
    pub a: Vec<IntMatrix>,
    pub b: Vec<IntMatrix>,
    pub t: Vec<IntMatrix>,
}

impl Rank2Data {
    pub fn constant(a: IntMatrix, b: IntMatrix, t: IntMatrix) -> Self {
        Rank2Data {
            a: vec![a],
            b: vec![b],
            t: vec![t],
        }
    }

    /// The data behind the two-level illustration: one loop on level 0,
    /// a 3-cycle on level 1, a 6-cycle on level 2.
    pub fn two_level_example() -> Self {
        let m = |x: i128| IntMatrix::from_rows(&[vec![x]]).expect("1x1");
        Rank2Data {
            a: vec![m(3), m(4)],
            b: vec![m(1), m(2)],
            t: vec![m(1), m(3), m(6)],
        }
    }

    fn pick(list: &[IntMatrix], n: usize) -> &IntMatrix {
        &list[n.min(list.len() - 1)]
    }

    pub fn a(&self, n: usize) -> &IntMatrix {
        Self::pick(&self.a, n)
    }

    pub fn b(&self, n: usize) -> &IntMatrix {
        Self::pick(&self.b, n)
    }

    pub fn t(&self, n: usize) -> &IntMatrix {
        Self::pick(&self.t, n)
    }

    /// `T_n(j, j)` as a vector.
    pub fn t_diag(&self, n: usize) -> Vec<i128> {
        let t = self.t(n);
        (0..t.rows()).map(|j| t.get(j, j)).collect()
    }

    /// Checks levels `0..levels`: diagonal positive `T`, shapes, properness
    /// and `A_n T_n = T_{n+1} B_n`.
    pub fn check(&self, levels: usize) -> Result<(), Rank2Error> {
        if self.a.is_empty() || self.b.is_empty() || self.t.is_empty() {
            return Err(Rank2Error::Empty);
        }
        let span = levels;
        for n in 0..=span {
            let t = self.t(n);
            if !t.is_diagonal() || (0..t.rows()).any(|j| t.get(j, j) <= 0) {
                return Err(Rank2Error::BadT(n));
            }
        }
        for n in 0..span {
            let (a, b) = (self.a(n), self.b(n));
            let (c0, c1) = (self.t(n).rows(), self.t(n + 1).rows());
            for m in [a, b] {
                if m.rows() != c1 || m.cols() != c0 || !m.is_nonnegative() {
                    return Err(Rank2Error::BadShape(n));
                }
                if !m.is_proper() {
                    return Err(Rank2Error::NotProper(n));
                }
            }
            if a.checked_mul(self.t(n))? != self.t(n + 1).checked_mul(b)? {
                return Err(Rank2Error::Compatibility(n));
            }
        }
        Ok(())
    }

    /// `A_{n,m} = A_{n-1} ⋯ A_m`.
    pub fn a_product(&self, n: usize, m: usize) -> Result<IntMatrix, MatrixError> {
        let mut acc = IntMatrix::identity(self.t(m).rows());
        for k in m..n {
            acc = self.a(k).checked_mul(&acc)?;
        }
        Ok(acc)
    }

    pub fn b_product(&self, n: usize, m: usize) -> Result<IntMatrix, MatrixError> {
        let mut acc = IntMatrix::identity(self.t(m).rows());
        for k in m..n {
            acc = self.b(k).checked_mul(&acc)?;
        }
        Ok(acc)
    }
}

/// A rank-2 Bratteli diagram truncated after vertex level `N`: blue edges
/// on levels `0..N`, red cycles on levels `0..=N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rank2Diagram {
    cycle_lengths: Vec<Vec<usize>>,
    edges: Vec<Vec<BlueEdge>>,
    f: Vec<Vec<usize>>,
    orientation: i8,
    into: Vec<Vec<Vec<Vec<usize>>>>,
    out_of: Vec<Vec<Vec<Vec<usize>>>>,
}

impl Rank2Diagram {
    /// Builds and validates an explicit diagram.
    pub fn new(
        cycle_lengths: Vec<Vec<usize>>,
        edges: Vec<Vec<BlueEdge>>,
        f: Vec<Vec<usize>>,
        orientation: i8,
    ) -> Result<Self, Rank2Error> {
        let d = Self::assemble(cycle_lengths, edges, f, orientation)?;
        let rep = d.validate();
        if rep.passed() {
            Ok(d)
        } else {
            Err(Rank2Error::Invalid(rep))
        }
    }

    fn assemble(
        cycle_lengths: Vec<Vec<usize>>,
        edges: Vec<Vec<BlueEdge>>,
        f: Vec<Vec<usize>>,
        orientation: i8,
    ) -> Result<Self, Rank2Error> {
        let mut rep = ValidationReport::new();
        if cycle_lengths.is_empty() || edges.len() + 1 != cycle_lengths.len() || f.len() != edges.len() {
            rep.push("levels", format!("{} vertex levels, {} edge levels", cycle_lengths.len(), edges.len()));
            return Err(Rank2Error::Invalid(rep));
        }
        if orientation != 1 && orientation != -1 {
            rep.push("orientation is +1 or -1", format!("{orientation}"));
            return Err(Rank2Error::Invalid(rep));
        }
        let exists = |v: &RVertex| {
            cycle_lengths
                .get(v.level)
                .and_then(|c| c.get(v.cycle))
                .is_some_and(|&t| v.pos < t)
        };
        for (n, level) in edges.iter().enumerate() {
            for (i, e) in level.iter().enumerate() {
                if e.range.level != n || e.source.level != n + 1 || !exists(&e.range) || !exists(&e.source) {
                    rep.push("edge endpoints", format!("level {n} edge {i}"));
                }
            }
        }
        if !rep.passed() {
            return Err(Rank2Error::Invalid(rep));
        }
        let fan = |lvl: usize| -> Vec<Vec<Vec<usize>>> {
            cycle_lengths[lvl].iter().map(|&t| vec![Vec::new(); t]).collect()
        };
        let mut into: Vec<_> = (0..edges.len()).map(fan).collect();
        let mut out_of: Vec<_> = (0..edges.len()).map(|n| fan(n + 1)).collect();
        for (n, level) in edges.iter().enumerate() {
            for (i, e) in level.iter().enumerate() {
                into[n][e.range.cycle][e.range.pos].push(i);
                out_of[n][e.source.cycle][e.source.pos].push(i);
            }
        }
        Ok(Rank2Diagram {
            cycle_lengths,
            edges,
            f,
            orientation,
            into,
            out_of,
        })
    }

    /// Last vertex level `N`.
    pub fn horizon(&self) -> usize {
        self.edges.len()
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    pub fn cycle_lengths(&self, level: usize) -> &[usize] {
        &self.cycle_lengths[level]
    }

    pub fn edge_count(&self, level: usize) -> usize {
        self.edges[level].len()
    }

    pub fn edge(&self, e: &RBlue) -> &BlueEdge {
        &self.edges[e.level][e.index]
    }

    pub fn blue_edges(&self, level: usize) -> impl Iterator<Item = RBlue> + '_ {
        (0..self.edges[level].len()).map(move |index| RBlue { level, index })
    }

    pub fn vertices(&self, level: usize) -> impl Iterator<Item = RVertex> + '_ {
        self.cycle_lengths[level].iter().enumerate().flat_map(move |(cycle, &t)| {
            (0..t).map(move |pos| RVertex { level, cycle, pos })
        })
    }

    /// `F(e)`.
    pub fn factor(&self, e: &RBlue) -> RBlue {
        RBlue {
            level: e.level,
            index: self.f[e.level][e.index],
        }
    }

    pub fn factor_table(&self, level: usize) -> &[usize] {
        &self.f[level]
    }

    /// The red neighbour `F` shifts ranges and sources to: `pos + orientation`.
    pub fn pred(&self, v: &RVertex) -> RVertex {
        self.rotate(v, 1)
    }

    /// `pred^k(v)`.
    pub fn rotate(&self, v: &RVertex, k: i128) -> RVertex {
        let t = self.cycle_lengths[v.level][v.cycle] as i128;
        let pos = (v.pos as i128 + k * self.orientation as i128).rem_euclid(t) as usize;
        RVertex { pos, ..*v }
    }

    /// Blue edges with source `v`.
    pub fn edges_out_of(&self, v: &RVertex) -> Vec<RBlue> {
        if v.level == 0 {
            return Vec::new();
        }
        self.out_of[v.level - 1][v.cycle][v.pos]
            .iter()
            .map(|&index| RBlue { level: v.level - 1, index })
            .collect()
    }

    /// Endpoints, bijectivity and consistency of `F`, blue sources and sinks.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::new();
        for (n, f) in self.f.iter().enumerate() {
            let m = self.edges[n].len();
            let mut seen = vec![false; m];
            let mut ok = f.len() == m;
            for &x in f {
                if x >= m || seen[x] {
                    ok = false;
                    break;
                }
                seen[x] = true;
            }
            if !ok {
                rep.push("F is a bijection", format!("level {n}"));
                continue;
            }
            for (i, e) in self.edges[n].iter().enumerate() {
                let fe = &self.edges[n][f[i]];
                if fe.range != self.pred(&e.range) {
                    rep.push("F shifts ranges along red cycles", format!("level {n} edge {i}"));
                }
                if fe.source != self.pred(&e.source) {
                    rep.push("F shifts sources along red cycles", format!("level {n} edge {i}"));
                }
            }
        }
        for n in 0..self.horizon() {
            for v in self.vertices(n) {
                if self.into[n][v.cycle][v.pos].is_empty() {
                    rep.push("blue graph has no sources", format!("{v}"));
                }
            }
            for v in self.vertices(n + 1) {
                if self.out_of[n][v.cycle][v.pos].is_empty() {
                    rep.push("blue sinks lie on level 0", format!("{v}"));
                }
            }
        }
        rep
    }
}

impl PathGraph for Rank2Diagram {
    type Vertex = RVertex;
    type Edge = RBlue;

    fn range(&self, e: &RBlue) -> RVertex {
        self.edge(e).range
    }

    fn source(&self, e: &RBlue) -> RVertex {
        self.edge(e).source
    }

    fn has_vertex(&self, v: &RVertex) -> bool {
        self.cycle_lengths
            .get(v.level)
            .and_then(|c| c.get(v.cycle))
            .is_some_and(|&t| v.pos < t)
    }

    fn edges_into(&self, v: &RVertex, bound: Option<usize>) -> Result<Vec<RBlue>, GraphError> {
        if !self.has_vertex(v) {
            return Err(GraphError::UnknownVertex(format!("{v}")));
        }
        if v.level >= self.horizon() {
            return Err(GraphError::BeyondHorizon(v.level + 1));
        }
        let mut out: Vec<RBlue> = self.into[v.level][v.cycle][v.pos]
            .iter()
            .map(|&index| RBlue { level: v.level, index })
            .collect();
        if let Some(b) = bound {
            out.truncate(b);
        }
        Ok(out)
    }

    fn is_infinite_receiver(&self, _v: &RVertex) -> bool {
        false
    }
}

/// Builds the diagram on vertex levels `0..=levels`: between cycle `j` on
/// level `n` and cycle `i` on level `n + 1` there are `A_n(i,j)·T_n(j,j)`
/// edges `k`, with range at position `k mod T_n(j,j)`, source at position
/// `k mod T_{n+1}(i,i)`, and `F(k) = k + 1` around the block (`k − 1` for
/// reversed orientation).
pub fn build_rank2(data: &Rank2Data, levels: usize, orientation: i8) -> Result<Rank2Diagram, Rank2Error> {
    data.check(levels)?;
    let cycle_lengths: Vec<Vec<usize>> = (0..=levels)
        .map(|n| data.t_diag(n).into_iter().map(|x| x as usize).collect())
        .collect();
    let mut edges = Vec::with_capacity(levels);
    let mut f = Vec::with_capacity(levels);
    for n in 0..levels {
        let a = data.a(n);
        let (tn, tn1) = (&cycle_lengths[n], &cycle_lengths[n + 1]);
        let mut level_edges = Vec::new();
        let mut level_f = Vec::new();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                let count = usize::try_from(a.get(i, j))
                    .ok()
                    .and_then(|x| x.checked_mul(tn[j]))
                    .ok_or(Rank2Error::Overflow)?;
                let base = level_edges.len();
                for k in 0..count {
                    level_edges.push(BlueEdge {
                        range: RVertex { level: n, cycle: j, pos: k % tn[j] },
                        source: RVertex { level: n + 1, cycle: i, pos: k % tn1[i] },
                    });
                    let next = if orientation >= 0 {
                        (k + 1) % count
                    } else {
                        (k + count - 1) % count
                    };
                    level_f.push(base + next);
                }
            }
        }
        edges.push(level_edges);
        f.push(level_f);
    }
    Rank2Diagram::new(cycle_lengths, edges, f, orientation)
}

/// `o(e)` per blue edge, `O_n` and `m_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderData {
    pub o: Vec<Vec<u128>>,
    pub big_o: Vec<u128>,
    /// `m_0 … m_N`.
    pub m: Vec<u128>,
}

impl OrderData {
    /// Per level: `(n, min o(e), n·m_n, min o(e) > n·m_n)`.
    pub fn growth_table(&self) -> Vec<(usize, u128, u128, bool)> {
        self.o
            .iter()
            .enumerate()
            .map(|(n, os)| {
                let min = os.iter().copied().min().unwrap_or(0);
                let bound = (n as u128).saturating_mul(self.m[n]);
                (n, min, bound, min > bound)
            })
            .collect()
    }

    pub fn satisfies_growth(&self) -> bool {
        self.growth_table().iter().all(|r| r.3)
    }
}

/// Orders of `F` by cycle decomposition; `m_{n+1} = m_n + n·O_n`.
pub fn compute_orders(d: &Rank2Diagram) -> Result<OrderData, Rank2Error> {
    let mut o = Vec::with_capacity(d.horizon());
    let mut big_o = Vec::with_capacity(d.horizon());
    for n in 0..d.horizon() {
        let f = &d.f[n];
        let mut ord = vec![0u128; f.len()];
        for start in 0..f.len() {
            if ord[start] != 0 {
                continue;
            }
            let mut cyc = vec![start];
            let mut x = f[start];
            while x != start {
                cyc.push(x);
                x = f[x];
            }
            for &e in &cyc {
                ord[e] = cyc.len() as u128;
            }
        }
        let l = ord
            .iter()
            .try_fold(1u128, |acc, &x| lcm_u128(acc, x))
            .ok_or(Rank2Error::Overflow)?;
        o.push(ord);
        big_o.push(l);
    }
    let mut m = vec![0u128];
    for (n, &on) in big_o.iter().enumerate() {
        let step = (n as u128).checked_mul(on).ok_or(Rank2Error::Overflow)?;
        let next = m[n].checked_add(step).ok_or(Rank2Error::Overflow)?;
        m.push(next);
    }
    Ok(OrderData { o, big_o, m })
}

/// One entry-bound check from the subsequence algorithm: every entry of
/// `A_{l(n+1),l(n)}` exceeds `n·M_n` (for `n ≥ 2`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryBound {
    pub n: usize,
    pub from: usize,
    pub to: usize,
    pub min_entry: i128,
    pub bound: u128,
}

impl EntryBound {
    pub fn holds(&self) -> bool {
        self.min_entry >= 0 && self.min_entry as u128 > self.bound
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TelescopeResult {
    /// `l'(1), l'(2), l'(3)`.
    pub l_prime: Vec<usize>,
    /// `l(0), …, l(K)`.
    pub l: Vec<usize>,
    /// `M_0, …, M_{K-1}`.
    pub big_m: Vec<u128>,
    pub data: Rank2Data,
    pub entry_bounds: Vec<EntryBound>,
}

impl TelescopeResult {
    /// Recomputes every entry bound from the original data.
    pub fn reverify(&self, original: &Rank2Data) -> bool {
        self.entry_bounds.iter().all(|b| {
            b.holds()
                && original
                    .a_product(b.to, b.from)
                    .ok()
                    .and_then(|m| m.min_entry())
                    == Some(b.min_entry)
                && b.bound == (b.n as u128).saturating_mul(self.big_m[b.n])
        }) && self.big_m.first() == Some(&0)
            && self.big_m.get(1).is_none_or(|&x| x == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no index within reach meets the bound for step {step}; partial subsequence {partial:?}")]
pub struct TelescopeExhausted {
    pub step: usize,
    pub partial: Vec<usize>,
}

fn next_index(
    data: &Rank2Data,
    from: usize,
    reach: usize,
    ok: impl Fn(i128) -> bool,
) -> Option<(usize, IntMatrix)> {
    let mut acc = IntMatrix::identity(data.t(from).rows());
    for t in from + 1..=from + reach {
        acc = data.a(t - 1).checked_mul(&acc).ok()?;
        if acc.min_entry().is_some_and(&ok) {
            return Some((t, acc));
        }
    }
    None
}

/// The subsequence algorithm, producing telescoped data on `edge_levels`
/// edge levels (`l(0), …, l(edge_levels)`). Each index is the least one
/// meeting its bound, searched at most `reach` steps ahead.
pub fn telescope_rank2(
    data: &Rank2Data,
    edge_levels: usize,
    reach: usize,
) -> Result<TelescopeResult, TelescopeExhausted> {
    let exhausted = |step: usize, partial: &[usize]| TelescopeExhausted {
        step,
        partial: partial.to_vec(),
    };
    let mut l_prime = vec![0usize];
    for n in 1..=2 {
        let (t, _) = next_index(data, l_prime[n - 1], reach, |x| x >= n as i128)
            .ok_or_else(|| exhausted(n, &l_prime))?;
        l_prime.push(t);
    }
    let mut l = l_prime.clone();
    let mut big_m: Vec<u128> = vec![0, 0];
    let mut entry_bounds = Vec::new();
    let mut n = 1;
    while l.len() <= edge_levels {
        // M_{n+1} from A_{l(n+1), l(n)}
        let prod = data.a_product(l[n + 1], l[n]).map_err(|_| exhausted(n + 1, &l))?;
        let t = data.t_diag(l[n]);
        let mut p: u128 = 1;
        for i in 0..prod.rows() {
            for (j, tj) in t.iter().enumerate() {
                let term = (prod.get(i, j) as u128).checked_mul(*tj as u128);
                p = term.and_then(|x| p.checked_mul(x)).ok_or_else(|| exhausted(n + 1, &l))?;
            }
        }
        let m_next = (n as u128)
            .checked_mul(p)
            .and_then(|x| x.checked_add(big_m[n]))
            .ok_or_else(|| exhausted(n + 1, &l))?;
        big_m.push(m_next);
        let bound = ((n + 1) as u128).checked_mul(m_next).ok_or_else(|| exhausted(n + 2, &l))?;
        let (idx, a) = next_index(data, l[n + 1], reach, |x| x >= 0 && x as u128 > bound)
            .ok_or_else(|| exhausted(n + 2, &l))?;
        entry_bounds.push(EntryBound {
            n: n + 1,
            from: l[n + 1],
            to: idx,
            min_entry: a.min_entry().unwrap_or(0),
            bound,
        });
        l.push(idx);
        n += 1;
    }
    big_m.truncate(edge_levels.max(2));
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut t = Vec::new();
    for w in l.windows(2) {
        a.push(data.a_product(w[1], w[0]).map_err(|_| exhausted(0, &l))?);
        b.push(data.b_product(w[1], w[0]).map_err(|_| exhausted(0, &l))?);
    }
    for &x in &l {
        t.push(data.t(x).clone());
    }
    l.truncate(edge_levels + 1);
    a.truncate(edge_levels);
    b.truncate(edge_levels);
    t.truncate(edge_levels + 1);
    Ok(TelescopeResult {
        l_prime,
        l,
        big_m,
        data: Rank2Data { a, b, t },
        entry_bounds,
    })
}

/// `α = F^{m_n}` on blue edges of level `n`; vertices of level `n` move by
/// `pred^{m_n}`.
#[derive(Debug, Clone)]
pub struct Rank2Automorphism {
    diagram: Rank2Diagram,
    orders: OrderData,
    cycle_of: Vec<Vec<(usize, usize)>>,
    cycles: Vec<Vec<Vec<usize>>>,
}

pub fn rank2_automorphism(d: &Rank2Diagram, orders: &OrderData) -> Result<Rank2Automorphism, Rank2Error> {
    let mut cycle_of = Vec::new();
    let mut cycles = Vec::new();
    for f in &d.f {
        let mut co = vec![(usize::MAX, 0); f.len()];
        let mut cs = Vec::new();
        for start in 0..f.len() {
            if co[start].0 != usize::MAX {
                continue;
            }
            let mut cyc = Vec::new();
            let mut x = start;
            loop {
                co[x] = (cs.len(), cyc.len());
                cyc.push(x);
                x = f[x];
                if x == start {
                    break;
                }
            }
            cs.push(cyc);
        }
        cycle_of.push(co);
        cycles.push(cs);
    }
    let a = Rank2Automorphism {
        diagram: d.clone(),
        orders: orders.clone(),
        cycle_of,
        cycles,
    };
    let rep = a.check_well_defined();
    if rep.passed() {
        Ok(a)
    } else {
        Err(Rank2Error::Invalid(rep))
    }
}

impl Rank2Automorphism {
    pub fn diagram(&self) -> &Rank2Diagram {
        &self.diagram
    }

    pub fn orders(&self) -> &OrderData {
        &self.orders
    }

    pub fn m(&self, level: usize) -> u128 {
        self.orders.m[level]
    }

    /// `F^k(e)`.
    pub fn factor_pow(&self, e: &RBlue, k: i128) -> RBlue {
        let (c, pos) = self.cycle_of[e.level][e.index];
        let cyc = &self.cycles[e.level][c];
        let len = cyc.len() as i128;
        RBlue {
            level: e.level,
            index: cyc[(pos as i128 + k.rem_euclid(len)).rem_euclid(len) as usize],
        }
    }

    fn shift_for(&self, level: usize, power: i64, modulus: u128) -> i128 {
        // power·m_level reduced mod the relevant cycle length
        let m = self.orders.m[level] % modulus;
        let p = (power as i128).rem_euclid(modulus as i128) as u128;
        ((m * p) % modulus) as i128
    }

    /// Per vertex: the images `{s(α(e)) : s(e) = w}` and `{r(α(f)) : r(f) = w}`
    /// form one and the same singleton.
    pub fn check_well_defined(&self) -> ValidationReport {
        let mut rep = ValidationReport::new();
        let d = &self.diagram;
        for level in 0..=d.horizon() {
            for w in d.vertices(level) {
                let mut images = alloc::collections::BTreeSet::new();
                for e in d.edges_out_of(&w) {
                    images.insert(d.source(&self.edge_pow(&e, 1)));
                }
                if level < d.horizon() {
                    for f in d.edges_into(&w, None).unwrap_or_default() {
                        images.insert(d.range(&self.edge_pow(&f, 1)));
                    }
                }
                if images.len() > 1 {
                    rep.push("alpha well defined on vertices", format!("{w}"));
                } else if images.iter().next().is_some_and(|img| *img != self.vertex_pow(&w, 1)) {
                    rep.push("alpha rotates vertices by m_n", format!("{w}"));
                }
            }
        }
        rep
    }

    /// Least `l ≥ 1` with `α^l(e) = e`, that is `o(e)/gcd(m_n, o(e))`.
    pub fn edge_period(&self, e: &RBlue) -> u128 {
        let o = self.orders.o[e.level][e.index];
        o / gcd_u128(self.orders.m[e.level], o)
    }
}

impl GraphAutomorphism<Rank2Diagram> for Rank2Automorphism {
    fn vertex_pow(&self, v: &RVertex, power: i64) -> RVertex {
        let t = self.diagram.cycle_lengths[v.level][v.cycle] as u128;
        self.diagram.rotate(v, self.shift_for(v.level, power, t))
    }

    fn edge_pow(&self, e: &RBlue, power: i64) -> RBlue {
        let (c, _) = self.cycle_of[e.level][e.index];
        let len = self.cycles[e.level][c].len() as u128;
        self.factor_pow(e, self.shift_for(e.level, power, len))
    }
}

/// A path in blue-red normal form `λ = λ₁λ₂`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rank2Path {
    pub blue: PathWord<RVertex, RBlue>,
    pub red_len: u64,
}

impl Rank2Path {
    pub fn degree(&self) -> (usize, u64) {
        (self.blue.len(), self.red_len)
    }

    /// `α^l(λ) = α^l(λ₁)` followed by the red path of the same length.
    pub fn apply(&self, a: &Rank2Automorphism, power: i64) -> Self {
        Rank2Path {
            blue: a.path_pow(&self.blue, power),
            red_len: self.red_len,
        }
    }

    /// `Z(λ)` depends only on the blue part.
    pub fn cylinder_word(&self) -> &PathWord<RVertex, RBlue> {
        &self.blue
    }
}

/// Finds a description string for reports.
pub fn describe_edge(d: &Rank2Diagram, e: &RBlue) -> String {
    let be = d.edge(e);
    format!("{e} [{} <- {}]", be.range, be.source)
}
