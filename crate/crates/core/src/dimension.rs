//! Inductive limits `ℤ^{c_0} → ℤ^{c_1} → ⋯` of integer matrices: equality
//! and positivity of classes, decided when a finite witness exists.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::graph::{BVertex, BratteliDiagram, PathGraph};
use crate::rank2::{Rank2Diagram, RVertex};
use crate::report::Verdict;
use crate::scalar::{IntMatrix, MatrixError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimensionError {
    #[error("no matrices given")]
    Empty,
    #[error("A_{level} is {rows}x{cols}, expected {want_rows}x{want_cols}")]
    Shape {
        level: usize,
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("repetition from {0} needs a square period")]
    BadRepeat(usize),
    #[error("level {0} lies beyond the last stored matrix")]
    BeyondHorizon(usize),
    #[error("vector of length {got} at level {level} of size {want}")]
    BadVector { level: usize, got: usize, want: usize },
    #[error("cannot push from level {from} down to {to}")]
    Backwards { from: usize, to: usize },
    #[error("edge counts are not constant along a red cycle: {0}")]
    NotUniform(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// `A_n : ℤ^{c_n} → ℤ^{c_{n+1}}`, stored as `c_{n+1} × c_n` matrices, with
/// optional periodic repetition `A_n = A_{p + (n-p) mod (N-p)}` past `N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionGroupSpec {
    sizes: Vec<usize>,
    a: Vec<IntMatrix>,
    repeat_from: Option<usize>,
}

/// `[level, vector]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimGroupElement {
    pub level: usize,
    pub vector: Vec<i128>,
}

impl DimGroupElement {
    pub fn new(level: usize, vector: Vec<i128>) -> Self {
        DimGroupElement { level, vector }
    }

    pub fn basis(level: usize, size: usize, index: usize) -> Self {
        let mut vector = vec![0; size];
        vector[index] = 1;
        DimGroupElement { level, vector }
    }
}

impl fmt::Display for DimGroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {:?}]", self.level, self.vector)
    }
}

/// Why a verdict was reached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    /// Both images agree at this level.
    AgreeAtLevel(usize),
    /// The images differ at `level` and every later map is injective.
    InjectiveFrom { level: usize },
    /// The image is `≥ 0` at this level.
    NonnegativeAt(usize),
    /// The image is `< 0` entrywise at `level` and every later map is
    /// nonnegative with no zero row, so it stays negative.
    NegativeTrapFrom { level: usize },
    /// Every level reaches, within the window, a product with all entries `≥ 2`.
    PositiveProducts { window: usize },
    /// Nothing decisive below the horizon.
    Exhausted { horizon: usize },
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::AgreeAtLevel(m) => write!(f, "images agree at level {m}"),
            Justification::InjectiveFrom { level } => {
                write!(f, "images differ at level {level} and all later maps are injective")
            }
            Justification::NonnegativeAt(m) => write!(f, "image is nonnegative at level {m}"),
            Justification::NegativeTrapFrom { level } => write!(
                f,
                "image is negative at level {level} and later maps keep it negative"
            ),
            Justification::PositiveProducts { window } => write!(
                f,
                "every level reaches a product with entries >= 2 within {window} steps"
            ),
            Justification::Exhausted { horizon } => write!(f, "undecided up to level {horizon}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub verdict: Verdict,
    pub justification: Justification,
}

impl Decision {
    fn new(verdict: Verdict, justification: Justification) -> Self {
        Decision {
            verdict,
            justification,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.verdict, self.justification)
    }
}

impl DimensionGroupSpec {
    pub fn from_matrices(a: Vec<IntMatrix>, repeat_from: Option<usize>) -> Result<Self, DimensionError> {
        let first = a.first().ok_or(DimensionError::Empty)?;
        let mut sizes = vec![first.cols()];
        for (n, m) in a.iter().enumerate() {
            if m.cols() != sizes[n] {
                return Err(DimensionError::Shape {
                    level: n,
                    rows: m.rows(),
                    cols: m.cols(),
                    want_rows: m.rows(),
                    want_cols: sizes[n],
                });
            }
            sizes.push(m.rows());
        }
        if let Some(p) = repeat_from {
            if p >= a.len() || sizes[p] != sizes[a.len()] {
                return Err(DimensionError::BadRepeat(p));
            }
        }
        Ok(DimensionGroupSpec {
            sizes,
            a,
            repeat_from,
        })
    }

    /// `A_n = K_nᵀ`: a vertex class pushes to the sum over the edges it emits.
    pub fn from_bratteli(d: &BratteliDiagram) -> Result<Self, DimensionError> {
        let a = d.stored_matrices().iter().map(IntMatrix::transpose).collect();
        Self::from_matrices(a, d.repeat_from())
    }

    /// Constant sequence `A_n = a`.
    pub fn constant(a: IntMatrix) -> Result<Self, DimensionError> {
        Self::from_matrices(vec![a], Some(0))
    }

    /// Index `N` of the last explicit level.
    pub fn horizon(&self) -> usize {
        self.a.len()
    }

    pub fn repeat_from(&self) -> Option<usize> {
        self.repeat_from
    }

    fn stored(&self, n: usize) -> Option<usize> {
        let last = self.a.len();
        if n < last {
            return Some(n);
        }
        let p = self.repeat_from?;
        Some(p + (n - p) % (last - p))
    }

    pub fn matrix(&self, n: usize) -> Result<&IntMatrix, DimensionError> {
        self.stored(n)
            .map(|i| &self.a[i])
            .ok_or(DimensionError::BeyondHorizon(n))
    }

    pub fn size(&self, n: usize) -> Result<usize, DimensionError> {
        if n <= self.a.len() {
            return Ok(self.sizes[n]);
        }
        self.matrix(n).map(IntMatrix::cols)
    }

    /// `A_{m,n} = A_{m-1} ⋯ A_n`.
    pub fn product(&self, m: usize, n: usize) -> Result<IntMatrix, DimensionError> {
        let mut acc = IntMatrix::identity(self.size(n)?);
        for k in n..m {
            acc = self.matrix(k)?.checked_mul(&acc)?;
        }
        Ok(acc)
    }

    /// Stored indices of every `A_k` with `k ≥ level`, or `None` when the
    /// sequence stops.
    fn matrices_from(&self, level: usize) -> Option<Vec<usize>> {
        let p = self.repeat_from?;
        let period = self.a.len() - p;
        let mut idx: Vec<usize> = (level..level + self.a.len() + period)
            .filter_map(|k| self.stored(k))
            .collect();
        idx.sort_unstable();
        idx.dedup();
        Some(idx)
    }

    fn injective_from(&self, level: usize) -> bool {
        self.matrices_from(level).is_some_and(|idx| {
            idx.iter()
                .all(|&i| self.a[i].has_full_column_rank().unwrap_or(false))
        })
    }

    fn negative_trap_from(&self, level: usize) -> bool {
        self.matrices_from(level).is_some_and(|idx| {
            idx.iter().all(|&i| {
                let m = &self.a[i];
                m.is_nonnegative() && (0..m.rows()).all(|r| m.row(r).iter().any(|&x| x > 0))
            })
        })
    }
}

/// Image of `x` at level `m ≥ x.level`.
pub fn dg_push_to_level(
    spec: &DimensionGroupSpec,
    x: &DimGroupElement,
    m: usize,
) -> Result<DimGroupElement, DimensionError> {
    if m < x.level {
        return Err(DimensionError::Backwards { from: x.level, to: m });
    }
    let want = spec.size(x.level)?;
    if x.vector.len() != want {
        return Err(DimensionError::BadVector {
            level: x.level,
            got: x.vector.len(),
            want,
        });
    }
    let mut v = x.vector.clone();
    for k in x.level..m {
        v = spec.matrix(k)?.checked_mul_vec(&v)?;
    }
    Ok(DimGroupElement { level: m, vector: v })
}

/// Yes when the images agree at some level up to `horizon`; No when they
/// differ at a level after which every map is injective.
pub fn dg_equal(
    spec: &DimensionGroupSpec,
    x: &DimGroupElement,
    y: &DimGroupElement,
    horizon: usize,
) -> Result<Decision, DimensionError> {
    let start = x.level.max(y.level);
    let mut px = dg_push_to_level(spec, x, start)?;
    let mut py = dg_push_to_level(spec, y, start)?;
    for m in start..=horizon.max(start) {
        if m > start {
            px = dg_push_to_level(spec, &px, m)?;
            py = dg_push_to_level(spec, &py, m)?;
        }
        if px.vector == py.vector {
            return Ok(Decision::new(Verdict::Yes, Justification::AgreeAtLevel(m)));
        }
        if spec.injective_from(m) {
            return Ok(Decision::new(Verdict::No, Justification::InjectiveFrom { level: m }));
        }
    }
    Ok(Decision::new(Verdict::Unknown, Justification::Exhausted { horizon }))
}

/// Yes when some image up to `horizon` is `≥ 0`; No when an image is
/// strictly negative and stays so.
pub fn dg_is_positive(
    spec: &DimensionGroupSpec,
    x: &DimGroupElement,
    horizon: usize,
) -> Result<Decision, DimensionError> {
    let mut p = dg_push_to_level(spec, x, x.level)?;
    for m in x.level..=horizon.max(x.level) {
        if m > x.level {
            p = dg_push_to_level(spec, &p, m)?;
        }
        if p.vector.iter().all(|&c| c >= 0) {
            return Ok(Decision::new(Verdict::Yes, Justification::NonnegativeAt(m)));
        }
        if p.vector.iter().all(|&c| c < 0) && spec.negative_trap_from(m) {
            return Ok(Decision::new(
                Verdict::No,
                Justification::NegativeTrapFrom { level: m },
            ));
        }
    }
    Ok(Decision::new(Verdict::Unknown, Justification::Exhausted { horizon }))
}

/// Class of the vertex projection `p_v` of a Bratteli diagram.
pub fn k0_vertex_class(d: &BratteliDiagram, v: &BVertex) -> Result<DimGroupElement, DimensionError> {
    let size = d
        .level_size(v.level)
        .ok_or(DimensionError::BeyondHorizon(v.level))?;
    if v.index >= size {
        return Err(DimensionError::BadVector {
            level: v.level,
            got: v.index,
            want: size,
        });
    }
    Ok(DimGroupElement::basis(v.level, size, v.index))
}

/// Class of the corner cut down by a set of vertices on one level.
pub fn corner_class(d: &BratteliDiagram, level: usize, vertices: &[usize]) -> Result<DimGroupElement, DimensionError> {
    let size = d.level_size(level).ok_or(DimensionError::BeyondHorizon(level))?;
    let mut vector = vec![0; size];
    for &v in vertices {
        *vector
            .get_mut(v)
            .ok_or(DimensionError::BadVector { level, got: v, want: size })? += 1;
    }
    Ok(DimGroupElement { level, vector })
}

/// Carries a class of a telescoped diagram back to the original one.
pub fn untelescope_class(subsequence: &[usize], x: &DimGroupElement) -> Result<DimGroupElement, DimensionError> {
    let level = *subsequence
        .get(x.level)
        .ok_or(DimensionError::BeyondHorizon(x.level))?;
    Ok(DimGroupElement {
        level,
        vector: x.vector.clone(),
    })
}

/// Sufficient test for a simple group that is not `ℤ`: with a repetition
/// rule, every level reaches within `window` steps a product whose entries
/// are all `≥ 2`. Otherwise Unknown.
pub fn simplicity_check(spec: &DimensionGroupSpec, window: usize) -> Result<Decision, DimensionError> {
    let unknown = Decision::new(
        Verdict::Unknown,
        Justification::Exhausted {
            horizon: spec.horizon() + window,
        },
    );
    let Some(p) = spec.repeat_from else {
        return Ok(unknown);
    };
    let period = spec.horizon() - p;
    for n in 0..spec.horizon() + period {
        let mut acc = IntMatrix::identity(spec.size(n)?);
        let mut found = false;
        for m in n + 1..=n + window {
            acc = match spec.matrix(m - 1)?.checked_mul(&acc) {
                Ok(x) => x,
                Err(_) => break,
            };
            if acc.min_entry().is_some_and(|x| x >= 2) {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(unknown);
        }
    }
    Ok(Decision::new(Verdict::Yes, Justification::PositiveProducts { window }))
}

/// Counted matrices of a rank-2 diagram, level by level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rank2Counts {
    /// `A_n(i,j)`: blue edges into any vertex of cycle `j` on level `n` from cycle `i`.
    pub a: Vec<IntMatrix>,
    /// `B_n(i,j)`: blue edges out of any vertex of cycle `i` on level `n+1` into cycle `j`.
    pub b: Vec<IntMatrix>,
    /// Red cycle lengths.
    pub t: Vec<IntMatrix>,
}

/// Recovers `A_n`, `B_n`, `T_n` from the edges, checking that counts do not
/// depend on the vertex chosen along a red cycle.
pub fn rank2_k_matrices(d: &Rank2Diagram) -> Result<Rank2Counts, DimensionError> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut t = Vec::new();
    for n in 0..=d.horizon() {
        let lens: Vec<i128> = d.cycle_lengths(n).iter().map(|&x| x as i128).collect();
        t.push(IntMatrix::diagonal(&lens));
    }
    for n in 0..d.horizon() {
        let (c0, c1) = (d.cycle_lengths(n).len(), d.cycle_lengths(n + 1).len());
        let mut an = IntMatrix::zeros(c1, c0);
        let mut bn = IntMatrix::zeros(c1, c0);
        for j in 0..c0 {
            for pos in 0..d.cycle_lengths(n)[j] {
                let v = RVertex { level: n, cycle: j, pos };
                let mut row = vec![0i128; c1];
                for e in d.edges_into(&v, None).map_err(|_| DimensionError::BeyondHorizon(n))? {
                    row[d.source(&e).cycle] += 1;
                }
                for (i, &x) in row.iter().enumerate() {
                    if pos == 0 {
                        an.set(i, j, x);
                    } else if an.get(i, j) != x {
                        return Err(DimensionError::NotUniform(format!("range {v}")));
                    }
                }
            }
        }
        for i in 0..c1 {
            for pos in 0..d.cycle_lengths(n + 1)[i] {
                let w = RVertex { level: n + 1, cycle: i, pos };
                let mut row = vec![0i128; c0];
                for e in d.edges_out_of(&w) {
                    row[d.range(&e).cycle] += 1;
                }
                for (j, &x) in row.iter().enumerate() {
                    if pos == 0 {
                        bn.set(i, j, x);
                    } else if bn.get(i, j) != x {
                        return Err(DimensionError::NotUniform(format!("source {w}")));
                    }
                }
            }
        }
        a.push(an);
        b.push(bn);
    }
    Ok(Rank2Counts { a, b, t })
}
