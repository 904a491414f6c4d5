//! On-disk formats: Bratteli diagrams, finite groupoids, rank-2 data, and
//! the serialized certificates that reports carry.

use std::collections::BTreeSet;

use forge_core::germ::{parse_hinf_bisection, GermError, UnitCylinder};
use forge_core::graph::{
    BEdge, BVertex, BratteliDiagram, DiagramError, Eid, PathGraph, PathWord, RawBratteli, RawEdge, Vid,
};
use forge_core::groupoid::{Cocycle, FiniteGroupoid, GroupoidAutomorphism, GroupoidError};
use forge_core::rank2::{RBlue, RVertex, Rank2Data, Rank2Diagram};
use forge_core::scalar::{IntMatrix, MatrixError};
use forge_core::twisted::{ContractingWitness, WfcCertificate, WfcCounterexample, WfcOutcome, WfcWitness};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Groupoid(#[from] GroupoidError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Germ(#[from] GermError),
    #[error("bad automorphism spec {0:?}; expected identity, perm:…, mult:m or points:…")]
    AlphaSpec(String),
    #[error("orientation must be \"+1\" or \"-1\", got {0:?}")]
    Orientation(String),
    #[error("listed units {listed:?} differ from the computed units {computed:?}")]
    Units { listed: Vec<usize>, computed: Vec<usize> },
    #[error("cocycle has {got} values for {want} elements")]
    CocycleLength { got: usize, want: usize },
    #[error("{0}")]
    Path(String),
}

// ---- Bratteli diagrams ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelJson {
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub level: usize,
    pub range: usize,
    pub source: usize,
    pub mult: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramJson {
    pub levels: Vec<LevelJson>,
    pub edges: Vec<EdgeJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat_from: Option<usize>,
}

impl DiagramJson {
    pub fn to_raw(&self) -> RawBratteli {
        RawBratteli {
            sizes: self.levels.iter().map(|l| l.size).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| RawEdge {
                    level: e.level,
                    range: e.range,
                    source: e.source,
                    mult: e.mult as i128,
                    source_level: e.source_level,
                })
                .collect(),
            repeat_from: self.repeat_from,
        }
    }

    /// Zero multiplicities are left out.
    pub fn from_raw(raw: &RawBratteli) -> Self {
        DiagramJson {
            levels: raw.sizes.iter().map(|&size| LevelJson { size }).collect(),
            edges: raw
                .edges
                .iter()
                .filter(|e| e.mult != 0)
                .map(|e| EdgeJson {
                    level: e.level,
                    range: e.range,
                    source: e.source,
                    mult: e.mult as i64,
                    source_level: e.source_level,
                })
                .collect(),
            repeat_from: raw.repeat_from,
        }
    }

    pub fn from_diagram(d: &BratteliDiagram) -> Self {
        Self::from_raw(&d.to_raw())
    }

    pub fn diagram(&self) -> Result<BratteliDiagram, FormatError> {
        Ok(BratteliDiagram::from_raw(&self.to_raw())?)
    }
}

// ---- finite groupoids ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupoidJson {
    pub elements: usize,
    pub units: Vec<usize>,
    pub range: Vec<usize>,
    pub source: Vec<usize>,
    pub inverse: Vec<usize>,
    /// `[g, h, gh]` for every composable pair.
    pub triples: Vec<[usize; 3]>,
}

impl GroupoidJson {
    pub fn from_groupoid(g: &FiniteGroupoid) -> Self {
        let n = g.len();
        GroupoidJson {
            elements: n,
            units: g.units(),
            range: (0..n).map(|x| g.r(x)).collect(),
            source: (0..n).map(|x| g.s(x)).collect(),
            inverse: (0..n).map(|x| g.inv(x)).collect(),
            triples: g.triples().into_iter().map(|(a, b, c)| [a, b, c]).collect(),
        }
    }

    /// Structural checks only; the axioms are checked by the caller.
    pub fn groupoid(&self) -> Result<FiniteGroupoid, FormatError> {
        let triples: Vec<(usize, usize, usize)> = self.triples.iter().map(|t| (t[0], t[1], t[2])).collect();
        let g = FiniteGroupoid::from_triples(self.range.clone(), self.source.clone(), self.inverse.clone(), &triples)?;
        let mut listed = self.units.clone();
        listed.sort_unstable();
        listed.dedup();
        let computed = g.units();
        if listed != computed || g.len() != self.elements {
            return Err(FormatError::Units { listed, computed });
        }
        Ok(g)
    }
}

/// `H` for `forge twist`: a finite groupoid with its cocycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocycleGroupoidJson {
    pub groupoid: GroupoidJson,
    pub cocycle: Vec<i64>,
}

impl CocycleGroupoidJson {
    pub fn build(&self) -> Result<(FiniteGroupoid, Cocycle), FormatError> {
        let g = self.groupoid.groupoid()?;
        if self.cocycle.len() != g.len() {
            return Err(FormatError::CocycleLength {
                got: self.cocycle.len(),
                want: g.len(),
            });
        }
        Ok((g, Cocycle { values: self.cocycle.clone() }))
    }
}

fn list(s: &str) -> Option<Vec<usize>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(|x| x.trim().parse().ok()).collect()
}

/// `identity`, `perm:p0,p1,…` (on elements), `mult:m` (on `ℤ/k`), or
/// `points:π0,π1,…` (a point permutation of a full relation).
pub fn parse_alpha(spec: &str, g: &FiniteGroupoid) -> Result<GroupoidAutomorphism, FormatError> {
    let bad = || FormatError::AlphaSpec(spec.to_string());
    let spec = spec.trim();
    if spec == "identity" || spec == "id" {
        return Ok(GroupoidAutomorphism::identity(g.len()));
    }
    let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
    match kind {
        "perm" => Ok(GroupoidAutomorphism::new(list(rest).ok_or_else(bad)?)?),
        "mult" => {
            let m: usize = rest.trim().parse().map_err(|_| bad())?;
            Ok(GroupoidAutomorphism::cyclic_multiplier(g.len(), m)?)
        }
        "points" => Ok(GroupoidAutomorphism::full_relation_permutation(&list(rest).ok_or_else(bad)?)?),
        _ => Err(bad()),
    }
}

// ---- rank-2 data ----

/// One matrix, or one per level with the last repeating.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSeq {
    One(Vec<Vec<i64>>),
    Many(Vec<Vec<Vec<i64>>>),
}

impl MatrixSeq {
    fn matrices(&self) -> Result<Vec<IntMatrix>, FormatError> {
        let conv = |m: &Vec<Vec<i64>>| {
            let rows: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
            IntMatrix::from_rows(&rows)
        };
        Ok(match self {
            MatrixSeq::One(m) => vec![conv(m)?],
            MatrixSeq::Many(ms) => ms.iter().map(conv).collect::<Result<_, _>>()?,
        })
    }

    fn from_matrices(ms: &[IntMatrix]) -> Self {
        let conv = |m: &IntMatrix| -> Vec<Vec<i64>> {
            m.to_rows().into_iter().map(|r| r.into_iter().map(|x| x as i64).collect()).collect()
        };
        match ms {
            [m] => MatrixSeq::One(conv(m)),
            _ => MatrixSeq::Many(ms.iter().map(conv).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rank2Json {
    #[serde(rename = "T")]
    pub t: MatrixSeq,
    #[serde(rename = "A")]
    pub a: MatrixSeq,
    #[serde(rename = "B")]
    pub b: MatrixSeq,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<String>,
}

impl Rank2Json {
    pub fn from_data(data: &Rank2Data, horizon: Option<usize>, orientation: i8) -> Self {
        Rank2Json {
            t: MatrixSeq::from_matrices(&data.t),
            a: MatrixSeq::from_matrices(&data.a),
            b: MatrixSeq::from_matrices(&data.b),
            horizon,
            orientation: Some(if orientation < 0 { "-1" } else { "+1" }.to_string()),
        }
    }

    pub fn data(&self) -> Result<Rank2Data, FormatError> {
        Ok(Rank2Data {
            a: self.a.matrices()?,
            b: self.b.matrices()?,
            t: self.t.matrices()?,
        })
    }

    pub fn orientation(&self) -> Result<i8, FormatError> {
        match self.orientation.as_deref() {
            None | Some("+1") | Some("1") => Ok(1),
            Some("-1") => Ok(-1),
            Some(o) => Err(FormatError::Orientation(o.to_string())),
        }
    }
}

// ---- paths and unit sets ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BVertexJson {
    pub level: usize,
    pub index: usize,
}

/// `label` is 1-based, as in `(vw)_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BEdgeJson {
    pub level: usize,
    pub range: usize,
    pub source: usize,
    pub label: u64,
}

impl From<&BVertex> for BVertexJson {
    fn from(v: &BVertex) -> Self {
        BVertexJson { level: v.level, index: v.index }
    }
}

impl From<&BVertexJson> for BVertex {
    fn from(v: &BVertexJson) -> Self {
        BVertex { level: v.level, index: v.index }
    }
}

impl From<&BEdge> for BEdgeJson {
    fn from(e: &BEdge) -> Self {
        BEdgeJson {
            level: e.level,
            range: e.range,
            source: e.source,
            label: e.label + 1,
        }
    }
}

impl BEdgeJson {
    pub fn edge(&self) -> Result<BEdge, FormatError> {
        let label = self
            .label
            .checked_sub(1)
            .ok_or_else(|| FormatError::Path("edge labels are 1-based".into()))?;
        Ok(BEdge {
            level: self.level,
            range: self.range,
            source: self.source,
            label,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RVertexJson {
    pub level: usize,
    pub cycle: usize,
    pub pos: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RBlueJson {
    pub level: usize,
    pub index: usize,
}

/// A cylinder `Z(μ∖F)` of some path space; `text` is for reading only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum UnitSetJson {
    Af {
        anchor: BVertexJson,
        path: Vec<BEdgeJson>,
        excluded: Vec<BEdgeJson>,
        text: String,
    },
    Rank2 {
        anchor: RVertexJson,
        path: Vec<RBlueJson>,
        excluded: Vec<RBlueJson>,
        text: String,
    },
    Hinf {
        path: Vec<usize>,
        excluded: Vec<usize>,
        text: String,
    },
    Finite {
        units: Vec<usize>,
    },
}

fn edge_exists<G: PathGraph>(g: &G, e: &G::Edge) -> bool {
    let v = g.range(e);
    g.has_vertex(&v) && g.edges_into(&v, None).is_ok_and(|es| es.contains(e))
}

fn path_err(e: impl std::fmt::Display) -> FormatError {
    FormatError::Path(e.to_string())
}

impl UnitSetJson {
    pub fn af(c: &UnitCylinder<BVertex, BEdge>) -> Self {
        UnitSetJson::Af {
            anchor: c.path.range().into(),
            path: c.path.edges().iter().map(BEdgeJson::from).collect(),
            excluded: c.excluded.iter().map(BEdgeJson::from).collect(),
            text: c.to_string(),
        }
    }

    pub fn rank2(c: &UnitCylinder<RVertex, RBlue>) -> Self {
        let v = c.path.range();
        let blue = |e: &RBlue| RBlueJson { level: e.level, index: e.index };
        UnitSetJson::Rank2 {
            anchor: RVertexJson {
                level: v.level,
                cycle: v.cycle,
                pos: v.pos,
            },
            path: c.path.edges().iter().map(blue).collect(),
            excluded: c.excluded.iter().map(blue).collect(),
            text: c.to_string(),
        }
    }

    pub fn hinf(c: &UnitCylinder<Vid, Eid>) -> Self {
        UnitSetJson::Hinf {
            path: c.path.edges().iter().map(|e| e.0).collect(),
            excluded: c.excluded.iter().map(|e| e.0).collect(),
            text: c.to_string(),
        }
    }

    pub fn finite(s: &BTreeSet<usize>) -> Self {
        UnitSetJson::Finite {
            units: s.iter().copied().collect(),
        }
    }

    pub fn to_af(&self, d: &BratteliDiagram) -> Result<UnitCylinder<BVertex, BEdge>, FormatError> {
        let UnitSetJson::Af { anchor, path, excluded, .. } = self else {
            return Err(path_err("expected an AF cylinder"));
        };
        let edges = path.iter().map(BEdgeJson::edge).collect::<Result<Vec<_>, _>>()?;
        let word = PathWord::anchored(d, anchor.into(), edges).map_err(path_err)?;
        let ex: BTreeSet<BEdge> = excluded.iter().map(BEdgeJson::edge).collect::<Result<_, _>>()?;
        for e in word.edges().iter().chain(&ex) {
            if !edge_exists(d, e) {
                return Err(path_err(format!("no edge {e}")));
            }
        }
        Ok(UnitCylinder::new(d, word, ex)?)
    }

    pub fn to_rank2(&self, d: &Rank2Diagram) -> Result<UnitCylinder<RVertex, RBlue>, FormatError> {
        let UnitSetJson::Rank2 { anchor, path, excluded, .. } = self else {
            return Err(path_err("expected a rank-2 cylinder"));
        };
        let blue = |e: &RBlueJson| RBlue { level: e.level, index: e.index };
        let edges: Vec<RBlue> = path.iter().map(blue).collect();
        let ex: BTreeSet<RBlue> = excluded.iter().map(blue).collect();
        for e in edges.iter().chain(&ex) {
            let known = e.level < d.horizon() && e.index < d.edge_count(e.level);
            if !known || !edge_exists(d, e) {
                return Err(path_err(format!("no edge {e}")));
            }
        }
        let v = RVertex {
            level: anchor.level,
            cycle: anchor.cycle,
            pos: anchor.pos,
        };
        let word = PathWord::anchored(d, v, edges).map_err(path_err)?;
        Ok(UnitCylinder::new(d, word, ex)?)
    }

    pub fn to_hinf(&self) -> Result<UnitCylinder<Vid, Eid>, FormatError> {
        let UnitSetJson::Hinf { path, excluded, .. } = self else {
            return Err(path_err("expected an H_inf cylinder"));
        };
        let g = forge_core::germ::hinf();
        let word = forge_core::germ::hinf_word(path);
        Ok(UnitCylinder::new(&g, word, excluded.iter().map(|&i| Eid(i)).collect())?)
    }

    pub fn to_finite(&self) -> Result<BTreeSet<usize>, FormatError> {
        match self {
            UnitSetJson::Finite { units } => Ok(units.iter().copied().collect()),
            _ => Err(path_err("expected a finite unit set")),
        }
    }
}

// ---- certificates ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WfcWitnessJson {
    Finite { l: i64 },
    Af { l: i64, level: usize, through: usize },
    Rank2 { l: i64, s: u64, level: usize, through: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WfcCounterexampleJson {
    FiniteUnit { unit: usize, l: i64, arrow: usize },
    PeriodicPath { l: i64, start: BVertexJson, period: Vec<BEdgeJson> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndecidedJson {
    pub l: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderRowJson {
    pub n: usize,
    pub min_order: u128,
    pub n_times_m: u128,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WfcJson {
    pub depth: usize,
    pub lbound: i64,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<WfcWitnessJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<WfcCounterexampleJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undecided: Vec<UndecidedJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub order_table: Vec<OrderRowJson>,
}

impl WfcJson {
    pub fn from_cert(c: &WfcCertificate) -> Self {
        let mut out = WfcJson {
            depth: c.depth,
            lbound: c.lbound,
            verdict: c.verdict().to_string(),
            witnesses: Vec::new(),
            counterexample: None,
            undecided: Vec::new(),
            order_table: c
                .order_table
                .iter()
                .map(|&(n, min_order, n_times_m, holds)| OrderRowJson {
                    n,
                    min_order,
                    n_times_m,
                    holds,
                })
                .collect(),
        };
        match &c.outcome {
            WfcOutcome::Certificate(ws) => {
                out.witnesses = ws
                    .iter()
                    .map(|w| match *w {
                        WfcWitness::Finite { l } => WfcWitnessJson::Finite { l },
                        WfcWitness::Af { l, level, through } => WfcWitnessJson::Af { l, level, through },
                        WfcWitness::Rank2 { l, s, level, through } => WfcWitnessJson::Rank2 { l, s, level, through },
                    })
                    .collect()
            }
            WfcOutcome::Counterexample(WfcCounterexample::FiniteUnit { unit, l, arrow }) => {
                out.counterexample = Some(WfcCounterexampleJson::FiniteUnit {
                    unit: *unit,
                    l: *l,
                    arrow: *arrow,
                })
            }
            WfcOutcome::Counterexample(WfcCounterexample::PeriodicPath { l, start, period }) => {
                out.counterexample = Some(WfcCounterexampleJson::PeriodicPath {
                    l: *l,
                    start: start.into(),
                    period: period.iter().map(BEdgeJson::from).collect(),
                })
            }
            WfcOutcome::Unknown(u) => out.undecided = u.iter().map(|&(l, s)| UndecidedJson { l, s }).collect(),
        }
        out
    }

    pub fn to_cert(&self) -> Result<WfcCertificate, FormatError> {
        let outcome = if let Some(c) = &self.counterexample {
            WfcOutcome::Counterexample(match c {
                WfcCounterexampleJson::FiniteUnit { unit, l, arrow } => WfcCounterexample::FiniteUnit {
                    unit: *unit,
                    l: *l,
                    arrow: *arrow,
                },
                WfcCounterexampleJson::PeriodicPath { l, start, period } => WfcCounterexample::PeriodicPath {
                    l: *l,
                    start: start.into(),
                    period: period.iter().map(BEdgeJson::edge).collect::<Result<_, _>>()?,
                },
            })
        } else if self.verdict == "unknown" {
            WfcOutcome::Unknown(self.undecided.iter().map(|u| (u.l, u.s)).collect())
        } else {
            WfcOutcome::Certificate(
                self.witnesses
                    .iter()
                    .map(|w| match *w {
                        WfcWitnessJson::Finite { l } => WfcWitness::Finite { l },
                        WfcWitnessJson::Af { l, level, through } => WfcWitness::Af { l, level, through },
                        WfcWitnessJson::Rank2 { l, s, level, through } => WfcWitness::Rank2 { l, s, level, through },
                    })
                    .collect(),
            )
        };
        Ok(WfcCertificate {
            depth: self.depth,
            lbound: self.lbound,
            outcome,
            order_table: self
                .order_table
                .iter()
                .map(|r| (r.n, r.min_order, r.n_times_m, r.holds))
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LcEntryJson {
    pub set: UnitSetJson,
    /// Least `l ≥ 1` with `α^{−l}(V) ⊆ V`.
    pub l: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckJson {
    pub name: String,
    pub ok: bool,
}

/// `B = U × S`; `bisection` is the text form of `U`, readable by
/// `parse_hinf_bisection`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractingJson {
    pub w_h: UnitSetJson,
    pub w_g: UnitSetJson,
    pub lambda: Vec<usize>,
    pub l: u64,
    pub n: usize,
    pub bisection: String,
    pub g_range: UnitSetJson,
    pub g_source: UnitSetJson,
    pub checks: Vec<CheckJson>,
}

impl ContractingJson {
    pub fn new<S>(
        w: &ContractingWitness<S>,
        w_h: &UnitCylinder<Vid, Eid>,
        w_g: UnitSetJson,
        set: impl Fn(&S) -> UnitSetJson,
    ) -> Self {
        ContractingJson {
            w_h: UnitSetJson::hinf(w_h),
            w_g,
            lambda: w.lambda.edges().iter().map(|e| e.0).collect(),
            l: w.l,
            n: w.n,
            bisection: w.bisection.to_string(),
            g_range: set(&w.g_range),
            g_source: set(&w.g_source),
            checks: w
                .checks
                .iter()
                .map(|&(name, ok)| CheckJson {
                    name: name.to_string(),
                    ok,
                })
                .collect(),
        }
    }

    pub fn verified(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    /// The bisection parses back and matches `Z(λ^{2l}, λ^l)`.
    pub fn bisection_consistent(&self) -> Result<bool, FormatError> {
        let u = parse_hinf_bisection(&self.bisection)?;
        let lam = forge_core::germ::hinf_word(&self.lambda);
        let short = lam.power(self.l as usize).map_err(path_err)?;
        let long = lam.power(2 * self.l as usize).map_err(path_err)?;
        Ok(u == forge_core::germ::BasicBisection::plain(long, short)?)
    }
}

pub fn to_pretty<T: Serialize>(x: &T) -> Result<String, FormatError> {
    Ok(serde_json::to_string_pretty(x)?)
}
