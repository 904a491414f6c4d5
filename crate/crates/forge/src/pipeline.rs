//! Realization planners: from an AF or rank-2 input to the groupoid data
//! and certificates, collected in a self-contained report.
//!
//! Nothing here builds a C*-algebra. The analytic steps that turn the data
//! into one are listed in the report and flagged as not computed.

use forge_core::dimension::{
    dg_equal, dg_is_positive, dg_push_to_level, k0_vertex_class, rank2_k_matrices, simplicity_check,
    untelescope_class, Decision, DimGroupElement, DimensionError, DimensionGroupSpec,
};
use forge_core::germ::UnitCylinder;
use forge_core::graph::{
    edge_cycle_automorphism, enumerate_paths, telescope, telescope_for_growth, BVertex, BratteliDiagram,
    EdgeCycle, EdgeLabelling, GraphError, PathGraph, PathWord,
};
use forge_core::groupoid::FiniteGroupoid;
use forge_core::rank2::{
    build_rank2, compute_orders, rank2_automorphism, telescope_rank2, EntryBound, OrderData, RVertex,
    Rank2Automorphism, Rank2Data, Rank2Diagram, Rank2Error, TelescopeResult,
};
use forge_core::scalar::IntMatrix;
use forge_core::twisted::{
    check_wfc, contracting_bisection_witness, least_lc, minimality_verdict, reverify_wfc, verify_lc, AfUnits,
    GBackend, Rank2Units, TwistedError, UnitBackend,
};
use serde::{Deserialize, Serialize};

use crate::json::{
    CheckJson, ContractingJson, DiagramJson, FormatError, LcEntryJson, OrderRowJson, Rank2Json, UnitSetJson,
    WfcJson,
};
use crate::samples;

pub const SCHEMA_VERSION: u32 = 1;

/// Upper end of the search for the least lc shift.
const LC_CAP: u64 = 1 << 20;
/// Window for the simplicity test on the dimension group.
const SIMPLICITY_WINDOW: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("diagram failed validation: {0}")]
    Invalid(String),
    #[error("unit class has a negative entry at position {0}")]
    NegativeEntry(usize),
    #[error("corner must be nonzero")]
    ZeroCorner,
    #[error("unit vector has length {got}, level {level} has {want} vertices")]
    UnitLength { level: usize, got: usize, want: usize },
    #[error("level {0} is not in the diagram")]
    NoLevel(usize),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error(transparent)]
    Rank2(#[from] Rank2Error),
    #[error(transparent)]
    Twisted(#[from] TwistedError),
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("report does not match its input: {0}")]
    Mismatch(String),
}

/// `(level, a)` with `a(v)` copies of `Z(v)` in the unit corner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitClass {
    pub level: usize,
    pub vector: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanOptions {
    /// Certificate depth `D`; defaults to `lbound + 1`.
    pub depth: Option<usize>,
    pub lbound: i64,
    /// How far past a chosen level telescoping may look.
    pub reach: usize,
    pub seed: u64,
    /// Stabilization truncation `N`; defaults to the largest entry of the
    /// unit vector.
    pub stabilization: Option<usize>,
    pub lc_samples: usize,
    pub contracting_samples: usize,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            depth: None,
            lbound: 5,
            reach: 64,
            seed: 0,
            stabilization: None,
            lc_samples: 6,
            contracting_samples: 3,
        }
    }
}

impl PlanOptions {
    fn depth(&self) -> Result<usize, PipelineError> {
        match self.depth.unwrap_or(self.lbound.max(0) as usize + 1) {
            0 => Err(PipelineError::ZeroDepth),
            d => Ok(d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputEcho {
    Af {
        diagram: DiagramJson,
        unit: Option<UnitClass>,
    },
    Rank2 {
        data: Rank2Json,
        unit: Option<UnitClass>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameters {
    pub depth: usize,
    pub lbound: i64,
    pub reach: usize,
    pub seed: u64,
    pub lc_samples: usize,
    pub contracting_samples: usize,
}

/// Per new level `n`: least multiplicity between new levels `n` and `n + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: usize,
    pub from: usize,
    pub to: usize,
    pub min_multiplicity: i64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryBoundJson {
    pub n: usize,
    pub from: usize,
    pub to: usize,
    pub min_entry: i128,
    pub bound: u128,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TelescopingTrace {
    Af {
        subsequence: Vec<usize>,
        growth: Vec<GrowthRow>,
        telescoped: DiagramJson,
    },
    Rank2 {
        l_prime: Vec<usize>,
        l: Vec<usize>,
        big_m: Vec<u128>,
        entry_bounds: Vec<EntryBoundJson>,
        telescoped: Rank2Json,
    },
    /// The input ran out before the growth condition was met.
    Exhausted { reason: String, partial: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdersJson {
    /// `o(e)` per level, in blue-edge order.
    pub o: Vec<Vec<u128>>,
    pub big_o: Vec<u128>,
    pub m: Vec<u128>,
    pub growth: Vec<OrderRowJson>,
    pub satisfies_growth: bool,
}

impl OrdersJson {
    fn new(o: &OrderData) -> Self {
        OrdersJson {
            o: o.o.clone(),
            big_o: o.big_o.clone(),
            m: o.m.clone(),
            growth: o
                .growth_table()
                .into_iter()
                .map(|(n, min_order, n_times_m, holds)| OrderRowJson {
                    n,
                    min_order,
                    n_times_m,
                    holds,
                })
                .collect(),
            satisfies_growth: o.satisfies_growth(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutomorphismSpec {
    /// `(vw)_i ↦ (vw)_{i+1 mod k_vw}` on the telescoped diagram.
    EdgeCycle {
        description: String,
        order_below_depth: Option<u128>,
    },
    /// `α = F^{m_n}` on blue edges of level `n`.
    FactorPower {
        description: String,
        m: Vec<u128>,
        well_defined: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalityJson {
    pub depth: usize,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizationJson {
    /// Truncation of `× K` to the full relation on `n` points.
    pub n: usize,
    pub description: String,
    pub full_relation_principal_and_minimal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerPiece {
    pub vertex: String,
    pub copy: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassJson {
    pub level: usize,
    pub vector: Vec<i64>,
}

impl ClassJson {
    fn new(x: &DimGroupElement) -> Self {
        ClassJson {
            level: x.level,
            vector: x.vector.iter().map(|&c| c as i64).collect(),
        }
    }

    fn element(&self) -> DimGroupElement {
        DimGroupElement::new(self.level, self.vector.iter().map(|&c| c as i128).collect())
    }
}

/// `V = ⋃_v ⋃_{1≤j≤a(v)} Z(v)×{j}` and `W = (units of H_∞) × V`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerSpec {
    pub level: usize,
    pub vector: Vec<u64>,
    pub pieces: Vec<CornerPiece>,
    pub v: String,
    pub w: String,
    pub class: ClassJson,
    pub restriction: String,
}

fn check_unit_vector(a: &[i64], level: usize, want: usize) -> Result<Vec<u64>, PipelineError> {
    if let Some(i) = a.iter().position(|&x| x < 0) {
        return Err(PipelineError::NegativeEntry(i));
    }
    if a.len() != want {
        return Err(PipelineError::UnitLength {
            level,
            got: a.len(),
            want,
        });
    }
    if a.iter().all(|&x| x == 0) {
        return Err(PipelineError::ZeroCorner);
    }
    Ok(a.iter().map(|&x| x as u64).collect())
}

fn corner_from_vertices(level: usize, a: Vec<u64>, names: Vec<String>) -> CornerSpec {
    let mut pieces = Vec::new();
    for (name, &k) in names.iter().zip(&a) {
        for j in 1..=k as usize {
            pieces.push(CornerPiece {
                vertex: name.clone(),
                copy: j,
                text: format!("Z({name})x{{{j}}}"),
            });
        }
    }
    let v = pieces.iter().map(|p| p.text.as_str()).collect::<Vec<_>>().join(" u ");
    let class = ClassJson {
        level,
        vector: a.iter().map(|&x| x as i64).collect(),
    };
    CornerSpec {
        level,
        vector: a,
        pieces,
        w: format!("(units of H_inf) x ({v})"),
        v,
        class,
        restriction: "{g : r(g) in W and s(g) in W}".to_string(),
    }
}

/// Corner of the stabilized groupoid cut down by `a` at level `level`.
pub fn unit_corner_spec(d: &BratteliDiagram, level: usize, a: &[i64]) -> Result<CornerSpec, PipelineError> {
    let size = d.level_size(level).ok_or(PipelineError::NoLevel(level))?;
    let a = check_unit_vector(a, level, size)?;
    let names = (0..size).map(|i| BVertex { level, index: i }.to_string()).collect();
    Ok(corner_from_vertices(level, a, names))
}

/// As [`unit_corner_spec`], with `v_j` the first vertex of red cycle `j`.
pub fn rank2_corner_spec(d: &Rank2Diagram, level: usize, a: &[i64]) -> Result<CornerSpec, PipelineError> {
    if level > d.horizon() {
        return Err(PipelineError::NoLevel(level));
    }
    let size = d.cycle_lengths(level).len();
    let a = check_unit_vector(a, level, size)?;
    let names = (0..size)
        .map(|j| RVertex { level, cycle: j, pos: 0 }.to_string())
        .collect();
    Ok(corner_from_vertices(level, a, names))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionJson {
    pub verdict: String,
    pub justification: String,
}

impl From<&Decision> for DecisionJson {
    fn from(d: &Decision) -> Self {
        DecisionJson {
            verdict: d.verdict.to_string(),
            justification: d.justification.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassReport {
    pub name: String,
    pub class: ClassJson,
    pub positive: DecisionJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqualityReport {
    pub left: String,
    pub right: String,
    pub decision: DecisionJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KTheorySummary {
    pub classes: Vec<ClassReport>,
    pub equalities: Vec<EqualityReport>,
    pub simplicity: DecisionJson,
    pub simplicity_user_asserted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub used_for: String,
    pub status: String,
}

/// The analytic steps a report relies on but does not compute.
pub fn analytic_hypotheses() -> Vec<Hypothesis> {
    [
        ("amenability", "the groupoid is amenable, so full and reduced algebras agree and the UCT holds"),
        ("simplicity", "a minimal principal ample groupoid has a simple algebra"),
        ("pure infiniteness", "a locally contracting groupoid has a purely infinite algebra"),
        ("K-theory transfer", "the twisted product is KK-equivalent to the G-part, so K_0 is the dimension group"),
        ("classification", "Kirchberg-Phillips identifies the resulting Kirchberg algebra from its K-theory"),
    ]
    .into_iter()
    .map(|(name, used_for)| Hypothesis {
        name: name.to_string(),
        used_for: used_for.to_string(),
        status: "NOT COMPUTED".to_string(),
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizationReport {
    pub schema_version: u32,
    pub input: InputEcho,
    pub parameters: Parameters,
    pub telescoping: TelescopingTrace,
    /// Rank-2 only: orders of the diagram built from the input as given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_orders: Option<OrdersJson>,
    /// Rank-2 only: orders after telescoping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<OrdersJson>,
    pub automorphism: Option<AutomorphismSpec>,
    pub wfc: Option<WfcJson>,
    pub lc: Vec<LcEntryJson>,
    pub contracting: Vec<ContractingJson>,
    pub minimality: Option<MinimalityJson>,
    pub stabilization: StabilizationJson,
    pub corner: Option<CornerSpec>,
    pub k_theory: Option<KTheorySummary>,
    pub checks: Vec<CheckJson>,
    pub analytic_hypotheses: Vec<Hypothesis>,
    pub success: bool,
}

impl RealizationReport {
    fn new(input: InputEcho, parameters: Parameters, telescoping: TelescopingTrace, n: usize) -> Self {
        let r = FiniteGroupoid::full_relation(n);
        RealizationReport {
            schema_version: SCHEMA_VERSION,
            input,
            parameters,
            telescoping,
            input_orders: None,
            orders: None,
            automorphism: None,
            wfc: None,
            lc: Vec::new(),
            contracting: Vec::new(),
            minimality: None,
            stabilization: StabilizationJson {
                n,
                description: format!("G x R_{n}, R_{n} the full relation on {n} points, truncating G x K"),
                full_relation_principal_and_minimal: r.is_principal() && r.is_minimal(),
            },
            corner: None,
            k_theory: None,
            checks: Vec::new(),
            analytic_hypotheses: analytic_hypotheses(),
            success: false,
        }
    }

    fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.checks.push(CheckJson { name: name.into(), ok });
    }

    /// Every certificate holds: wfc is certified, every lc entry and
    /// contracting witness verifies, minimality is not refuted, and every
    /// recorded check passed.
    fn settle(&mut self) {
        self.success = self.wfc.as_ref().is_some_and(|w| w.verdict == "yes")
            && !self.lc.is_empty()
            && !self.contracting.is_empty()
            && self.contracting.iter().all(|c| c.verified())
            && self.minimality.as_ref().is_some_and(|m| m.verdict != "no")
            && self.checks.iter().all(|c| c.ok);
    }
}

fn stabilization_n(opts: &PlanOptions, unit: Option<&UnitClass>) -> usize {
    opts.stabilization
        .or_else(|| unit.and_then(|u| u.vector.iter().copied().max()).map(|m| m.max(1) as usize))
        .unwrap_or(1)
}

/// Cylinders `Z(μ)` with `|μ| ∈ {1, 2}` anchored at level 0, and
/// `Z(v∖{e})` for the first edge `e` into each level-0 vertex.
fn lc_candidates<G: PathGraph>(g: &G, anchors: &[G::Vertex]) -> Result<Vec<UnitCylinder<G::Vertex, G::Edge>>, PipelineError> {
    let mut out = Vec::new();
    for v in anchors {
        for len in 1..=2 {
            for p in enumerate_paths(g, v, len, None)? {
                out.push(UnitCylinder::cylinder(p));
            }
        }
        if let Some(e) = g.edges_into(v, None)?.first() {
            let excluded = [e.clone()].into_iter().collect();
            out.push(UnitCylinder::new(g, PathWord::vertex(v.clone()), excluded).map_err(TwistedError::from)?);
        }
    }
    Ok(out)
}

fn pick<T: Clone>(items: &[T], k: usize, seed: u64) -> Vec<T> {
    use rand::seq::SliceRandom;
    let mut r = samples::rng(seed);
    let mut v = items.to_vec();
    v.shuffle(&mut r);
    v.truncate(k);
    v
}

fn certify_units<B: UnitBackend>(
    report: &mut RealizationReport,
    b: &B,
    candidates: &[B::Set],
    opts: &PlanOptions,
    json: impl Fn(&B::Set) -> UnitSetJson,
) -> Result<(), PipelineError> {
    let chosen = pick(candidates, opts.lc_samples, opts.seed);
    let mut entries = Vec::new();
    for v in &chosen {
        let l = least_lc(b, v, LC_CAP)?;
        entries.push((v.clone(), l));
        report.lc.push(LcEntryJson { set: json(v), l });
    }
    let mut r = samples::rng(opts.seed.wrapping_add(1));
    for (v, l) in entries.iter().take(opts.contracting_samples) {
        let w_h = samples::hinf_basic_open(&mut r);
        let w = contracting_bisection_witness(b, &w_h, v, Some(*l))?;
        report.contracting.push(ContractingJson::new(&w, &w_h, json(v), &json));
    }
    Ok(())
}

fn push_orig(spec: &DimensionGroupSpec, x: &DimGroupElement, m: usize) -> Result<DimGroupElement, PipelineError> {
    Ok(dg_push_to_level(spec, x, m)?)
}

/// Telescoped level carrying the unit class: the first `j` with `sub[j] ≥ n`,
/// and the class pushed there.
fn lift_unit(
    spec: &DimensionGroupSpec,
    sub: &[usize],
    unit: &UnitClass,
) -> Result<(usize, DimGroupElement), PipelineError> {
    let j = sub
        .iter()
        .position(|&s| s >= unit.level)
        .ok_or(PipelineError::NoLevel(unit.level))?;
    let x = DimGroupElement::new(unit.level, unit.vector.iter().map(|&c| c as i128).collect());
    let pushed = push_orig(spec, &x, sub[j])?;
    Ok((j, pushed))
}

fn to_i64(v: &[i128]) -> Vec<i64> {
    v.iter().map(|&c| c as i64).collect()
}

fn parameters(opts: &PlanOptions, depth: usize) -> Parameters {
    Parameters {
        depth,
        lbound: opts.lbound,
        reach: opts.reach,
        seed: opts.seed,
        lc_samples: opts.lc_samples,
        contracting_samples: opts.contracting_samples,
    }
}

fn growth_rows(t: &BratteliDiagram, sub: &[usize]) -> Vec<GrowthRow> {
    (0..sub.len() - 1)
        .map(|n| {
            let min = t.k_matrix(n).and_then(IntMatrix::min_entry).unwrap_or(0);
            GrowthRow {
                n,
                from: sub[n],
                to: sub[n + 1],
                min_multiplicity: min as i64,
                holds: min > n as i128,
            }
        })
        .collect()
}

/// AF input: telescope until `k_vw > n`, cycle the edges, certify.
pub fn plan_af_realization(
    diagram: &DiagramJson,
    unit: Option<UnitClass>,
    opts: &PlanOptions,
) -> Result<RealizationReport, PipelineError> {
    let raw = diagram.to_raw();
    let rep = forge_core::graph::validate_bratteli(&raw).map_err(|e| PipelineError::Invalid(e.to_string()))?;
    if !rep.passed() {
        return Err(PipelineError::Invalid(rep.to_string()));
    }
    let d = diagram.diagram()?;
    let spec = DimensionGroupSpec::from_bratteli(&d)?;
    if let Some(u) = &unit {
        let size = d.level_size(u.level).ok_or(PipelineError::NoLevel(u.level))?;
        check_unit_vector(&u.vector, u.level, size)?;
    }
    let depth = opts.depth()?;
    let input = InputEcho::Af {
        diagram: diagram.clone(),
        unit: unit.clone(),
    };
    let n_stab = stabilization_n(opts, unit.as_ref());
    let grown = match telescope_for_growth(&d, depth + 1, opts.reach) {
        Ok(g) => g,
        Err(e) => {
            let trace = TelescopingTrace::Exhausted {
                reason: e.to_string(),
                partial: e.partial.clone(),
            };
            return Ok(RealizationReport::new(input, parameters(opts, depth), trace, n_stab));
        }
    };
    let (sub, t) = (grown.subsequence, grown.diagram);
    let trace = TelescopingTrace::Af {
        growth: growth_rows(&t, &sub),
        subsequence: sub.clone(),
        telescoped: DiagramJson::from_diagram(&t),
    };
    let mut report = RealizationReport::new(input, parameters(opts, depth), trace, n_stab);

    let ec = edge_cycle_automorphism(&t, &EdgeLabelling::default())?;
    report.automorphism = Some(AutomorphismSpec::EdgeCycle {
        description: "(vw)_i -> (vw)_(i+1 mod k_vw) on the telescoped diagram, label order".into(),
        order_below_depth: ec.order_below(depth + 1),
    });
    let backend = GBackend::Af(&ec);
    let cert = check_wfc(&backend, depth, opts.lbound)?;
    report.wfc = Some(WfcJson::from_cert(&cert));
    let anchors: Vec<BVertex> = (0..t.level_size(0).unwrap_or(0)).map(|i| BVertex { level: 0, index: i }).collect();
    let candidates = lc_candidates(&t, &anchors)?;
    certify_units(&mut report, &AfUnits(&ec), &candidates, opts, UnitSetJson::af)?;
    report.minimality = Some(MinimalityJson {
        depth,
        verdict: minimality_verdict(&backend, depth)?.to_string(),
    });

    // K-theory, read in the original diagram
    let tspec = DimensionGroupSpec::from_bratteli(&t)?;
    let horizon = sub.last().copied().unwrap_or(0);
    let mut classes = Vec::new();
    let mut equalities = Vec::new();
    for i in 0..d.level_size(0).unwrap_or(0) {
        let x = k0_vertex_class(&d, &BVertex { level: 0, index: i })?;
        classes.push(ClassReport {
            name: format!("[p_v0_{i}]"),
            class: ClassJson::new(&x),
            positive: (&dg_is_positive(&spec, &x, horizon)?).into(),
        });
        for j in 1..sub.len().min(4) {
            let tx = dg_push_to_level(&tspec, &k0_vertex_class(&t, &BVertex { level: 0, index: i })?, j)?;
            let back = untelescope_class(&sub, &tx)?;
            equalities.push(EqualityReport {
                left: format!("[p_v0_{i}]"),
                right: format!("telescoped {tx} at original level {}", back.level),
                decision: (&dg_equal(&spec, &x, &back, horizon)?).into(),
            });
        }
    }
    if let Some(u) = &unit {
        let (j, pushed) = lift_unit(&spec, &sub, u)?;
        let corner = unit_corner_spec(&t, j, &to_i64(&pushed.vector))?;
        let original = DimGroupElement::new(u.level, u.vector.iter().map(|&c| c as i128).collect());
        let back = untelescope_class(&sub, &corner.class.element())?;
        equalities.push(EqualityReport {
            left: format!("unit {original}"),
            right: format!("corner class {} at original level {}", corner.class.element(), back.level),
            decision: (&dg_equal(&spec, &original, &back, horizon)?).into(),
        });
        classes.push(ClassReport {
            name: "[1_W]".into(),
            class: ClassJson::new(&original),
            positive: (&dg_is_positive(&spec, &original, horizon)?).into(),
        });
        report.corner = Some(corner);
    }
    for e in &equalities {
        report.check(format!("{} = {}", e.left, e.right), e.decision.verdict == "yes");
    }
    for c in &classes {
        report.check(format!("{} positive", c.name), c.positive.verdict == "yes");
    }
    report.k_theory = Some(KTheorySummary {
        classes,
        equalities,
        simplicity: (&simplicity_check(&spec, SIMPLICITY_WINDOW)?).into(),
        simplicity_user_asserted: false,
    });
    report.settle();
    Ok(report)
}

/// `o(e) = A_n(i, j)·T_n(j, j)` for every blue edge from cycle `i` into cycle `j`.
pub fn orders_match_counts(d: &Rank2Diagram, data: &Rank2Data, o: &OrderData) -> bool {
    (0..d.horizon()).all(|n| {
        d.blue_edges(n).all(|e| {
            let be = d.edge(&e);
            let (i, j) = (be.source.cycle, be.range.cycle);
            o.o[n][e.index] as i128 == data.a(n).get(i, j) * data.t(n).get(j, j)
        })
    })
}

fn rank2_spec(data: &Rank2Data, horizon: Option<usize>) -> Result<DimensionGroupSpec, PipelineError> {
    Ok(match horizon {
        Some(h) => DimensionGroupSpec::from_matrices((0..h.max(1)).map(|n| data.a(n).clone()).collect(), None)?,
        None => DimensionGroupSpec::from_matrices(data.a.clone(), Some(data.a.len() - 1))?,
    })
}

fn entry_bound_json(b: &EntryBound) -> EntryBoundJson {
    EntryBoundJson {
        n: b.n,
        from: b.from,
        to: b.to,
        min_entry: b.min_entry,
        bound: b.bound,
        holds: b.holds(),
    }
}

/// Rank-2 input: subsequence, orders, `α = F^{m_n}`, certificates.
pub fn plan_rank2_realization(
    input: &Rank2Json,
    unit: Option<UnitClass>,
    opts: &PlanOptions,
) -> Result<RealizationReport, PipelineError> {
    let data = input.data()?;
    let orientation = input.orientation()?;
    let levels = input
        .horizon
        .unwrap_or_else(|| data.a.len().max(data.b.len()).max(data.t.len().saturating_sub(1)).max(1));
    data.check(levels)?;
    let depth = opts.depth()?;
    let spec = rank2_spec(&data, input.horizon)?;
    if let Some(u) = &unit {
        if u.level > levels {
            return Err(PipelineError::NoLevel(u.level));
        }
        check_unit_vector(&u.vector, u.level, data.t(u.level).rows())?;
    }
    let n_stab = stabilization_n(opts, unit.as_ref());
    let echo = InputEcho::Rank2 {
        data: input.clone(),
        unit: unit.clone(),
    };
    let given = build_rank2(&data, levels, orientation)?;
    let given_orders = compute_orders(&given)?;

    let exhausted = |reason: String, partial: Vec<usize>| {
        let mut r = RealizationReport::new(
            echo.clone(),
            parameters(opts, depth),
            TelescopingTrace::Exhausted { reason, partial },
            n_stab,
        );
        r.input_orders = Some(OrdersJson::new(&given_orders));
        r
    };
    let tel = match telescope_rank2(&data, depth + 1, opts.reach) {
        Ok(t) => t,
        Err(e) => return Ok(exhausted(e.to_string(), e.partial)),
    };
    if let Some(h) = input.horizon {
        if tel.l.iter().any(|&x| x > h) {
            let partial = tel.l.iter().copied().filter(|&x| x <= h).collect();
            return Ok(exhausted(
                format!("the subsequence needs levels past the horizon {h}: {:?}", tel.l),
                partial,
            ));
        }
    }
    let trace = TelescopingTrace::Rank2 {
        l_prime: tel.l_prime.clone(),
        l: tel.l.clone(),
        big_m: tel.big_m.clone(),
        entry_bounds: tel.entry_bounds.iter().map(entry_bound_json).collect(),
        telescoped: Rank2Json::from_data(&tel.data, None, orientation),
    };
    let mut report = RealizationReport::new(echo, parameters(opts, depth), trace, n_stab);
    report.input_orders = Some(OrdersJson::new(&given_orders));
    report.check("entry bounds re-derived from the input", tel.reverify(&data));

    let d = build_rank2(&tel.data, depth + 1, orientation)?;
    let orders = compute_orders(&d)?;
    report.check("o(e) = A_n(i,j) T_n(j,j)", orders_match_counts(&d, &tel.data, &orders));
    report.check("o(e) > n m_n on every level", orders.satisfies_growth());
    let counts = rank2_k_matrices(&d)?;
    report.check("counted A, B, T equal the telescoped data", {
        (0..d.horizon()).all(|n| &counts.a[n] == tel.data.a(n) && &counts.b[n] == tel.data.b(n))
    });
    report.orders = Some(OrdersJson::new(&orders));
    let auto = rank2_automorphism(&d, &orders)?;
    report.automorphism = Some(AutomorphismSpec::FactorPower {
        description: "F^(m_n) on blue edges of level n, pred^(m_n) on vertices".into(),
        m: orders.m.clone(),
        well_defined: auto.check_well_defined().passed(),
    });
    let backend = GBackend::Rank2(&auto);
    let cert = check_wfc(&backend, depth, opts.lbound)?;
    report.wfc = Some(WfcJson::from_cert(&cert));
    let anchors: Vec<RVertex> = d.vertices(0).collect();
    let candidates = lc_candidates(&d, &anchors)?;
    certify_units(&mut report, &Rank2Units(&auto), &candidates, opts, UnitSetJson::rank2)?;
    report.minimality = Some(MinimalityJson {
        depth,
        verdict: minimality_verdict(&backend, depth)?.to_string(),
    });

    let horizon = tel.l.last().copied().unwrap_or(0).min(input.horizon.unwrap_or(usize::MAX));
    let mut classes = Vec::new();
    let mut equalities = Vec::new();
    if let Some(u) = &unit {
        let (j, pushed) = lift_unit(&spec, &tel.l, u)?;
        let corner = rank2_corner_spec(&d, j, &to_i64(&pushed.vector))?;
        let original = DimGroupElement::new(u.level, u.vector.iter().map(|&c| c as i128).collect());
        let back = untelescope_class(&tel.l, &corner.class.element())?;
        equalities.push(EqualityReport {
            left: format!("unit {original}"),
            right: format!("corner class {} at original level {}", corner.class.element(), back.level),
            decision: (&dg_equal(&spec, &original, &back, horizon)?).into(),
        });
        classes.push(ClassReport {
            name: "[1_W]".into(),
            class: ClassJson::new(&original),
            positive: (&dg_is_positive(&spec, &original, horizon)?).into(),
        });
        report.corner = Some(corner);
    }
    for e in &equalities {
        report.check(format!("{} = {}", e.left, e.right), e.decision.verdict == "yes");
    }
    for c in &classes {
        report.check(format!("{} positive", c.name), c.positive.verdict == "yes");
    }
    report.k_theory = Some(KTheorySummary {
        classes,
        equalities,
        simplicity: (&simplicity_check(&spec, SIMPLICITY_WINDOW)?).into(),
        simplicity_user_asserted: true,
    });
    report.settle();
    Ok(report)
}

fn mismatch(what: &str) -> PipelineError {
    PipelineError::Mismatch(what.to_string())
}

fn reverify_units<B: UnitBackend>(
    out: &mut Vec<CheckJson>,
    report: &RealizationReport,
    b: &B,
    parse: impl Fn(&UnitSetJson) -> Result<B::Set, FormatError>,
    json: impl Fn(&B::Set) -> UnitSetJson,
) -> Result<(), PipelineError> {
    let mut push = |name: String, ok: bool| out.push(CheckJson { name, ok });
    for (i, e) in report.lc.iter().enumerate() {
        let v = parse(&e.set)?;
        push(format!("lc entry {i}"), verify_lc(b, &v, e.l)?);
    }
    for (i, c) in report.contracting.iter().enumerate() {
        let w_h = c.w_h.to_hinf()?;
        let v = parse(&c.w_g)?;
        let again = contracting_bisection_witness(b, &w_h, &v, Some(c.l))?;
        let same = ContractingJson::new(&again, &w_h, json(&v), &json) == *c;
        push(
            format!("contracting witness {i}"),
            same && again.verified() && c.bisection_consistent()?,
        );
    }
    Ok(())
}

/// Re-checks every certificate in `report` from the report alone.
pub fn reverify_report(report: &RealizationReport) -> Result<Vec<CheckJson>, PipelineError> {
    let mut out = Vec::new();
    let push = |out: &mut Vec<CheckJson>, name: &str, ok: bool| out.push(CheckJson { name: name.to_string(), ok });
    push(&mut out, "schema version", report.schema_version == SCHEMA_VERSION);
    push(&mut out, "analytic hypotheses listed", report.analytic_hypotheses == analytic_hypotheses());
    let depth = report.parameters.depth;
    match (&report.input, &report.telescoping) {
        (_, TelescopingTrace::Exhausted { .. }) => {
            push(&mut out, "no certificates claimed", !report.success && report.wfc.is_none());
        }
        (InputEcho::Af { diagram, unit }, TelescopingTrace::Af { subsequence, growth, telescoped }) => {
            let d = diagram.diagram()?;
            let t = telescope(&d, subsequence)?;
            push(&mut out, "telescoped diagram", DiagramJson::from_diagram(&t) == *telescoped);
            push(
                &mut out,
                "k_vw > n on the telescoped diagram",
                growth_rows(&t, subsequence) == *growth && growth.iter().all(|g| g.holds),
            );
            let ec: EdgeCycle = edge_cycle_automorphism(&t, &EdgeLabelling::default())?;
            let backend = GBackend::Af(&ec);
            let wfc = report.wfc.as_ref().ok_or_else(|| mismatch("missing wfc"))?;
            let cert = wfc.to_cert()?;
            push(&mut out, "wfc certificate", reverify_wfc(&backend, &cert) && WfcJson::from_cert(&cert) == *wfc);
            reverify_units(&mut out, report, &AfUnits(&ec), |s| s.to_af(&t), UnitSetJson::af)?;
            if let (Some(u), Some(c)) = (unit, &report.corner) {
                let spec = DimensionGroupSpec::from_bratteli(&d)?;
                let (j, pushed) = lift_unit(&spec, subsequence, u)?;
                let again = unit_corner_spec(&t, j, &to_i64(&pushed.vector))?;
                push(&mut out, "corner", again == *c);
            }
        }
        (InputEcho::Rank2 { data, unit }, TelescopingTrace::Rank2 { l_prime, l, big_m, entry_bounds, telescoped }) => {
            let original = data.data()?;
            let tdata = telescoped.data()?;
            let bounds = entry_bounds
                .iter()
                .map(|b| EntryBound {
                    n: b.n,
                    from: b.from,
                    to: b.to,
                    min_entry: b.min_entry,
                    bound: b.bound,
                })
                .collect();
            let tel = TelescopeResult {
                l_prime: l_prime.clone(),
                l: l.clone(),
                big_m: big_m.clone(),
                data: tdata.clone(),
                entry_bounds: bounds,
            };
            push(&mut out, "entry bounds", tel.reverify(&original));
            let products = l.windows(2).enumerate().all(|(n, w)| {
                original.a_product(w[1], w[0]).ok().as_ref() == Some(tdata.a(n))
                    && original.b_product(w[1], w[0]).ok().as_ref() == Some(tdata.b(n))
            });
            push(&mut out, "telescoped data are products of the input", products);
            let d = build_rank2(&tdata, depth + 1, telescoped.orientation()?)?;
            let orders = compute_orders(&d)?;
            push(
                &mut out,
                "orders",
                report.orders.as_ref() == Some(&OrdersJson::new(&orders))
                    && orders.satisfies_growth()
                    && orders_match_counts(&d, &tdata, &orders),
            );
            let auto: Rank2Automorphism = rank2_automorphism(&d, &orders)?;
            let backend = GBackend::Rank2(&auto);
            let wfc = report.wfc.as_ref().ok_or_else(|| mismatch("missing wfc"))?;
            let cert = wfc.to_cert()?;
            push(&mut out, "wfc certificate", reverify_wfc(&backend, &cert) && WfcJson::from_cert(&cert) == *wfc);
            reverify_units(&mut out, report, &Rank2Units(&auto), |s| s.to_rank2(&d), UnitSetJson::rank2)?;
            if let (Some(u), Some(c)) = (unit, &report.corner) {
                let spec = rank2_spec(&original, data.horizon)?;
                let (j, pushed) = lift_unit(&spec, l, u)?;
                let again = rank2_corner_spec(&d, j, &to_i64(&pushed.vector))?;
                push(&mut out, "corner", again == *c);
            }
        }
        _ => return Err(mismatch("telescoping trace does not fit the input kind")),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_two() -> DiagramJson {
        let d = BratteliDiagram::constant(IntMatrix::from_rows(&[vec![2]]).unwrap()).unwrap();
        DiagramJson::from_diagram(&d)
    }

    #[test]
    fn corner_rules() {
        let d = BratteliDiagram::constant(IntMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap()).unwrap();
        assert!(matches!(unit_corner_spec(&d, 0, &[0, 0]), Err(PipelineError::ZeroCorner)));
        assert!(matches!(unit_corner_spec(&d, 0, &[1, -1]), Err(PipelineError::NegativeEntry(1))));
        assert!(matches!(unit_corner_spec(&d, 0, &[1]), Err(PipelineError::UnitLength { .. })));
        let c = unit_corner_spec(&d, 1, &[0, 1]).unwrap();
        assert_eq!(c.pieces.len(), 1);
        assert_eq!(c.pieces[0].text, "Z(v1_1)x{1}");
        assert_eq!(
            c.class.element(),
            k0_vertex_class(&d, &BVertex { level: 1, index: 1 }).unwrap()
        );
    }

    #[test]
    fn af_report_for_constant_two() {
        let unit = UnitClass { level: 0, vector: vec![2] };
        let r = plan_af_realization(&constant_two(), Some(unit), &PlanOptions::default()).unwrap();
        assert!(r.success, "{:#?}", r.checks);
        let c = r.corner.as_ref().unwrap();
        assert_eq!(c.v, "Z(v0_0)x{1} u Z(v0_0)x{2}");
        assert_eq!(r.stabilization.n, 2);
        assert!(reverify_report(&r).unwrap().iter().all(|c| c.ok));
    }

    #[test]
    fn af_exhaustion_is_reported() {
        let opts = PlanOptions {
            reach: 1,
            ..PlanOptions::default()
        };
        let r = plan_af_realization(&constant_two(), None, &opts).unwrap();
        assert!(!r.success);
        assert!(matches!(r.telescoping, TelescopingTrace::Exhausted { .. }));
    }

    fn rank2_constant_two() -> Rank2Json {
        serde_json::from_str(r#"{"T":[[1]],"A":[[2]],"B":[[2]]}"#).unwrap()
    }

    #[test]
    fn rank2_report_round_trips() {
        let unit = UnitClass { level: 0, vector: vec![1] };
        let opts = PlanOptions {
            depth: Some(5),
            lbound: 50,
            ..PlanOptions::default()
        };
        let r = plan_rank2_realization(&rank2_constant_two(), Some(unit), &opts).unwrap();
        assert!(r.success, "{:#?}", r.checks);
        let TelescopingTrace::Rank2 { l, big_m, .. } = &r.telescoping else { panic!() };
        assert_eq!(l, &vec![0, 1, 2, 5, 11, 21, 36]);
        assert_eq!(big_m, &vec![0, 0, 2, 18, 210, 4306]);
        let text = serde_json::to_string(&r).unwrap();
        let back: RealizationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert!(reverify_report(&back).unwrap().iter().all(|c| c.ok));
    }

    #[test]
    fn two_level_prefix_keeps_its_orders() {
        let small = Rank2Json::from_data(&Rank2Data::two_level_example(), Some(2), 1);
        let r = plan_rank2_realization(&small, None, &PlanOptions::default()).unwrap();
        let o = r.input_orders.as_ref().unwrap();
        assert_eq!(o.big_o, vec![3, 12]);
        assert_eq!(o.m, vec![0, 0, 12]);
        assert!(matches!(r.telescoping, TelescopingTrace::Exhausted { .. }));
        assert!(!r.success);
    }

    #[test]
    fn non_diagonal_t_is_rejected() {
        let bad: Rank2Json = serde_json::from_str(r#"{"T":[[1,1],[0,1]],"A":[[2,0],[0,2]],"B":[[2,0],[0,2]]}"#).unwrap();
        assert!(matches!(
            plan_rank2_realization(&bad, None, &PlanOptions::default()),
            Err(PipelineError::Rank2(Rank2Error::BadT(0)))
        ));
    }

    #[test]
    fn tampered_reports_fail() {
        let mut r = plan_af_realization(&constant_two(), None, &PlanOptions::default()).unwrap();
        r.lc[0].l += 1;
        if let Some(w) = r.wfc.as_mut() {
            w.lbound += 40;
        }
        let checks = reverify_report(&r).unwrap();
        assert!(checks.iter().any(|c| !c.ok));
    }
}
