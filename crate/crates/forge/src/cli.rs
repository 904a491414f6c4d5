//! The `forge` command line. Every command prints JSON on stdout; the exit
//! code is 0 when the requested check or certificate succeeds, 1 when it
//! does not, and 2 on bad input.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use forge_core::dimension::{dg_equal, dg_is_positive, DimGroupElement, DimensionGroupSpec};
use forge_core::graph::{telescope, validate_bratteli, BVertex};
use forge_core::groupoid::{verify_groupoid_axioms, FiniteGroupoid, GroupoidAutomorphism};
use forge_core::rank2::{
    build_rank2, compute_orders, rank2_automorphism, telescope_rank2, Rank2Automorphism, Rank2Diagram,
};
use forge_core::twisted::{
    check_wfc, contracting_bisection_witness, hinf_isotropy_scan, hinf_principal_by_orbit_criterion, least_lc,
    twisted_product, AfUnits, FiniteUnits, GBackend, Rank2Units, UnitBackend,
};
use forge_core::graph::{edge_cycle_automorphism, EdgeLabelling};
use forge_core::Verdict;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::demo::{sweep, Identity};
use crate::json::{
    parse_alpha, CocycleGroupoidJson, ContractingJson, DiagramJson, GroupoidJson, LcEntryJson, Rank2Json,
    UnitSetJson, WfcJson,
};
use crate::pipeline::{
    orders_match_counts, plan_af_realization, plan_rank2_realization, reverify_report, unit_corner_spec,
    PlanOptions, RealizationReport, UnitClass,
};
use crate::samples;

#[derive(Debug, Parser)]
#[command(name = "forge", version, about = "Twisted product groupoids from AF and rank-2 data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CertKind {
    Wfc,
    Lc,
    Contract,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KOp {
    Equal,
    Positive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Rank2Op {
    Build,
    Orders,
    Telescope,
    Automorphism,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RealizeKind {
    Af,
    Rank2,
}

/// Where the `G` side comes from.
#[derive(Debug, clap::Args)]
pub struct GSource {
    /// Finite groupoid file; needs --alpha.
    #[arg(long = "G", value_name = "FILE")]
    pub g: Option<PathBuf>,
    /// identity | perm:… | mult:m | points:…
    #[arg(long)]
    pub alpha: Option<String>,
    /// Bratteli diagram file, with the edge-cycle automorphism.
    #[arg(long, conflicts_with_all = ["g", "rank2"])]
    pub diagram: Option<PathBuf>,
    /// Rank-2 data file, with `α = F^{m_n}`.
    #[arg(long, conflicts_with = "g")]
    pub rank2: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a Bratteli diagram file.
    Validate { file: PathBuf },
    /// Telescope a diagram along a subsequence of levels.
    Telescope {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        subsequence: Vec<usize>,
    },
    /// Check the groupoid axioms of a finite groupoid file.
    CheckGroupoid { file: PathBuf },
    /// Build `H ×_{c,α} G` and compare principality with the orbit criterion.
    Twist {
        /// A file with {groupoid, cocycle}, or `hinf`.
        #[arg(long = "H")]
        h: String,
        #[arg(long = "G")]
        g: PathBuf,
        #[arg(long)]
        alpha: String,
        /// Largest |l| for the orbit criterion and the H_inf scan.
        #[arg(long, default_value_t = 6)]
        lbound: i64,
    },
    /// Produce a wfc, lc or contracting-bisection certificate.
    Certify {
        kind: CertKind,
        #[command(flatten)]
        source: GSource,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[arg(long, default_value_t = 5)]
        lbound: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rank-2 orientation of the red cycles.
        #[arg(long, default_value = "+1", allow_hyphen_values = true)]
        orientation: String,
    },
    /// Check one module identity exhaustively on the small G family.
    ConvolveDemo {
        #[arg(long, value_enum)]
        identity: Identity,
    },
    /// Equality and positivity in the dimension group of a diagram.
    Ktheory {
        file: PathBuf,
        /// `level:v1,v2,…`; give two for --op equal.
        #[arg(long)]
        class: Vec<String>,
        /// Unit corner `level:a1,a2,…`.
        #[arg(long)]
        corner: Option<String>,
        #[arg(long, value_enum)]
        op: KOp,
        /// Levels searched past the highest class level.
        #[arg(long, default_value_t = 32)]
        window: usize,
    },
    /// Rank-2 diagrams: construction, orders, subsequence, automorphism.
    Rank2 {
        op: Rank2Op,
        file: PathBuf,
        /// Edge levels to build; defaults to the file's horizon, or 3.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, default_value_t = 64)]
        reach: usize,
    },
    /// Run the realization planner and write a report.
    Realize {
        kind: RealizeKind,
        file: PathBuf,
        /// `level:a1,a2,…`
        #[arg(long)]
        unit: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 5)]
        lbound: i64,
        #[arg(long, default_value_t = 64)]
        reach: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Truncation N of the stabilization.
        #[arg(long)]
        stabilization: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check every certificate in a report.
    VerifyReport { file: PathBuf },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// A closed pipe downstream (`forge … | head`) is not an error.
fn print<T: Serialize>(x: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(x)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn code(ok: bool) -> i32 {
    if ok {
        0
    } else {
        1
    }
}

/// `level:x1,x2,…`
pub fn parse_class(s: &str) -> Result<(usize, Vec<i64>)> {
    let (level, rest) = s.split_once(':').context("expected level:vector")?;
    let level = level.trim().parse().context("bad level")?;
    let vector = rest
        .split(',')
        .map(|x| x.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .context("bad vector entry")?;
    Ok((level, vector))
}

fn load_finite_g(source: &GSource) -> Result<(FiniteGroupoid, GroupoidAutomorphism)> {
    let path = source.g.as_ref().context("--G is required")?;
    let g = read_json::<GroupoidJson>(path)?.groupoid()?;
    let a = parse_alpha(source.alpha.as_deref().unwrap_or("identity"), &g)?;
    let rep = a.check(&g);
    if !rep.passed() {
        bail!("alpha is not an automorphism: {rep}");
    }
    Ok((g, a))
}

fn load_rank2(path: &Path, levels: Option<usize>, orientation: Option<&str>) -> Result<(Rank2Json, Rank2Diagram)> {
    let mut j: Rank2Json = read_json(path)?;
    if let Some(o) = orientation {
        j.orientation = Some(o.to_string());
    }
    let data = j.data()?;
    let levels = levels.or(j.horizon).unwrap_or(3);
    data.check(levels)?;
    let d = build_rank2(&data, levels, j.orientation()?)?;
    Ok((j, d))
}

fn rank2_auto(d: &Rank2Diagram) -> Result<Rank2Automorphism> {
    let o = compute_orders(d)?;
    Ok(rank2_automorphism(d, &o)?)
}

struct Certified {
    lc: Vec<LcEntryJson>,
    contracting: Vec<ContractingJson>,
}

fn certify_sets<B: UnitBackend>(
    b: &B,
    sets: &[B::Set],
    seed: u64,
    contract: bool,
    json: impl Fn(&B::Set) -> UnitSetJson,
) -> Result<Certified> {
    let mut out = Certified {
        lc: Vec::new(),
        contracting: Vec::new(),
    };
    let mut r = samples::rng(seed);
    for v in sets {
        let l = least_lc(b, v, 1 << 20)?;
        out.lc.push(LcEntryJson { set: json(v), l });
        if contract {
            let w_h = samples::hinf_basic_open(&mut r);
            let w = contracting_bisection_witness(b, &w_h, v, Some(l))?;
            out.contracting.push(ContractingJson::new(&w, &w_h, json(v), &json));
        }
    }
    Ok(out)
}

fn certify(kind: CertKind, source: &GSource, depth: usize, lbound: i64, seed: u64, orientation: &str) -> Result<i32> {
    let contract = matches!(kind, CertKind::Contract);
    let finish = |c: Certified| -> Result<i32> {
        let ok = c.lc.iter().all(|e| e.l >= 1) && c.contracting.iter().all(ContractingJson::verified);
        if contract {
            print(&c.contracting)?;
        } else {
            print(&c.lc)?;
        }
        Ok(code(ok))
    };
    let wfc = |b: &GBackend<'_>| -> Result<i32> {
        let cert = check_wfc(b, depth, lbound)?;
        print(&WfcJson::from_cert(&cert))?;
        Ok(code(cert.verdict() == Verdict::Yes))
    };
    if let Some(path) = &source.diagram {
        let d = read_json::<DiagramJson>(path)?.diagram()?;
        let ec = edge_cycle_automorphism(&d, &EdgeLabelling::default())?;
        if let CertKind::Wfc = kind {
            return wfc(&GBackend::Af(&ec));
        }
        let anchors: Vec<BVertex> = (0..d.level_size(0).unwrap_or(0)).map(|i| BVertex { level: 0, index: i }).collect();
        let sets = cylinders(&d, &anchors)?;
        return finish(certify_sets(&AfUnits(&ec), &sets, seed, contract, UnitSetJson::af)?);
    }
    if let Some(path) = &source.rank2 {
        let (_, d) = load_rank2(path, Some(depth + 1), Some(orientation))?;
        let a = rank2_auto(&d)?;
        if let CertKind::Wfc = kind {
            return wfc(&GBackend::Rank2(&a));
        }
        let anchors: Vec<_> = d.vertices(0).collect();
        let sets = cylinders(&d, &anchors)?;
        return finish(certify_sets(&Rank2Units(&a), &sets, seed, contract, UnitSetJson::rank2)?);
    }
    let (g, a) = load_finite_g(source)?;
    if let CertKind::Wfc = kind {
        return wfc(&GBackend::Finite { groupoid: &g, alpha: &a });
    }
    let units = g.units();
    let mut sets: Vec<BTreeSet<usize>> = units.iter().map(|&u| BTreeSet::from([u])).collect();
    let all: BTreeSet<usize> = units.into_iter().collect();
    if all.len() > 1 {
        sets.push(all);
    }
    let fu = FiniteUnits { groupoid: &g, alpha: &a };
    finish(certify_sets(&fu, &sets, seed, contract, UnitSetJson::finite)?)
}

/// `Z(μ)` for every path of length 1 anchored at `anchors`.
fn cylinders<G: forge_core::graph::PathGraph>(
    g: &G,
    anchors: &[G::Vertex],
) -> Result<Vec<forge_core::germ::UnitCylinder<G::Vertex, G::Edge>>> {
    let mut out = Vec::new();
    for v in anchors {
        for p in forge_core::graph::enumerate_paths(g, v, 1, None)? {
            out.push(forge_core::germ::UnitCylinder::cylinder(p));
        }
    }
    Ok(out)
}

fn twist(h: &str, g_path: &Path, alpha: &str, lbound: i64) -> Result<i32> {
    let g = read_json::<GroupoidJson>(g_path)?.groupoid()?;
    let a = parse_alpha(alpha, &g)?;
    if h == "hinf" {
        let rep = a.check(&g);
        if !rep.passed() {
            bail!("alpha is not an automorphism: {rep}");
        }
        let scan = hinf_isotropy_scan(&g, &a, 4, lbound);
        let criterion = hinf_principal_by_orbit_criterion(&g, &a, lbound);
        print(&json!({
            "h": "hinf",
            "g_elements": g.len(),
            "isotropy_found": scan.as_ref().map(|s| format!("degree {} with g = {}", s.element.degree(), s.element.g)),
            "principal_by_scan": scan.is_none(),
            "principal_by_orbit_criterion": criterion,
        }))?;
        return Ok(code(scan.is_none() == criterion));
    }
    let (hg, c) = read_json::<CocycleGroupoidJson>(Path::new(h))?.build()?;
    let t = twisted_product(&hg, &c, &g, &a)?;
    let axioms = verify_groupoid_axioms(t.groupoid());
    let (p, q) = (t.is_principal(), t.principal_by_orbit_criterion());
    print(&json!({
        "elements": t.groupoid().len(),
        "units": t.groupoid().units().len(),
        "axioms": axioms.passed(),
        "violations": axioms.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "principal": p,
        "principal_by_orbit_criterion": q,
        "isotropy_degrees": t.isotropy_degrees(),
        "groupoid": GroupoidJson::from_groupoid(t.groupoid()),
    }))?;
    Ok(code(axioms.passed() && p == q))
}

fn ktheory(file: &Path, classes: &[String], corner: Option<&str>, op: KOp, window: usize) -> Result<i32> {
    let d = read_json::<DiagramJson>(file)?.diagram()?;
    let spec = DimensionGroupSpec::from_bratteli(&d)?;
    let mut xs = Vec::new();
    for c in classes {
        let (level, v) = parse_class(c)?;
        xs.push(DimGroupElement::new(level, v.into_iter().map(i128::from).collect()));
    }
    let mut corner_spec = None;
    if let Some(c) = corner {
        let (level, a) = parse_class(c)?;
        let cs = unit_corner_spec(&d, level, &a)?;
        xs.insert(0, DimGroupElement::new(level, a.into_iter().map(i128::from).collect()));
        corner_spec = Some(cs);
    }
    let horizon = xs.iter().map(|x| x.level).max().unwrap_or(0) + window;
    let decision = match (op, xs.as_slice()) {
        (KOp::Positive, [x]) => dg_is_positive(&spec, x, horizon)?,
        (KOp::Equal, [x, y]) => dg_equal(&spec, x, y, horizon)?,
        (KOp::Positive, _) => bail!("--op positive takes one class"),
        (KOp::Equal, _) => bail!("--op equal takes two classes"),
    };
    print(&json!({
        "classes": xs.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        "corner": corner_spec,
        "verdict": decision.verdict.to_string(),
        "justification": decision.justification.to_string(),
    }))?;
    Ok(code(decision.verdict == Verdict::Yes))
}

fn rank2(op: Rank2Op, file: &Path, levels: Option<usize>, reach: usize) -> Result<i32> {
    match op {
        Rank2Op::Telescope => {
            let j: Rank2Json = read_json(file)?;
            let data = j.data()?;
            let t = telescope_rank2(&data, levels.unwrap_or(6), reach)?;
            print(&json!({
                "l_prime": t.l_prime,
                "l": t.l,
                "big_m": t.big_m,
                "entry_bounds": t.entry_bounds.iter().map(|b| json!({
                    "n": b.n, "from": b.from, "to": b.to,
                    "min_entry": b.min_entry as i64, "bound": b.bound as u64, "holds": b.holds(),
                })).collect::<Vec<_>>(),
                "reverified": t.reverify(&data),
                "telescoped": Rank2Json::from_data(&t.data, None, j.orientation()?),
            }))?;
            Ok(code(t.reverify(&data)))
        }
        Rank2Op::Build => {
            let (j, d) = load_rank2(file, levels, None)?;
            let rep = d.validate();
            let counts = forge_core::dimension::rank2_k_matrices(&d)?;
            let data = j.data()?;
            let same = (0..d.horizon()).all(|n| &counts.a[n] == data.a(n) && &counts.b[n] == data.b(n));
            print(&json!({
                "levels": d.horizon(),
                "cycle_lengths": (0..=d.horizon()).map(|n| d.cycle_lengths(n).to_vec()).collect::<Vec<_>>(),
                "blue_edges": (0..d.horizon()).map(|n| d.edge_count(n)).collect::<Vec<_>>(),
                "valid": rep.passed(),
                "violations": rep.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                "counts_match_input": same,
            }))?;
            Ok(code(rep.passed() && same))
        }
        Rank2Op::Orders => {
            let (j, d) = load_rank2(file, levels, None)?;
            let o = compute_orders(&d)?;
            let matches = orders_match_counts(&d, &j.data()?, &o);
            print(&json!({
                "o": o.o.iter().map(|l| l.iter().map(|&x| x as u64).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "big_o": o.big_o.iter().map(|&x| x as u64).collect::<Vec<_>>(),
                "m": o.m.iter().map(|&x| x as u64).collect::<Vec<_>>(),
                "growth": o.growth_table().iter().map(|r| json!({
                    "n": r.0, "min_order": r.1 as u64, "n_times_m": r.2 as u64, "holds": r.3,
                })).collect::<Vec<_>>(),
                "orders_equal_a_times_t": matches,
            }))?;
            Ok(code(matches))
        }
        Rank2Op::Automorphism => {
            let (_, d) = load_rank2(file, levels, None)?;
            let a = rank2_auto(&d)?;
            let rep = a.check_well_defined();
            print(&json!({
                "m": a.orders().m.iter().map(|&x| x as u64).collect::<Vec<_>>(),
                "edge_periods": (0..d.horizon()).map(|n| d.blue_edges(n).map(|e| a.edge_period(&e) as u64).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "well_defined": rep.passed(),
                "violations": rep.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            }))?;
            Ok(code(rep.passed()))
        }
    }
}

fn realize(
    kind: RealizeKind,
    file: &Path,
    unit: Option<&str>,
    opts: PlanOptions,
    out: Option<&Path>,
) -> Result<i32> {
    let unit = unit
        .map(parse_class)
        .transpose()?
        .map(|(level, vector)| UnitClass { level, vector });
    let report = match kind {
        RealizeKind::Af => plan_af_realization(&read_json(file)?, unit, &opts)?,
        RealizeKind::Rank2 => plan_rank2_realization(&read_json(file)?, unit, &opts)?,
    };
    match out {
        Some(p) => {
            let text = serde_json::to_string_pretty(&report)?;
            std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
            eprintln!("report written to {} (success: {})", p.display(), report.success);
        }
        None => print(&report)?,
    }
    Ok(code(report.success))
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Validate { file } => {
            let j: DiagramJson = read_json(&file)?;
            let raw = j.to_raw();
            let (ok, detail) = match validate_bratteli(&raw) {
                Ok(rep) => (rep.passed(), rep.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>()),
                Err(e) => (false, vec![e.to_string()]),
            };
            print(&json!({ "valid": ok, "violations": detail }))?;
            Ok(code(ok))
        }
        Command::Telescope { file, subsequence } => {
            let d = read_json::<DiagramJson>(&file)?.diagram()?;
            let t = telescope(&d, &subsequence)?;
            print(&DiagramJson::from_diagram(&t))?;
            Ok(0)
        }
        Command::CheckGroupoid { file } => {
            let g = read_json::<GroupoidJson>(&file)?.groupoid()?;
            let rep = verify_groupoid_axioms(&g);
            print(&json!({
                "elements": g.len(),
                "units": g.units(),
                "axioms": rep.passed(),
                "violations": rep.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                "principal": g.is_principal(),
                "minimal": g.is_minimal(),
            }))?;
            Ok(code(rep.passed()))
        }
        Command::Twist { h, g, alpha, lbound } => twist(&h, &g, &alpha, lbound),
        Command::Certify {
            kind,
            source,
            depth,
            lbound,
            seed,
            orientation,
        } => certify(kind, &source, depth, lbound, seed, &orientation),
        Command::ConvolveDemo { identity } => {
            let t = sweep(identity)?;
            let ok = t.iter().all(|x| x.failures.is_empty());
            print(&t)?;
            Ok(code(ok))
        }
        Command::Ktheory {
            file,
            class,
            corner,
            op,
            window,
        } => ktheory(&file, &class, corner.as_deref(), op, window),
        Command::Rank2 {
            op,
            file,
            levels,
            reach,
        } => rank2(op, &file, levels, reach),
        Command::Realize {
            kind,
            file,
            unit,
            depth,
            lbound,
            reach,
            seed,
            stabilization,
            out,
        } => {
            let opts = PlanOptions {
                depth,
                lbound,
                reach,
                seed,
                stabilization,
                ..PlanOptions::default()
            };
            realize(kind, &file, unit.as_deref(), opts, out.as_deref())
        }
        Command::VerifyReport { file } => {
            let r: RealizationReport = read_json(&file)?;
            let checks = reverify_report(&r)?;
            let ok = checks.iter().all(|c| c.ok);
            print(&json!({ "checks": checks, "all_hold": ok, "report_success": r.success }))?;
            Ok(code(ok))
        }
    }
}
