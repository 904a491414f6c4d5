//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Each check recomputes its expected values with a direct
//! oracle rather than reading them back from the code under test.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use forge::demo::{sweep, Identity};
use forge::json::Rank2Json;
use forge::pipeline::{plan_rank2_realization, reverify_report, PlanOptions, TelescopingTrace};
use forge::samples;
use forge_core::convolution::{convolve, involution, regular_representation, ConvBackend, ConvElement};
use forge_core::dimension::{
    dg_equal, dg_is_positive, k0_vertex_class, rank2_k_matrices, untelescope_class, DimGroupElement,
    DimensionGroupSpec,
};
use forge_core::germ::{bisection_product, find_cylinder_inside, hinf, hinf_word, BasicBisection, HinfOpen, UnitCylinder};
use forge_core::graph::{telescope_for_growth, BVertex, BratteliDiagram, Eid};
use forge_core::groupoid::{verify_groupoid_axioms, FiniteGroupoid, GroupoidAutomorphism};
use forge_core::rank2::{build_rank2, compute_orders, RBlue, Rank2Data, Rank2Diagram};
use forge_core::scalar::{Coeff, CoeffMatrix, IntMatrix};
use forge_core::twisted::{
    contracting_bisection_witness, hinf_isotropy_scan, least_lc, trivial_contracting_witness, twisted_product,
    FiniteUnits,
};
use forge_core::Verdict;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn m1(x: i128) -> IntMatrix {
    IntMatrix::from_rows(&[vec![x]]).expect("1x1")
}

// ---- 1 ----

fn twisted_axioms() -> Outcome {
    let start = Instant::now();
    let mut largest = 0;
    for (k, (hs, gs)) in samples::twisted_family(2024, 100, 24).iter().enumerate() {
        ensure(hs.size() <= 24 && gs.size() <= 24, || format!("pair {k} too large"))?;
        let (h, c) = hs.build();
        let (g, a) = gs.build().map_err(|e| format!("pair {k}: {e}"))?;
        let t = twisted_product(&h, &c, &g, &a).map_err(|e| format!("pair {k}: {e}"))?;
        let rep = verify_groupoid_axioms(t.groupoid());
        ensure(rep.passed(), || format!("pair {k}: {rep}"))?;
        largest = largest.max(t.groupoid().len());
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    Ok(format!("100 pairs, largest product {largest} elements, {took:.2?}"))
}

// ---- 2 ----

fn module_identities() -> Outcome {
    let mut total = 0;
    for id in [Identity::Comp, Identity::Comp2, Identity::RightAction] {
        for t in sweep(id).map_err(|e| e.to_string())? {
            ensure(t.failures.is_empty(), || format!("{id:?} on {}: {:?}", t.groupoid, t.failures))?;
            ensure(t.checked > 0, || format!("{id:?} on {}: nothing checked", t.groupoid))?;
            total += t.checked;
        }
    }
    Ok(format!("{total} exact identities, 9 groupoids"))
}

// ---- 3 ----

fn matmul(a: &CoeffMatrix, b: &CoeffMatrix) -> CoeffMatrix {
    let mut out = CoeffMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            for k in 0..a.cols() {
                out.add_at(i, j, a.get(i, k) * b.get(k, j));
            }
        }
    }
    out
}

fn dagger(a: &CoeffMatrix) -> CoeffMatrix {
    let mut out = CoeffMatrix::zeros(a.cols(), a.rows());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let x = a.get(i, j);
            out.set(j, i, Coeff { re: x.re, im: -x.im });
        }
    }
    out
}

fn regular_representation_check() -> Outcome {
    let mut r = samples::rng(33);
    let mut units = 0;
    for k in 0..100 {
        let g = samples::small_twisted_groupoid(&mut r, 12);
        let n = g.len();
        let (xi, eta) = (samples::element(&mut r, n), samples::element(&mut r, n));
        let b = ConvBackend::Finite(&g);
        let (x, y) = (ConvElement::finite(xi), ConvElement::finite(eta));
        let xy = convolve(&b, &x, &y).map_err(|e| e.to_string())?;
        let xs = involution(&b, &x).map_err(|e| e.to_string())?;
        for u in g.units() {
            let rep = |z: &ConvElement| regular_representation(&b, u, z).map(|m| m.matrix).map_err(|e| e.to_string());
            let (rx, ry) = (rep(&x)?, rep(&y)?);
            ensure(rep(&xy)? == matmul(&rx, &ry), || format!("pair {k}, unit {u}: R(xi*eta)"))?;
            ensure(rep(&xs)? == dagger(&rx), || format!("pair {k}, unit {u}: R(xi^*)"))?;
            units += 1;
        }
    }
    Ok(format!("100 pairs, {units} unit representations"))
}

// ---- 4 ----

fn two_level_anchors() -> Outcome {
    let d = build_rank2(&Rank2Data::two_level_example(), 2, 1).map_err(|e| e.to_string())?;
    let o = compute_orders(&d).map_err(|e| e.to_string())?;
    ensure(o.o[0].iter().all(|&x| x == 3), || format!("o on level 0: {:?}", o.o[0]))?;
    ensure(o.o[1].iter().all(|&x| x == 12), || format!("o on level 1: {:?}", o.o[1]))?;
    ensure(o.big_o == [3, 12], || format!("O = {:?}", o.big_o))?;
    ensure(o.m.get(1) == Some(&0) && o.m.get(2) == Some(&12), || format!("m = {:?}", o.m))?;
    // The orders again, as orbit lengths of the factorisation permutation.
    for (n, want) in [(0, 3), (1, 12)] {
        ensure(orbit_lengths(&d, n).iter().all(|&x| x == want), || format!("orbits of F on level {n}"))?;
    }
    let k = rank2_k_matrices(&d).map_err(|e| e.to_string())?;
    ensure(k.a == [m1(3), m1(4)], || format!("A = {:?}", k.a))?;
    ensure(k.b == [m1(1), m1(2)], || format!("B = {:?}", k.b))?;
    ensure(k.t == [m1(1), m1(3), m1(6)], || format!("T = {:?}", k.t))?;
    for n in 0..2 {
        let lhs = k.a[n].checked_mul(&k.t[n]).map_err(|e| e.to_string())?;
        let rhs = k.t[n + 1].checked_mul(&k.b[n]).map_err(|e| e.to_string())?;
        ensure(lhs == rhs, || format!("A_{n} T_{n} != T_{} B_{n}", n + 1))?;
    }
    Ok("o(e) = O_0 = 3, o(f) = O_1 = 12, m_2 = 12, A T = T B".into())
}

/// Orbit length of every blue edge on `level` under `F`, by walking cycles.
fn orbit_lengths(d: &Rank2Diagram, level: usize) -> Vec<u128> {
    let edges: Vec<RBlue> = d.blue_edges(level).collect();
    let mut out = vec![0u128; edges.len()];
    for start in 0..edges.len() {
        if out[start] != 0 {
            continue;
        }
        let mut cycle = vec![start];
        let mut x = d.factor(&edges[start]);
        while x != edges[start] {
            cycle.push(x.index);
            x = d.factor(&x);
        }
        for &k in &cycle {
            out[k] = cycle.len() as u128;
        }
    }
    out
}

// ---- 5 ----

fn rank2_growth() -> Outcome {
    let input = Rank2Json {
        t: serde_json::from_str("[[1]]").expect("matrix"),
        a: serde_json::from_str("[[2]]").expect("matrix"),
        b: serde_json::from_str("[[2]]").expect("matrix"),
        horizon: None,
        orientation: None,
    };
    let report = plan_rank2_realization(&input, None, &PlanOptions::default()).map_err(|e| e.to_string())?;
    // Through JSON and back, so everything below reads the written report.
    let text = serde_json::to_string(&report).map_err(|e| e.to_string())?;
    let report: forge::pipeline::RealizationReport = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let TelescopingTrace::Rank2 {
        l,
        big_m,
        entry_bounds,
        telescoped,
        ..
    } = &report.telescoping
    else {
        return Err("telescoping did not succeed".into());
    };
    let orders = report.orders.as_ref().ok_or("no orders in report")?;
    let data = telescoped.data().map_err(|e| e.to_string())?;
    let levels = orders.o.len();
    ensure(levels >= 6, || format!("only {levels} levels"))?;
    let d = build_rank2(&data, levels, 1).map_err(|e| e.to_string())?;
    let mut m = vec![0u128; levels + 1];
    for n in 0..levels {
        let orbits = orbit_lengths(&d, n);
        for (k, e) in d.blue_edges(n).enumerate() {
            let edge = d.edge(&e);
            let (i, j) = (edge.source.cycle, edge.range.cycle);
            let formula = (data.a(n).get(i, j) * data.t(n).get(j, j)) as u128;
            let orbit = orbits[k];
            ensure(orders.o[n][k] == formula && orbit == formula, || {
                format!("level {n} edge {k}: report {} formula {formula} orbit {orbit}", orders.o[n][k])
            })?;
        }
        let big_o = orders.o[n].iter().fold(1u128, |acc, &x| lcm(acc, x));
        m[n + 1] = m[n] + n as u128 * big_o;
    }
    ensure(orders.m == m, || format!("m in report {:?}, recomputed {m:?}", orders.m))?;
    for n in 0..=5 {
        let least = *orders.o[n].iter().min().ok_or("empty level")?;
        ensure(least > n as u128 * m[n], || format!("level {n}: {least} <= {n}*{}", m[n]))?;
    }
    // M_{n+1} = M_n + n·O′_n with O′ the orders of the telescoped levels.
    for n in 0..big_m.len().saturating_sub(1) {
        let big_o = orders.o[n].iter().fold(1u128, |acc, &x| lcm(acc, x));
        ensure(big_m[n + 1] == big_m[n] + n as u128 * big_o, || format!("M_{} in report", n + 1))?;
    }
    // Entry bounds from the input matrices: A_{to,from} = 2^(to - from).
    for b in entry_bounds {
        let entry = 1i128 << (l[b.n + 1] - l[b.n]);
        let bound = b.n as u128 * big_m[b.n];
        ensure(b.from == l[b.n] && b.to == l[b.n + 1], || format!("entry bound {} levels", b.n))?;
        ensure(entry == b.min_entry && entry as u128 > bound && b.bound == bound, || {
            format!("entry bound {}: {entry} vs {bound}", b.n)
        })?;
    }
    ensure(entry_bounds.len() >= 4, || "too few entry bounds".into())?;
    let checks = reverify_report(&report).map_err(|e| e.to_string())?;
    ensure(checks.iter().all(|c| c.ok), || format!("{checks:?}"))?;
    ensure(report.success, || "report not successful".into())?;
    Ok(format!("l = {l:?}, M = {big_m:?}, {} entry bounds", entry_bounds.len()))
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u128, b: u128) -> u128 {
    a / gcd(a, b) * b
}

// ---- 6 ----

fn af_telescoping() -> Outcome {
    let d = BratteliDiagram::constant(m1(2)).map_err(|e| e.to_string())?;
    let spec = DimensionGroupSpec::constant(m1(2)).map_err(|e| e.to_string())?;
    let t = telescope_for_growth(&d, 6, 64).map_err(|e| e.to_string())?;
    let sub = &t.subsequence;
    for n in 0..=5 {
        let k = t.diagram.multiplicity(n, 0, 0).ok_or("missing level")?;
        ensure(k == 1i128 << (sub[n + 1] - sub[n]), || format!("k_{n} = {k}"))?;
        ensure(k > n as i128, || format!("k_{n} = {k} <= {n}"))?;
    }
    for (j, &level) in sub.iter().enumerate() {
        let after = k0_vertex_class(&t.diagram, &BVertex { level: j, index: 0 }).map_err(|e| e.to_string())?;
        let after = untelescope_class(sub, &after).map_err(|e| e.to_string())?;
        let before = k0_vertex_class(&d, &BVertex { level, index: 0 }).map_err(|e| e.to_string())?;
        let dec = dg_equal(&spec, &after, &before, level + 8).map_err(|e| e.to_string())?;
        ensure(dec.verdict == Verdict::Yes, || format!("level {j}: {}", dec.justification))?;
    }
    Ok(format!("subsequence {sub:?}"))
}

// ---- 7 ----

fn units_subset(r: &mut impl Rng, g: &FiniteGroupoid) -> BTreeSet<usize> {
    let units = g.units();
    loop {
        let s: BTreeSet<usize> = units.iter().copied().filter(|_| r.gen_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

fn single_diagonal(p: &forge_core::germ::BisectionSum<forge_core::graph::Vid, Eid>, c: &UnitCylinder<forge_core::graph::Vid, Eid>) -> bool {
    p.pieces().len() == 1 && p.pieces()[0] == BasicBisection::diagonal(c)
}

fn contracting() -> Outcome {
    let mut r = samples::rng(77);
    let h = hinf();
    for k in 0..50 {
        let (g, a) = samples::g_spec(&mut r, 12).build().map_err(|e| e.to_string())?;
        let v_g = units_subset(&mut r, &g);
        let w_h = samples::hinf_basic_open(&mut r);
        let fu = FiniteUnits { groupoid: &g, alpha: &a };
        let l = least_lc(&fu, &v_g, 1 << 20).map_err(|e| e.to_string())?;
        let w = contracting_bisection_witness(&fu, &w_h, &v_g, Some(l)).map_err(|e| format!("{k}: {e}"))?;
        let u = &w.bisection;
        let (rh, sh) = (u.range_set(), u.source_set());
        let sub = |a: &UnitCylinder<_, _>, b: &UnitCylinder<_, _>| a.is_subset(&h, b).map_err(|e| e.to_string());
        ensure(sub(&rh, &sh)? && !sub(&sh, &rh)?, || format!("{k}: r(B) not strictly inside s(B)"))?;
        ensure(sub(&sh, &w_h)?, || format!("{k}: s(B) not inside W"))?;
        let moved: BTreeSet<usize> = w.g_range.iter().map(|&y| a.apply_pow(y, u.degree())).collect();
        ensure(moved == w.g_source, || format!("{k}: G-part of s(B)"))?;
        ensure(w.g_source == v_g && w.g_range.is_subset(&v_g) && !w.g_range.is_empty(), || {
            format!("{k}: G-parts {:?} {:?} vs {v_g:?}", w.g_range, w.g_source)
        })?;
        ensure(single_diagonal(&bisection_product(u, &u.inverse()), &rh), || format!("{k}: B B^-1"))?;
        ensure(single_diagonal(&bisection_product(&u.inverse(), u), &sh), || format!("{k}: B^-1 B"))?;
        // α^l maps V_G into itself.
        ensure(v_g.iter().all(|&y| v_g.contains(&a.apply_pow(y, l as i64))), || format!("{k}: lc value {l}"))?;
    }
    for k in 0..10 {
        let w_h = samples::hinf_basic_open(&mut r);
        let w = trivial_contracting_witness(&w_h).map_err(|e| e.to_string())?;
        let lambda = find_cylinder_inside(&HinfOpen::Cylinder(w_h.clone())).map_err(|e| e.to_string())?;
        let want = BasicBisection::plain(lambda.push(&h, Eid(1)).map_err(|e| e.to_string())?, lambda)
            .map_err(|e| e.to_string())?;
        ensure(w.bisection == want, || format!("trivial {k}: not Z(lambda e_1, lambda)"))?;
        let (rh, sh) = (want.range_set(), want.source_set());
        let ok = rh.is_subset(&h, &sh).map_err(|e| e.to_string())?
            && !sh.is_subset(&h, &rh).map_err(|e| e.to_string())?
            && sh.is_subset(&h, &w_h).map_err(|e| e.to_string())?;
        ensure(ok, || format!("trivial {k}: inclusions"))?;
    }
    Ok("50 witnesses and 10 trivial-G witnesses re-verified".into())
}

// ---- 8 ----

fn same_orbit(g: &FiniteGroupoid, x: usize, y: usize) -> bool {
    (0..g.len()).any(|k| g.r(k) == x && g.s(k) == y)
}

fn principal(g: &FiniteGroupoid) -> bool {
    (0..g.len()).all(|k| g.r(k) != g.s(k) || g.is_unit(k))
}

fn collision(g: &FiniteGroupoid, a: &GroupoidAutomorphism, degrees: &BTreeSet<i64>) -> bool {
    degrees
        .iter()
        .any(|&l| g.units().into_iter().any(|y| same_orbit(g, y, a.apply_pow(y, l))))
}

fn principality_oracle() -> Outcome {
    let mut seen = BTreeMap::new();
    for (k, (hs, gs)) in samples::twisted_family(8, 100, 24).iter().enumerate() {
        let (h, c) = hs.build();
        let (g, a) = gs.build().map_err(|e| e.to_string())?;
        let t = twisted_product(&h, &c, &g, &a).map_err(|e| e.to_string())?;
        let degrees: BTreeSet<i64> = (0..h.len())
            .filter(|&x| h.r(x) == h.s(x))
            .map(|x| c.values[x])
            .filter(|&v| v != 0)
            .collect();
        let oracle = principal(&h) && principal(&g) && !collision(&g, &a, &degrees);
        let scan = t.is_principal();
        ensure(scan == oracle, || format!("finite pair {k}: scan {scan}, oracle {oracle}"))?;
        *seen.entry(("finite", scan)).or_insert(0) += 1;
    }
    // With H = H_∞ every nonzero degree occurs on isotropy.
    let lbound = 6;
    let mut r = samples::rng(9);
    let mut gs: Vec<(FiniteGroupoid, GroupoidAutomorphism)> =
        samples::small_g_family().into_iter().map(|(_, g, a)| (g, a)).collect();
    for _ in 0..60 {
        gs.push(samples::g_spec(&mut r, 12).build().map_err(|e| e.to_string())?);
    }
    // Point sets moved by long cycles, so the bounded scan can come back empty.
    let shift = |cycles: &[usize]| {
        let mut perm = Vec::new();
        for &len in cycles {
            let base = perm.len();
            perm.extend((0..len).map(|i| base + (i + 1) % len));
        }
        let g = FiniteGroupoid::group_bundle(perm.len(), 1);
        GroupoidAutomorphism::new(perm).map(|a| (g, a)).map_err(|e| e.to_string())
    };
    for cycles in [&[7][..], &[8], &[9], &[7, 8], &[3, 4], &[2, 9]] {
        gs.push(shift(cycles)?);
    }
    let all: BTreeSet<i64> = (1..=lbound).flat_map(|l| [l, -l]).collect();
    for (k, (g, a)) in gs.iter().enumerate() {
        let oracle = principal(g) && !collision(g, a, &all);
        let scan = hinf_isotropy_scan(g, a, 4, lbound).is_none();
        ensure(scan == oracle, || format!("H_inf case {k}: scan {scan}, oracle {oracle}"))?;
        *seen.entry(("hinf", scan)).or_insert(0) += 1;
    }
    ensure(seen.len() == 4, || format!("a side was never exercised: {seen:?}"))?;
    Ok(format!("zero discrepancies, (family, principal) counts {seen:?}"))
}

// ---- 9 ----

fn cylinder_finder() -> Outcome {
    let mut r = samples::rng(99);
    let h = hinf();
    let mut with_f = 0;
    for k in 0..100 {
        let w = samples::hinf_basic_open(&mut r);
        let lambda = find_cylinder_inside(&HinfOpen::Cylinder(w.clone())).map_err(|e| e.to_string())?;
        let inside = UnitCylinder::cylinder(lambda.clone())
            .is_subset(&h, &w)
            .map_err(|e| e.to_string())?;
        ensure(inside, || format!("{k}: Z(lambda) not inside W"))?;
        let mut word: Vec<usize> = w.path.edges().iter().map(|e| e.0).collect();
        if let Some(max) = w.excluded.iter().map(|e| e.0).max() {
            word.push(max + 1);
            with_f += 1;
        }
        ensure(lambda == hinf_word(&word), || format!("{k}: lambda differs from u.e_(max F + 1)"))?;
    }
    ensure(with_f > 0, || "no instance had F nonempty".into())?;
    Ok(format!("100 basic opens, {with_f} with F nonempty"))
}

// ---- 10 ----

fn dyadic() -> Outcome {
    let spec = DimensionGroupSpec::constant(m1(2)).map_err(|e| e.to_string())?;
    let el = |level: usize, a: i128| DimGroupElement::new(level, vec![a]);
    let yes = |v: Verdict| v == Verdict::Yes;
    let pos = |x: &DimGroupElement| dg_is_positive(&spec, x, x.level + 8).map(|d| d.verdict).map_err(|e| e.to_string());
    let eq = |x: &DimGroupElement, y: &DimGroupElement| {
        dg_equal(&spec, x, y, x.level.max(y.level) + 8)
            .map(|d| d.verdict)
            .map_err(|e| e.to_string())
    };
    ensure(yes(pos(&el(0, 1))?), || "(0,[1]) not positive".into())?;
    ensure(pos(&el(0, -1))? == Verdict::No, || "(0,[-1]) positive".into())?;
    ensure(eq(&el(0, 1), &el(0, 3))? == Verdict::No, || "(0,[1]) = (0,[3])".into())?;
    ensure(yes(eq(&el(0, 1), &el(1, 2))?), || "(0,[1]) != (1,[2])".into())?;
    // a/2^n against b/2^m by cross-multiplying.
    let mut r = samples::rng(10);
    let mut tally = [0usize; 2];
    for k in 0..50 {
        let (n, m) = (r.gen_range(0..6), r.gen_range(0..6));
        let a: i128 = r.gen_range(-12..=12);
        // About half the pairs are a/2^n written at a deeper level.
        let (m, b) = if r.gen_bool(0.5) {
            let d = r.gen_range(0..4);
            (n + d, a << d)
        } else {
            (m, r.gen_range(-12..=12))
        };
        let (x, y) = (el(n, a), el(m, b));
        let equal = a * (1i128 << m) == b * (1i128 << n);
        let got = eq(&x, &y)?;
        ensure(got == if equal { Verdict::Yes } else { Verdict::No }, || {
            format!("query {k}: ({n},[{a}]) = ({m},[{b}]) gave {got}")
        })?;
        let got = pos(&x)?;
        ensure(got == if a >= 0 { Verdict::Yes } else { Verdict::No }, || {
            format!("query {k}: ({n},[{a}]) positive gave {got}")
        })?;
        tally[usize::from(equal)] += 1;
    }
    ensure(tally[1] > 0, || "no equal pair sampled".into())?;
    Ok(format!("4 anchors, 50 queries ({} equal pairs)", tally[1]))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("twisted-product axioms", twisted_axioms),
        ("module identities", module_identities),
        ("regular representation", regular_representation_check),
        ("two-level rank-2 anchors", two_level_anchors),
        ("rank-2 order growth", rank2_growth),
        ("AF telescoping and K_0 classes", af_telescoping),
        ("contracting bisections", contracting),
        ("principality oracle", principality_oracle),
        ("cylinder finder", cylinder_finder),
        ("dyadic dimension group", dyadic),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{took:.2?}]", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{took:.2?}]", k + 1);
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 10 criteria fail");
        ExitCode::FAILURE
    }
}
