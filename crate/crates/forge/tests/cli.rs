use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .display()
        .to_string()
}

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forge")).args(args).output().expect("runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad stdout ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn validate_and_bad_input() {
    let out = forge(&["validate", &data("constant_two.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["valid"], true);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"levels":[{"size":1},{"size":2}],"edges":[{"level":0,"range":0,"source":0,"mult":1}]}"#,
    )
    .unwrap();
    let out = forge(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["valid"], false);

    let out = forge(&["validate", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn telescope_composes_matrices() {
    let out = forge(&["telescope", &data("golden_mean.json"), "--subsequence", "0,2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    // K^2 for K = [[1,1],[1,0]] is [[2,1],[1,1]].
    let mults: Vec<(u64, u64, i64)> = v["edges"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["level"] == 0)
        .map(|e| {
            (
                e["range"].as_u64().unwrap(),
                e["source"].as_u64().unwrap(),
                e["mult"].as_i64().unwrap(),
            )
        })
        .collect();
    assert_eq!(mults, vec![(0, 0, 2), (0, 1, 1), (1, 0, 1), (1, 1, 1)]);
}

#[test]
fn groupoid_and_twist() {
    let out = forge(&["check-groupoid", &data("z3.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["principal"], false);

    let out = forge(&[
        "twist",
        "--H",
        &data("h_r2_cocycle.json"),
        "--G",
        &data("r2.json"),
        "--alpha",
        "points:1,0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["axioms"], true);
    assert_eq!(v["elements"], 16);
    assert_eq!(v["principal"], v["principal_by_orbit_criterion"]);

    let out = forge(&["twist", "--H", "hinf", "--G", &data("r2.json"), "--alpha", "points:1,0"]);
    assert_eq!(out.status.code(), Some(0));
    // The swap has order 2, so degree-2 isotropy of H_inf survives.
    let v = json(&out);
    assert_eq!(v["principal_by_scan"], false);
    assert_eq!(v["principal_by_orbit_criterion"], false);

    let out = forge(&["twist", "--H", "hinf", "--G", &data("z3.json"), "--alpha", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certificates() {
    let dir = tempfile::tempdir().unwrap();
    let tele = dir.path().join("tele.json");
    let out = forge(&["telescope", &data("constant_two.json"), "--subsequence", "0,1,3,6,10,15,21"]);
    std::fs::write(&tele, &out.stdout).unwrap();
    let out = forge(&["certify", "wfc", "--diagram", tele.to_str().unwrap()]);
    assert_eq!(json(&out)["verdict"], "yes");
    assert_eq!(out.status.code(), Some(0));

    // A finite-order α fixes everything at some power.
    let out = forge(&["certify", "wfc", "--G", &data("r2.json"), "--alpha", "points:1,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["verdict"], "no");

    let out = forge(&["certify", "lc", "--G", &data("r2.json"), "--alpha", "points:1,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let ls: Vec<u64> = v.as_array().unwrap().iter().map(|e| e["l"].as_u64().unwrap()).collect();
    // The swap moves each unit and fixes the pair.
    assert_eq!(ls, vec![2, 2, 1]);

    let out = forge(&["certify", "contract", "--diagram", &data("golden_mean.json"), "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(!v.as_array().unwrap().is_empty());
    for w in v.as_array().unwrap() {
        assert!(w["checks"].as_array().unwrap().iter().all(|c| c["ok"] == true));
    }
}

#[test]
fn convolve_demo_runs_each_identity() {
    for id in ["comp", "comp2", "right-action"] {
        let out = forge(&["convolve-demo", "--identity", id]);
        assert_eq!(out.status.code(), Some(0), "{id}");
        let v = json(&out);
        assert_eq!(v.as_array().unwrap().len(), 9);
    }
}

#[test]
fn ktheory_queries() {
    let gm = data("golden_mean.json");
    // (1,1) at level 0 and (2,1) at level 1 agree after one push.
    let out = forge(&["ktheory", &gm, "--class", "0:1,1", "--class", "1:2,1", "--op", "equal"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "yes");

    // (1,-1) pushes to (0,1).
    let out = forge(&["ktheory", &gm, "--class", "0:1,-1", "--op", "positive"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "yes");

    let out = forge(&["ktheory", &gm, "--class", "0:0,-1", "--op", "positive"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["verdict"], "no");

    let out = forge(&["ktheory", &data("constant_two.json"), "--corner", "0:3", "--op", "positive"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["corner"]["pieces"].as_array().unwrap().len(), 3);

    let out = forge(&["ktheory", &gm, "--corner", "0:-1,2", "--op", "positive"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rank2_subcommands() {
    let small = data("rank2_two_level.json");
    let out = forge(&["rank2", "orders", &small]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["big_o"], serde_json::json!([3, 12]));
    assert_eq!(v["m"], serde_json::json!([0, 0, 12]));

    let out = forge(&["rank2", "build", &small]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["cycle_lengths"], serde_json::json!([[1], [3], [6]]));

    let two = data("rank2_constant_two.json");
    let out = forge(&["rank2", "telescope", &two, "--levels", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["l"], serde_json::json!([0, 1, 2, 5, 11, 21, 36]));
    assert_eq!(v["big_m"], serde_json::json!([0, 0, 2, 18, 210, 4306]));

    let out = forge(&["rank2", "automorphism", &two]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["well_defined"], true);
}

#[test]
fn realize_writes_a_checkable_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = forge(&[
        "realize",
        "af",
        &data("constant_two.json"),
        "--unit",
        "0:2",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["success"], true);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["analytic_hypotheses"].as_array().unwrap().len(), 5);

    let out = forge(&["verify-report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["all_hold"], true);

    // Bump a recorded lc value and the re-check must notice.
    let mut tampered = v.clone();
    let l = &mut tampered["lc"][0]["l"];
    *l = serde_json::json!(l.as_u64().unwrap() + 1);
    std::fs::write(&report, serde_json::to_string(&tampered).unwrap()).unwrap();
    let out = forge(&["verify-report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn realize_two_level_data_reports_failure() {
    let out = forge(&["realize", "rank2", &data("rank2_two_level.json")]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["success"], false);
    assert_eq!(v["input_orders"]["big_o"], serde_json::json!([3, 12]));
    assert!(v["telescoping"].get("exhausted").is_some());
}

#[test]
fn realize_rejects_a_zero_corner() {
    let out = forge(&["realize", "af", &data("constant_two.json"), "--unit", "0:0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonzero"));
}
