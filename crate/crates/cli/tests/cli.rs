use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn mdpst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdpst")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = mdpst(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

#[test]
fn appendix_b_region_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let wr = p(&dir, "wr.json");
    ok(&["wr", "--product", &fixture("appendix_b.json"), "-o", wr.to_str().unwrap()]);
    let names: Vec<String> = json(&wr)["states"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert_eq!(names, ["S2", "S3", "S4"]);
    let reach = ok(&["oracle", "--product", &fixture("appendix_b.json"), "--objective", "reach", "--targets", "1,2,3"]);
    assert_eq!(reach.trim(), "value 0.800000");
    let buchi = ok(&["oracle", "--product", &fixture("appendix_b.json"), "--objective", "buchi"]);
    assert_eq!(buchi.trim(), "value 0.800000");
}

#[test]
fn hexworld_synth_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let (model, layout, strat, report, sim, traj) = (
        p(&dir, "m.json"),
        p(&dir, "l.json"),
        p(&dir, "s.json"),
        p(&dir, "r.json"),
        p(&dir, "sim.json"),
        p(&dir, "t.csv"),
    );
    let s = |x: &PathBuf| x.to_str().unwrap().to_string();
    ok(&["hexworld", "--nx", "10", "--ny", "5", "--layout-out", &s(&layout), "-o", &s(&model)]);
    assert!(ok(&["validate", &s(&model)]).starts_with("ok: 200 states"));
    let aut = fixture("persist_avoid_ldba.json");
    ok(&["synth", "--model", &s(&model), "--automaton", &aut, "-o", &s(&strat), "--report", &s(&report)]);
    let r = json(&report);
    assert_eq!(r["product_states"], 800);
    let value = r["value"].as_f64().unwrap();
    assert!((value - 0.15 / 0.85).abs() < 1e-3);
    ok(&[
        "simulate", "--model", &s(&model), "--automaton", &aut, "--strategy", &s(&strat), "--runs", "300", "--steps",
        "1000", "--windows", "4,200", "-o", &s(&sim), "--trajectory", &s(&traj),
    ]);
    let frac = json(&sim)["fraction"].as_f64().unwrap();
    assert!(frac >= value - 0.08, "{frac}");
    let csv = std::fs::read_to_string(&traj).unwrap();
    assert!(csv.lines().count() > 1);

    // same layout file gives the same model
    let again = p(&dir, "m2.json");
    ok(&["hexworld", "--nx", "10", "--ny", "5", "--layout", &s(&layout), "-o", &s(&again)]);
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn fixture_matches_checked_in_file() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, file) in [("ldba", "persist_avoid_ldba.json"), ("dra", "persist_avoid_dra.json")] {
        let out = p(&dir, file);
        ok(&["fixture", "--kind", "persist-avoid", "--automaton", kind, "-o", out.to_str().unwrap()]);
        assert_eq!(json(&out), json(Path::new(&fixture(file))));
    }
}

#[test]
fn exit_codes() {
    assert_eq!(mdpst(&["bogus"]).status.code(), Some(2));
    assert_eq!(mdpst(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = p(&dir, "bad.json");
    std::fs::write(&bad, "{\"states\": [").unwrap();
    let out = mdpst(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = mdpst(&["oracle", "--product", &fixture("appendix_b.json"), "--objective", "reach", "--targets", "99"]);
    assert_eq!(out.status.code(), Some(1));
}
