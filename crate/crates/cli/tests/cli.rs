use std::path::Path;
use std::process::{Command, Output};

fn pdgc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdgc")).args(args).output().unwrap()
}

fn simulate(name: &str, seed: &str, out: &Path) -> Output {
    pdgc(&["simulate", "--scenario", name, "--length", "400", "--seed", seed, "--out", out.to_str().unwrap()])
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    assert!(simulate("common-drive", "7", &a).status.success());
    assert!(simulate("common-drive", "7", &b).status.success());
    assert!(simulate("common-drive", "8", &c).status.success());
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn unknown_scenario_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate("nope", "0", &dir.path().join("x.csv"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lattice_listing() {
    let out = pdgc(&["lattice", "--n", "3", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["atoms"].as_array().unwrap().len(), 18);
    assert_eq!(pdgc(&["lattice", "--n", "5"]).status.code(), Some(2));
}

#[test]
fn analyze_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("u.csv");
    assert!(simulate("unidirectional", "1", &data).status.success());
    let out_dir = dir.path().join("res");
    let out = pdgc(&[
        "analyze", "--input", data.to_str().unwrap(), "--fs", "1", "--target", "y", "--drivers", "x1,x2",
        "--bands", "lf=0.05:0.2", "--order-max", "6", "--surrogates", "0", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("result.json")).unwrap();
    let report = pdgc_cli::AnalysisReport::from_json(&text).unwrap();
    assert_eq!(report.data.channels, ["x1", "x2", "y"]);
    assert!(report.significance.is_none());
    assert!(report.diagnostics.max_dare_residual < 1e-10);
    assert!(out_dir.join("spectra.csv").exists());
}

#[test]
fn failures_map_to_exit_codes_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("u.csv");
    assert!(simulate("unidirectional", "1", &data).status.success());
    let out_dir = dir.path().join("res");
    let run = |input: &Path, target: &str| {
        pdgc(&[
            "analyze", "--input", input.to_str().unwrap(), "--fs", "1", "--target", target, "--drivers", "x1",
            "--surrogates", "0", "--out", out_dir.to_str().unwrap(),
        ])
    };

    assert_eq!(run(&data, "missing").status.code(), Some(2));
    assert!(!out_dir.exists());

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x1,y\n1,2\n3\n").unwrap();
    assert_eq!(run(&bad, "y").status.code(), Some(3));
    assert_eq!(run(&dir.path().join("absent.csv"), "y").status.code(), Some(3));
    assert!(!out_dir.exists());

    // No required settings at all.
    assert_eq!(pdgc(&["analyze"]).status.code(), Some(2));
}
