use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", "polytopes", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toricma")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn analyze_dp1() {
    let out = run(&["analyze", &data("dp1.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["barycenter"], serde_json::json!(["1/12", "1/12"]));
    assert_eq!(v["r_invariant"], "6/7");
    assert_eq!(v["reflexive"], true);
    assert_eq!(v["volume"], "4");
    assert_eq!(v["futaki"], serde_json::json!(["-1/3", "-1/3"]));
}

#[test]
fn analyze_square() {
    let v = json(&run(&["analyze", &data("square.json")]));
    assert_eq!(v["futaki"], serde_json::json!(["0", "0"]));
    assert_eq!(v["r_invariant"], "1");
}

#[test]
fn solve_exit_codes_follow_barycenter() {
    let ke = run(&["solve", &data("dp1.json"), "--mode", "ke"]);
    assert_eq!(ke.status.code(), Some(2));
    let err = String::from_utf8_lossy(&ke.stderr);
    assert!(err.contains("NO_SOLUTION_DETECTED") && err.contains("barycenter"), "{err}");
    let sol = run(&["solve", &data("dp1.json"), "--mode", "soliton"]);
    assert_eq!(sol.status.code(), Some(0));
    let v = json(&sol);
    assert_eq!(v["status"], "SOLVED");
    assert!(v["residual_max"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn validation_errors_exit_3() {
    let out = run(&["solve", &data("square.json"), "--mode", "twisted"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["analyze", "/nonexistent/polytope.json"]);
    assert_eq!(out.status.code(), Some(3));
    let dir = std::env::temp_dir().join(format!("toricma-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"dim": 1, "hrep": [{"l": [2], "a": "1"}, {"l": [-1], "a": "1"}]}"#).unwrap();
    let out = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("NONPRIMITIVE_NORMAL"));
    let out = run(&["solve", &data("square.json"), "--bogus"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn max_iter_exits_4() {
    let out = run(&["solve", &data("square.json"), "--max-iter", "1", "--tol", "1e-15"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(json(&out)["status"], "MAX_ITER");
}

#[test]
fn output_is_deterministic() {
    let args = ["solve", &data("hexagon.json"), "--seed", "7", "--refinement", "2"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn phi_samples_and_out_file() {
    let dir = std::env::temp_dir().join(format!("toricma-phi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("phi.csv");
    let rep = dir.join("report.json");
    let out = run(&[
        "solve",
        &data("segment.json"),
        "--out",
        rep.to_str().unwrap(),
        "--phi-samples",
        csv.to_str().unwrap(),
        "--samples",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,phi");
    assert_eq!(lines.len(), 6);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(report["status"], "SOLVED");
}

#[test]
fn flow_trace_csv() {
    let out = run(&["flow", &data("segment.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,G,entropy,dt,drift\n"));
    let g: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(g.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(run(&["flow", &data("uneven_segment.json")]).status.code(), Some(2));
}

#[test]
fn df_reports_both_measures() {
    let dir = std::env::temp_dir().join(format!("toricma-df-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let tc = dir.join("tc.json");
    // u = max(p1, 0) on the square: boundary integral 2 + 1/2 + 1/2 against 2 ∫_P u = 2
    std::fs::write(&tc, r#"{"pieces": [{"m": ["1", "0"], "c": "0"}, {"m": ["0", "0"], "c": "0"}]}"#).unwrap();
    let v = json(&run(&["df", &data("square.json"), tc.to_str().unwrap(), "--measure", "lattice"]));
    assert_eq!(v["canonical"], "1");
    assert_eq!(v["lattice"], "1");
    assert_eq!(v["value"], "1");
}

#[test]
fn recenter_moves_barycenter_to_origin() {
    let dir = std::env::temp_dir().join(format!("toricma-rc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("rc.json");
    let out = run(&["recenter", &data("dp1.json"), "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&run(&["analyze", path.to_str().unwrap()]));
    assert_eq!(v["barycenter"], serde_json::json!(["0", "0"]));
    let rc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(rc["c_F"], v["c_F"]);
    assert_eq!(rc["c_F"], serde_json::json!(["-1/12", "-1/12", "1/6", "-1/6"]));
}

#[test]
fn rp_geometric_value() {
    let v = json(&run(&["rp", &data("uneven_segment.json")]));
    assert_eq!(v["r_invariant"], "2/3");
}

#[test]
fn sweep_rows() {
    let out = run(&["sweep", &data("square.json"), &data("square.json"), "--samples", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("t,b1,b2,a1,a2,r_invariant"));
}

#[test]
fn help_lists_defaults() {
    let out = run(&["solve", "--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in ["--refinement", "--tol", "--mode", "--r ", "--seed", "--out", "--samples"] {
        assert!(text.contains(flag), "{flag}");
    }
    assert!(text.contains("[default: 3]"));
}
