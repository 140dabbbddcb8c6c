//! End-to-end runs of the `dhkit` binary.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn dhkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dhkit")).args(args).output().expect("binary runs")
}

/// Runs with the job document on stdin.
fn dhkit_stdin(args: &[&str], doc: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_dhkit"))
        .args(args)
        .args(["--input", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary starts");
    child.stdin.take().unwrap().write_all(doc.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn f64_at(v: &Value, ptr: &str) -> f64 {
    let x = v.pointer(ptr).unwrap_or_else(|| panic!("no {ptr} in {v}"));
    x.as_f64().unwrap_or_else(|| x.to_string().parse().unwrap())
}

#[test]
fn check_passes_on_the_projective_line() {
    let out = dhkit(&["check", "--input", &fixture("p1_example.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["passed"], Value::Bool(true));
    let suites = v["suites"].as_array().unwrap();
    assert!(suites.len() >= 9);
    for s in suites {
        assert_eq!(s["passed"], Value::Bool(true), "{s}");
    }
    assert_eq!(v["warnings"].as_array().unwrap().len(), 0);
}

#[test]
fn symmetric_polytope_has_zero_soliton() {
    let out = dhkit(&["soliton", "--input", &fixture("symmetric_polytopes.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    for x in v["argmin"].as_array().unwrap() {
        assert!(x.to_string().parse::<f64>().unwrap().abs() <= 1e-10);
    }
    assert_eq!(v["certificates"]["converged"], Value::Bool(true));
    assert!(f64_at(&v, "/grad_norm") <= 1e-10);
    assert!(f64_at(&v, "/tol") > 0.0);
}

#[test]
fn interval_soliton_balances_the_tilted_mean() {
    let out = dhkit(&["soliton", "--input", &fixture("unstable_interval.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let xi = f64_at(&json(&out), "/argmin/0");
    // the mean of y under e^{-ξy} on [-1, 2] vanishes
    let (mut num, mut den) = (0.0, 0.0);
    let k = 200_000;
    for i in 0..k {
        let y = -1.0 + 3.0 * (i as f64 + 0.5) / k as f64;
        let w = (-xi * y).exp();
        num += y * w;
        den += w;
    }
    assert!((num / den).abs() < 1e-8, "{xi}: {}", num / den);
}

#[test]
fn rescale_on_the_unstable_interval() {
    let out = dhkit(&["rescale", "--input", &fixture("unstable_interval.json"), "--a", "0", "--a", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert!(f64_at(&v, "/value") < 0.0);
    assert!(f64_at(&v, "/certificates/beta") < 0.0);
    assert_eq!(v["probes"].as_array().unwrap().len(), 2);
    // the same problem as the soliton on [-1, 2] after the shift by A = 1
    let sol = json(&dhkit(&["soliton", "--input", &fixture("unstable_interval.json")]));
    assert!((f64_at(&v, "/argmin/0") - f64_at(&sol, "/argmin/0")).abs() < 1e-9);
}

#[test]
fn malformed_json_exits_with_the_location() {
    let out = dhkit_stdin(&["dh"], "{\n  \"filtration\": {\n    \"levels\": [1, 2,,]\n}");
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line 3, column"), "{err}");
}

#[test]
fn missing_fields_name_the_path() {
    let out = dhkit_stdin(&["rescale"], r#"{"measure": {"atoms": [{"pos": 0}, {"mass": 1}]}, "log_discrepancy": 1}"#);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("$.measure.atoms[1]"), "{}", stderr(&out));

    let out = dhkit_stdin(&["soliton"], r#"{"rank": 1}"#);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("polytope"), "{}", stderr(&out));

    let out = dhkit(&["dh", "--input", "/nonexistent/job.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = dhkit(&["report", "--input", &fixture("symmetric_polytopes.json")]);
    assert_eq!(out.status.code(), Some(2), "document names another command");
}

#[test]
fn domain_errors_exit_with_one() {
    // weights 0..m put the origin on the boundary of the weight polytope
    let out = dhkit(&["twist-opt", "--input", &fixture("p1_example.json"), "--degrees", "10..20"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("origin not interior"), "{}", stderr(&out));

    let dirac = r#"{"measure": {"atoms": [{"pos": 2, "mass": 1}]}, "log_discrepancy": 1}"#;
    let out = dhkit_stdin(&["rescale"], dirac);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("Dirac"), "{}", stderr(&out));
}

#[test]
fn output_is_byte_identical_across_runs_and_threads() {
    let runs: Vec<(&[&str], String)> = vec![
        (&["dh", "--degrees", "10..60"], fixture("p1_example.json")),
        (&["report", "--a", "0.5", "--a", "2"], fixture("unstable_interval.json")),
        (&["soliton"], fixture("symmetric_polytopes.json")),
        (&["cone", "--format", "csv"], fixture("unstable_interval.json")),
    ];
    for (args, input) in runs {
        let mut outs = Vec::new();
        for threads in ["1", "1", "3"] {
            let mut a: Vec<&str> = args.to_vec();
            a.extend(["--input", &input, "--threads", threads]);
            let out = dhkit(&a);
            assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
            outs.push(out.stdout);
        }
        assert!(outs.windows(2).all(|w| w[0] == w[1]), "{args:?}");
    }
}

#[test]
fn convergence_table_as_csv() {
    let out = dhkit(&["dh", "--input", &fixture("p1_example.json"), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,wasserstein1,q_error,psi_error"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 20);
    for r in &rows {
        assert!(r[1] <= 2.0 / r[0], "W1 above 2/m at m = {}", r[0]);
    }
    assert!(rows.windows(2).all(|w| w[1][2] <= w[0][2]));
}

#[test]
fn dh_reports_exact_minima() {
    let out = dhkit(&["dh", "--input", &fixture("p1_example.json"), "--degrees", "1..3"]);
    let v = json(&out);
    let lv = &v["levels"][2];
    assert_eq!(lv["m"], 3);
    assert_eq!(lv["sum_minima"], "-6");
    assert_eq!(lv["successive_minima"], serde_json::json!(["0", "-1", "-2", "-3"]));
}

#[test]
fn superadditivity_failure_warns_and_fails_check() {
    let doc = r#"{"filtration": {"levels": {"1": {"values": [1, 0]}, "2": {"values": [1, 0, 0]}}}}"#;
    let out = dhkit_stdin(&["dh"], doc);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("not superadditive"));
    assert_eq!(json(&out)["warnings"].as_array().unwrap().len(), 1);

    let out = dhkit_stdin(&["check"], doc);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["passed"], Value::Bool(false));
    assert!(stderr(&out).contains("superadditivity"));
}

#[test]
fn candidate_family_gives_an_upper_bound() {
    let doc = r#"{
        "candidates": [
            {"label": "low", "measure": {"atoms": [{"pos": 0}, {"pos": 1}]}, "l_policy": {"policy": "supplied", "value": 0}},
            {"label": "high", "measure": {"atoms": [{"pos": -1}, {"pos": 0}]}, "l_policy": 0}
        ]
    }"#;
    let out = dhkit_stdin(&["report"], doc);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    let hs: Vec<f64> = (0..2).map(|i| f64_at(&v, &format!("/candidates/{i}/h"))).collect();
    assert_eq!(v["h_upper_bound"]["kind"], "upper bound");
    assert_eq!(f64_at(&v, "/h_upper_bound/value"), hs[0].min(hs[1]));
    assert_eq!(v["h_upper_bound"]["attained_by"], "low");
}

#[test]
fn degeneration_keeps_the_invariants() {
    let doc = r#"{
        "model": {"vars": 3, "weight": [0, 1, 3]},
        "filtration": {"generator": "weight", "vars": 3, "weight": [2, "-1/2", 1], "degrees": "1..4"}
    }"#;
    let out = dhkit_stdin(&["degenerate"], doc);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["preserved"], Value::Bool(true));
    assert_eq!(v["levels"].as_array().unwrap().len(), 4);
}

#[test]
fn distance_to_a_shift() {
    let doc = r#"{
        "filtration": {"generator": "projective_line", "degrees": "1..6"},
        "other": {"levels": {
            "2": {"values": [2, 1, 0]},
            "4": {"values": [4, 3, 2, 1, 0]},
            "6": {"values": [6, 5, 4, 3, 2, 1, 0]}
        }},
        "p": 1
    }"#;
    let out = dhkit_stdin(&["distance"], doc);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    // values move by m at degree m, so every d_p is 1
    for i in 0..3 {
        assert!((f64_at(&v, &format!("/levels/{i}/d_p")) - 1.0).abs() < 1e-15);
    }
    assert_eq!(v["levels"][0]["d2_squared"], "1");
    assert!((f64_at(&v, "/extrapolated") - 1.0).abs() < 1e-12);
}

#[test]
fn output_flag_writes_the_report() {
    let path = std::env::temp_dir().join(format!("dhkit-cli-test-{}.json", std::process::id()));
    let p = path.to_string_lossy().into_owned();
    let out = dhkit(&["soliton", "--input", &fixture("symmetric_polytopes.json"), "--output", &p]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let direct = dhkit(&["soliton", "--input", &fixture("symmetric_polytopes.json")]);
    assert_eq!(text.as_bytes(), &direct.stdout[..]);
}
