use std::path::Path;
use std::process::{Command, Output};

use anisotetra_cli::commands::{dim_p, worked_example_matches, WORKED_EXAMPLE};
use anisotetra_cli::{Report, RunConfig};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_anisotetra"));
    c.env_remove("ANISOTETRA_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn analyze_reference() {
    let j = json_of(&run(&["analyze", "--tetra", "ref", "--out", "-"]));
    assert_eq!(j["schema_version"], 1);
    let r = &j["results"];
    assert_eq!(f(&r["r_t"]), 12.0);
    assert_eq!(r["mac"], true);
    assert!((f(&r["volume"]) - 1.0 / 6.0).abs() < 1e-15);
    assert!((f(&r["diameter"]) - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn numbers_carry_seventeen_digits() {
    let out = run(&["analyze", "--tetra", "ref"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"diameter\"")).unwrap();
    let mantissa = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let digits = mantissa.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(digits.len(), 17, "{mantissa}");
}

#[test]
fn tetra_file_with_comments() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    std::fs::write(&path, "# unit tetrahedron\n0 0 0\n1 0 0  # x\n\n0 1 0\n0 0 1\n").unwrap();
    let j = json_of(&run(&["analyze", "--tetra", path.to_str().unwrap()]));
    assert_eq!(f(&j["results"]["r_t"]), 12.0);
}

#[test]
fn missing_vertex_is_input_error() {
    let out = run(&["analyze", "--vertices", "0,0,0 1,0,0 0,1,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("vertex 4"), "{}", stderr(&out));
}

#[test]
fn coplanar_is_degenerate() {
    let out = run(&["analyze", "--vertices", "0,0,0 1,0,0 0,1,0 1,1,0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn error_quadratic_on_reference() {
    let j = json_of(&run(&["error", "--tetra", "ref", "--expr", "x^2", "--k", "1", "--m", "0", "--p", "2"]));
    let r = &j["results"];
    let ratio = f(&r["ratio"]);
    assert!(ratio.is_finite() && ratio > 0.0);
    assert_eq!(f(&r["p"]), 2.0);
    // I x^2 = x, and int x^a over the unit tetrahedron is a! / (a + 3)!.
    let m = |a: u32| (1..=a).product::<u32>() as f64 / (1..=a + 3).product::<u32>() as f64;
    let exact = (m(4) - 2.0 * m(3) + m(2)).sqrt();
    assert!((f(&r["error"]) - exact).abs() < 1e-12, "{} vs {exact}", r["error"]);
}

#[test]
fn infinite_exponent_is_spelled_inf() {
    let j = json_of(&run(&["error", "--tetra", "ref", "--expr", "x^2", "--k", "1", "--m", "0", "--p", "inf"]));
    assert_eq!(j["results"]["p"], "inf");
    assert_eq!(j["config"]["p"], "inf");
    // max |x^2 - x| is 1/4.
    assert!((f(&j["results"]["error"]) - 0.25).abs() < 1e-12);
}

#[test]
fn inadmissible_triple_names_reason() {
    let out = run(&["error", "--tetra", "ref", "--expr", "x^2", "--k", "1", "--m", "1", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("p must exceed 2 when k = m"), "{}", stderr(&out));
}

#[test]
fn bad_expression_points_at_position() {
    let out = run(&["error", "--tetra", "ref", "--expr", "x^2 + * y", "--k", "1", "--m", "0", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr(&out);
    assert!(e.contains("position"), "{e}");
    assert!(e.contains('^'), "{e}");
}

#[test]
fn sweep_rows_and_determinism() {
    let args = ["sweep", "--k", "1", "--m", "0", "--p", "2", "--alphas", "1,eps,eps", "--eps-levels", "10", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let mut rd = csv::Reader::from_reader(a.stdout.as_slice());
    let header = rd.headers().unwrap().clone();
    assert_eq!(&header[0], "schema_version");
    assert_eq!(&header[1], "index");
    let rows: Vec<_> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| &r[0] == "1"));
}

#[test]
fn sweep_writes_file_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("s.csv");
    let sum_path = dir.path().join("s.json");
    let out = run(&[
        "sweep",
        "--k",
        "1",
        "--m",
        "0",
        "--p",
        "2",
        "--eps-levels",
        "3",
        "--out",
        csv_path.to_str().unwrap(),
        "--summary",
        sum_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&csv_path).unwrap().lines().count(), 4);
    let r: Report = serde_json::from_str(&std::fs::read_to_string(&sum_path).unwrap()).unwrap();
    assert_eq!(r.schema_version, 1);
}

#[test]
fn mac_small_run_has_no_counterexamples() {
    let j = json_of(&run(&["mac", "--gamma-max", "2.0943951023931957", "--n", "200", "--format", "json"]));
    assert_eq!(j["results"]["counterexamples"], 0);
    assert_eq!(j["results"]["forward"]["samples"], 200);
    assert_eq!(j["results"]["reverse"]["samples"], 200);
}

#[test]
fn dq_prints_worked_stencil() {
    let out = run(&["dq", "--k", "4", "--delta", "2,1,1", "--gamma", "0,0,0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    let mut got: Vec<([u32; 3], i64)> = rd
        .records()
        .map(|r| {
            let r = r.unwrap();
            let e = |i: usize| r[i].parse::<u32>().unwrap();
            ([e(1), e(2), e(3)], r[7].parse().unwrap())
        })
        .collect();
    let mut want = WORKED_EXAMPLE.to_vec();
    got.sort();
    want.sort();
    assert_eq!(got, want);
    assert!(worked_example_matches());
}

#[test]
fn dim_p_counts() {
    let binom = |n: usize, r: usize| (0..r).fold(1usize, |acc, i| acc * (n - i) / (i + 1));
    for n in 0..8 {
        assert_eq!(dim_p(n), binom(n + 3, 3));
    }
}

fn seed_of(out: &Output) -> u64 {
    // Seeds travel in the JSON report.
    json_of(out)["seed"].as_u64().unwrap()
}

#[test]
fn seed_from_environment_and_flag() {
    let base = ["mac", "--n", "3", "--format", "json"];
    let env = bin().args(base).env("ANISOTETRA_SEED", "99").output().unwrap();
    assert_eq!(seed_of(&env), 99);
    let flag = bin().args(base).args(["--seed", "5"]).env("ANISOTETRA_SEED", "99").output().unwrap();
    assert_eq!(seed_of(&flag), 5);
    let none = run(&base);
    assert_eq!(seed_of(&none), 1);
    let bad = bin().args(base).env("ANISOTETRA_SEED", "abc").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"command": "analyze", "tetra": {"reference": "hat"}, "colour": 3}"#).unwrap();
    let out = run(&["analyze", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));
}

#[test]
fn config_for_other_command_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"command": "mac"}"#).unwrap();
    let out = run(&["analyze", "--tetra", "ref", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

fn rerun_from_echo(report: &Value, dir: &Path) -> Value {
    let path = dir.join("echo.json");
    std::fs::write(&path, serde_json::to_string(&report["config"]).unwrap()).unwrap();
    let cmd = report["command"].as_str().unwrap();
    json_of(&run(&[cmd, "--config", path.to_str().unwrap()]))
}

#[test]
fn config_echo_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = json_of(&run(&[
        "error", "--vertices", "0,0,0 2,0,0 0.3,0.4,0 0.2,0.3,0.9", "--expr", "sin(x)*exp(y)", "--k", "2", "--m", "1",
        "--p", "inf",
    ]));
    let second = rerun_from_echo(&first, dir.path());
    assert_eq!(first, second);
    let cfg: RunConfig = serde_json::from_value(first["config"].clone()).unwrap();
    assert_eq!(serde_json::to_value(&cfg).unwrap(), first["config"]);
}

#[test]
fn report_round_trips() {
    let out = run(&["analyze", "--tetra", "tilde"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let r: Report = serde_json::from_str(&text).unwrap();
    let back = serde_json::to_value(&r).unwrap();
    assert_eq!(back, serde_json::from_str::<Value>(&text).unwrap());
}

#[test]
fn help_exits_zero_and_bad_flag_exits_two() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["analyze", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn selftest_subset() {
    let out = run(&["selftest", "--only", "5,9", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let e = stderr(&out);
    assert!(e.contains("PASS  5") && e.contains("PASS  9"), "{e}");
}
