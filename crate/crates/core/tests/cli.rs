use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn persuade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_persuade")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}\nstdout: {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn solve_counterexample_with_lp() {
    let path = scenario("counterexample.json");
    let out = persuade(&["solve", "--oracle", "lp", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["value"], "25/28");
    assert_eq!(v["method"], "lp");
}

#[test]
fn solve_example1_greedy_mass() {
    let path = scenario("example1.json");
    let out = persuade(&["solve", "--method", "greedy", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(json(&out)["per_period_mass"][0], "25/47");
}

#[test]
fn solve_example1_interval_with_weight_override() {
    let path = scenario("example1.json");
    let out = persuade(&["solve", "--method", "interval", "--resolution", "1e-4", path.to_str().unwrap(), "--w2", "4/5"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["per_period_mass"][0], "125/378");
    assert_eq!(v["value"], "71/126");
}

#[test]
fn solve_writes_files_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("counterexample.json");
    let mut seen = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = persuade(&["solve", path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success());
        let result = std::fs::read(out_dir.join("result.json")).unwrap();
        assert_eq!(result, out.stdout);
        let csv = std::fs::read_to_string(out_dir.join("plan.csv")).unwrap();
        assert!(csv.starts_with("t,alpha,lower,upper,value_to_go\n"));
        assert_eq!(csv.lines().count(), 3);
        seen.push((result, csv));
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn infinite_horizon_gives_a_bracket() {
    let path = scenario("randomwalk-infinite.json");
    let out = persuade(&["solve", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["method"], "value-iter");
    let lo: f64 = v["value_decimal"]["lower"].as_str().unwrap().parse().unwrap();
    let hi: f64 = v["value_decimal"]["upper"].as_str().unwrap().parse().unwrap();
    assert!(lo <= hi && hi - lo <= 1e-9);
}

#[test]
fn value_iteration_needs_a_tolerance() {
    let path = scenario("randomwalk.json");
    let out = persuade(&["solve", "--method", "value-iter", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = persuade(&["solve", "--method", "value-iter", "--tol", "1/1000000", path.to_str().unwrap()]);
    assert!(out.status.success());
}

#[test]
fn blackwell_checks() {
    let walk = scenario("randomwalk.json");
    let out = persuade(&["check", "blackwell", walk.to_str().unwrap(), "--strict"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["holds"], true);

    let counter = scenario("counterexample.json");
    let out = persuade(&["check", "blackwell", counter.to_str().unwrap()]);
    assert!(out.status.success());
    let out = persuade(&["check", "blackwell", counter.to_str().unwrap(), "--strict"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["holds"], false);
    assert_eq!(v["detail"]["kernels"][0]["triple"], serde_json::json!(["1/3", "1/2", "3/4"]));
}

#[test]
fn ic_domination_and_parity_checks() {
    let plan = scenario("plan.json");
    for kind in ["ic", "domination"] {
        let out = persuade(&["check", kind, plan.to_str().unwrap(), "--strict"]);
        assert!(out.status.success(), "{kind}");
        assert_eq!(json(&out)["holds"], true, "{kind}");
    }
    let walk = scenario("randomwalk.json");
    let out = persuade(&["check", "parity", walk.to_str().unwrap(), "--strict"]);
    assert!(out.status.success());
    // no plan in this file
    let out = persuade(&["check", "ic", walk.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn broken_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = std::fs::read_to_string(scenario("counterexample.json")).unwrap().replace("\"3/4\": [[\"3/4\", \"1\"]]", "\"3/5\": [[\"3/5\", \"1\"]]");
    std::fs::write(&path, text).unwrap();
    let out = persuade(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:2:"), "{err}");
    assert!(err.contains("3/4"), "{err}");
}

#[test]
fn case_counterexample_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = persuade(&["case", "counterexample", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["computed"]["interval_value"], "6/7");
    assert_eq!(std::fs::read(dir.path().join("counterexample.json")).unwrap(), out.stdout);
}

#[test]
fn case_exit_code_follows_pass() {
    let out = persuade(&["case", "example1", "--w2", "1/2"]);
    assert!(out.status.success());
    // the interior mass expectation at this weight does not hold
    let out = persuade(&["case", "example1", "--w2", "4/5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn sweep_over_weights_is_ordered() {
    let path = scenario("example1.json");
    let out = persuade(&["sweep", path.to_str().unwrap(), "--param", "w2", "--from", "0", "--to", "1", "--steps", "5", "--digits", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "w2,value_lower,value_upper,first_period_mass");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0.0000,"));
    assert!(lines[5].starts_with("1.0000,"));
    assert!(lines[5].ends_with(",0.0000"));
}

#[test]
fn sweep_example2_regimes() {
    let out = persuade(&["sweep", "example2", "--from", "1/100", "--to", "99/100", "--steps", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let regimes: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(regimes.first(), Some(&"greedy"));
    assert_eq!(regimes.last(), Some(&"greedy"));
    assert!(regimes.contains(&"zero"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(persuade(&["solve"]).status.code(), Some(2));
    assert_eq!(persuade(&["case", "nonexistent"]).status.code(), Some(2));
    assert!(persuade(&["--help"]).status.success());
}
