use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multdim")).args(args).env_remove("MULTDIM_THREADS").output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn ok_text(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn semigroup_listing() {
    let csv = ok_text(&["semigroup", "--primes", "2,3", "--count", "12", "--format", "csv"]);
    assert_eq!(csv.lines().next(), Some("k,l_k"));
    assert_eq!(csv.lines().last(), Some("12,27"));
    let csv = ok_text(&["semigroup", "--primes", "2", "--count", "4", "--format", "csv"]);
    assert_eq!(csv.lines().last(), Some("4,8"));
    let v = ok_json(&["semigroup", "--primes", "2,3", "--bound", "30"]);
    assert_eq!(v["results"]["elements"], serde_json::json!([1, 2, 3, 4, 6, 8, 9, 12, 16, 18, 24, 27]));
    assert_eq!(v["results"]["gamma"], 3.0);
}

#[test]
fn semigroup_rejects_composite() {
    let out = run(&["semigroup", "--primes", "4,3", "--count", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("4 is not prime"));
}

#[test]
fn count_methods_agree() {
    let spec = fixture("x23.json");
    let dfs = ok_json(&["count", "--spec", &spec, "--depth", "15"]);
    let tri = ok_json(&["count", "--spec", &spec, "--depth", "15", "--method", "triangle"]);
    assert_eq!(dfs["results"]["counts"][14], 12050);
    assert_eq!(dfs["results"]["counts"], tri["results"]["counts"]);
    assert_eq!(dfs["results"]["exact"], true);
    assert_eq!(dfs["spec_digest"], tri["spec_digest"]);
    let csv = ok_text(&["count", "--spec", &spec, "--depth", "15", "--format", "csv"]);
    assert_eq!(csv.lines().last(), Some("15,12050"));
}

#[test]
fn count_depth_zero_is_empty() {
    let v = ok_json(&["count", "--spec", &fixture("x23.json"), "--depth", "0"]);
    assert_eq!(v["results"]["counts"], serde_json::json!([]));
    let csv = ok_text(&["count", "--spec", &fixture("x23.json"), "--depth", "0", "--format", "csv"]);
    assert_eq!(csv, "k,A_k\n");
}

#[test]
fn triangle_rejects_unsupported_spec() {
    let out = run(&["count", "--spec", &fixture("all_equal_23.json"), "--depth", "5", "--method", "triangle"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn minkowski_with_ratio_bounds() {
    let spec = fixture("x23.json");
    let v = ok_json(&["minkowski", "--spec", &spec, "--depth", "31", "--ratio-lo", "1.75", "--ratio-hi", "2"]);
    let r = &v["results"];
    let (lo, hi) = (r["lower"].as_f64().unwrap(), r["upper"].as_f64().unwrap());
    // outward rounding of [0.94338483164, 0.94504987210]
    assert!(lo <= 0.9433848316397 && lo > 0.94338483163);
    assert!((0.9450498720993..0.94504987211).contains(&hi));
    assert_eq!(r["terms_used"], 30);
    assert_eq!(r["certified"], true);
    assert_eq!(v["parameters"]["method"], "triangle");

    let plain = ok_json(&["minkowski", "--spec", &spec, "--depth", "31"]);
    let p = &plain["results"];
    assert!(p["lower"].as_f64().unwrap() <= lo && p["upper"].as_f64().unwrap() >= hi);
}

#[test]
fn minkowski_rejects_violated_ratio() {
    let out = run(&["minkowski", "--spec", &fixture("x23.json"), "--depth", "12", "--ratio-lo", "1.9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ratio"));
}

#[test]
fn hausdorff_depth_one() {
    let v = ok_json(&["hausdorff", "--spec", &fixture("x23.json"), "--depth", "1"]);
    let r = &v["results"];
    assert_eq!(r["lower"], 0.333333333333);
    assert_eq!(r["upper"], 1.0);
}

#[test]
fn hausdorff_table_mode_matches_streaming() {
    let spec = fixture("x23.json");
    let a = ok_json(&["hausdorff", "--spec", &spec, "--depth", "12"]);
    let b = ok_json(&["hausdorff", "--spec", &spec, "--depth", "12", "--table"]);
    assert_eq!(a["results"], b["results"]);
}

#[test]
fn hausdorff_table_budget_exit_code() {
    let out = run(&["hausdorff", "--spec", &fixture("x23.json"), "--depth", "20", "--table", "--node-cap", "1000"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn variational_uniform_below_minkowski_lower() {
    let spec = fixture("x23.json");
    let s = ok_json(&["variational", "--spec", &spec, "--depth", "10", "--measure", "uniform"]);
    let series = s["results"]["series"].as_f64().unwrap();
    let mk = ok_json(&["minkowski", "--spec", &spec, "--depth", "10", "--r", "9", "--method", "dfs"]);
    assert!(series <= mk["results"]["lower"].as_f64().unwrap());
    assert!(s["results"].get("limit").is_none());

    let opt = ok_json(&["variational", "--spec", &spec, "--depth", "10", "--measure", "optimal"]);
    let h = ok_json(&["hausdorff", "--spec", &spec, "--depth", "10"]);
    let limit = opt["results"]["limit"].as_f64().unwrap();
    assert!((limit - h["results"]["lower"].as_f64().unwrap()).abs() < 1e-11);
}

#[test]
fn sampled_word_verifies() {
    let spec = fixture("x23.json");
    let v = ok_json(&["sample", "--spec", &spec, "--length", "100", "--seed", "7", "--verify"]);
    let word = v["results"]["word"].as_str().unwrap().to_string();
    assert_eq!(word.len(), 100);
    assert_eq!(v["results"]["admissible"], true);
    let check = ok_json(&["verify", "--spec", &spec, "--word", &word]);
    assert_eq!(check["results"]["admissible"], true);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("word.txt");
    std::fs::write(&path, format!("{word}\n")).unwrap();
    let check = ok_json(&["verify", "--spec", &spec, "--word-file", path.to_str().unwrap()]);
    assert_eq!(check["results"]["length"], 100);
}

#[test]
fn inadmissible_word_fails_verify() {
    let out = run(&["verify", "--spec", &fixture("x23.json"), "--word", "111"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"]["admissible"], false);
}

#[test]
fn classify_ledrappier() {
    let v = ok_json(&["classify", "--truth-table", "01101001", "--p", "2", "--q", "3"]);
    let r = &v["results"];
    assert_eq!(r["types"], serde_json::json!(["i", "ii", "iii"]));
    assert_eq!(r["deterministic"], true);
    assert_eq!(r["dimension"], 0.666666666667);
    assert_eq!(r["spec"]["rules"][0]["scales"], serde_json::json!([1, 2, 3]));

    let v = ok_json(&["classify", "--truth-table", "11111110"]);
    assert_eq!(v["results"]["deterministic"], false);
    let v = ok_json(&["classify", "--truth-table", "10000001", "--p", "2", "--q", "5"]);
    assert_eq!(v["results"]["minkowski_dimension"], 0.4);

    let out = run(&["classify", "--truth-table", "0110100"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["classify", "--truth-table", "01101001", "--p", "2", "--q", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classify_spec_feeds_pipelines() {
    let v = ok_json(&["classify", "--truth-table", "01101001", "--p", "2", "--q", "5"]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.json");
    std::fs::write(&path, serde_json::to_string(&v["results"]["spec"]).unwrap()).unwrap();
    let m = ok_json(&["minkowski", "--spec", path.to_str().unwrap(), "--depth", "21", "--r", "20"]);
    let (lo, hi) = (m["results"]["lower"].as_f64().unwrap(), m["results"]["upper"].as_f64().unwrap());
    assert!(lo <= 0.8 && 0.8 <= hi, "[{lo}, {hi}]");
}

#[test]
fn lookahead_specs_warn() {
    let out = run(&["count", "--spec", &fixture("y_xz_23.json"), "--depth", "10"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("upper estimates"));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"]["exact"], false);
}

#[test]
fn output_is_byte_identical() {
    let spec = fixture("x23.json");
    for args in [
        vec!["minkowski", "--spec", &spec, "--depth", "20", "--ratio-lo", "1.75"],
        vec!["sample", "--spec", &spec, "--length", "500", "--seed", "3"],
        vec!["hausdorff", "--spec", &spec, "--depth", "14", "--format", "csv"],
    ] {
        assert_eq!(run(&args).stdout, run(&args).stdout, "{args:?}");
    }
    let a = run(&["sample", "--spec", &spec, "--length", "500", "--seed", "3", "--threads", "1"]);
    let b = run(&["sample", "--spec", &spec, "--length", "500", "--seed", "3", "--threads", "4"]);
    let word = |o: &Output| serde_json::from_slice::<Value>(&o.stdout).unwrap()["results"]["word"].clone();
    assert_eq!(word(&a), word(&b));
}

#[test]
fn threads_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_multdim"))
        .args(["count", "--spec", &fixture("x23.json"), "--depth", "12"])
        .env("MULTDIM_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_multdim"))
        .args(["count", "--spec", &fixture("x23.json"), "--depth", "12"])
        .env("MULTDIM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn report_round_trips_and_timing_is_opt_in() {
    let out = ok_text(&["hausdorff", "--spec", &fixture("x23.json"), "--depth", "8"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v.get("wall_time_s").is_none());
    assert_eq!(serde_json::to_string_pretty(&v).unwrap() + "\n", out);
    let timed = ok_json(&["hausdorff", "--spec", &fixture("x23.json"), "--depth", "8", "--timing"]);
    assert!(timed["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn missing_spec_file_is_validation_error() {
    let out = run(&["count", "--spec", "/nonexistent/spec.json", "--depth", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"alphabet": 2, "primes": [2, 3], "rules": [], "extra": 1}"#).unwrap();
    let out = run(&["count", "--spec", path.to_str().unwrap(), "--depth", "3"]);
    assert_eq!(out.status.code(), Some(2));
}
