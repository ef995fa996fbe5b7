use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("bad JSON {:?}: {e}", self.stdout))
    }
}

fn mprat(args: &[&str], dir: &Path) -> Run {
    mprat_env(args, dir, None)
}

fn mprat_env(args: &[&str], dir: &Path, seed: Option<&str>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mprat"));
    cmd.args(args).current_dir(dir).env_remove("MPRAT_SEED");
    if let Some(s) = seed {
        cmd.env("MPRAT_SEED", s);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf-8").trim().to_string(),
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn cross_part_commutator_is_exact_zero() {
    let d = TempDir::new().unwrap();
    write(&d, "commutator.expr", "X1_1 * X2_1 - X2_1 * X1_1");
    let r = mprat(&["check-zero", "--alphabet", "2:1,1", "--expr", "commutator.expr"], d.path());
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout, r#"{"verdict":"exact-zero"}"#);
}

#[test]
fn hua_identity_probably_zero() {
    let d = TempDir::new().unwrap();
    write(&d, "hua_lhs.expr", "inv(inv(X1_1) + inv(inv(X1_2) - X1_1))");
    write(&d, "hua_rhs.expr", "X1_1 - X1_1 * X1_2 * X1_1");
    let r = mprat(
        &["equiv", "--alphabet", "1:2", "hua_lhs.expr", "hua_rhs.expr", "--seed", "7"],
        d.path(),
    );
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout, r#"{"verdict":"probably-zero","max_level":4,"trials":8}"#);
}

#[test]
fn singular_point_reports_path() {
    let d = TempDir::new().unwrap();
    write(&d, "inv_x.expr", "1 + inv(X1_1)");
    write(&d, "singular.json", r#"{"dims":[2],"parts":[[[[1,2],[2,4]]]]}"#);
    let r = mprat(
        &["eval", "--alphabet", "1:1", "--expr", "inv_x.expr", "--point", "singular.json"],
        d.path(),
    );
    assert_eq!(r.code, 3);
    let v = r.json();
    assert_eq!(v["result"], "undefined");
    assert_eq!(v["undefined"]["path"], serde_json::json!([1]));
    assert_eq!(v["undefined"]["subexpr"], "inv(X1_1)");
}

#[test]
fn eval_defined_point() {
    let d = TempDir::new().unwrap();
    write(&d, "e.expr", "X1_1 * X2_1 + 1/2");
    write(&d, "p.json", r#"{"dims":[1,2],"parts":[[[["3"]]],[[[1,"1/3"],[0,2]]]]}"#);
    let r = mprat(&["eval", "--alphabet", "2:1,1", "--expr", "e.expr", "--point", "p.json"], d.path());
    assert_eq!(r.code, 0);
    assert_eq!(r.json()["value"], serde_json::json!([["7/2", "1"], ["0", "13/2"]]));
}

#[test]
fn witness_round_trips_through_eval() {
    let d = TempDir::new().unwrap();
    write(&d, "xy.expr", "X1_1 * X1_2 - X1_2 * X1_1");
    let r = mprat(&["check-zero", "--alphabet", "1:2", "--expr", "xy.expr"], d.path());
    assert_eq!(r.code, 1);
    let v = r.json();
    assert_eq!(v["verdict"], "nonzero-witness");
    assert_eq!(v["level"], 2);
    write(&d, "witness.json", &v["point"].to_string());
    let back = mprat(
        &["eval", "--alphabet", "1:2", "--expr", "xy.expr", "--point", "witness.json"],
        d.path(),
    );
    assert_eq!(back.code, 0);
    assert_eq!(back.json()["value"], v["value"]);
}

#[test]
fn reports_are_deterministic_and_seed_sensitive() {
    let d = TempDir::new().unwrap();
    write(&d, "e.expr", "X1_1 * X1_2 * X1_1 - X1_1 * X1_1 * X1_2");
    let args = ["check-zero", "--alphabet", "1:2", "--expr", "e.expr", "--seed", "3"];
    let a = mprat(&args, d.path());
    let b = mprat(&args, d.path());
    assert_eq!(a.stdout, b.stdout);
    let env_a = mprat_env(&args, d.path(), Some("11"));
    let flag = mprat(
        &["check-zero", "--alphabet", "1:2", "--expr", "e.expr", "--seed", "11"],
        d.path(),
    );
    assert_eq!(env_a.stdout, flag.stdout);
    assert_ne!(a.stdout, flag.stdout);
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let d = TempDir::new().unwrap();
    write(&d, "bad.expr", "X1_");
    write(&d, "ok.expr", "X1_1");
    let r = mprat(&["check-zero", "--alphabet", "1:1", "--expr", "bad.expr"], d.path());
    assert_eq!(r.code, 2);
    assert!(r.json()["error"].as_str().unwrap().contains("column 3"));
    assert_eq!(mprat(&["check-zero", "--alphabet", "1:0", "--expr", "ok.expr"], d.path()).code, 2);
    assert_eq!(mprat(&["check-zero", "--alphabet", "1:1", "--expr", "missing.expr"], d.path()).code, 2);
    assert_eq!(mprat(&["frobnicate"], d.path()).code, 2);
    assert_eq!(
        mprat(&["check-zero", "--alphabet", "1:1", "--expr", "ok.expr", "--trials", "0"], d.path()).code,
        2
    );
    assert_eq!(
        mprat_env(&["check-zero", "--alphabet", "1:1", "--expr", "ok.expr"], d.path(), Some("x")).code,
        2
    );
}

#[test]
fn delta_output() {
    let d = TempDir::new().unwrap();
    write(&d, "sq.expr", "X1_1 * X1_1");
    let r = mprat(
        &["delta", "--alphabet", "1:1", "--expr", "sq.expr", "--part", "1", "--index", "1"],
        d.path(),
    );
    assert_eq!(r.code, 0);
    assert_eq!(r.json()["delta"], "X1_1' + X1_1");
    let bad = mprat(
        &["delta", "--alphabet", "1:1", "--expr", "sq.expr", "--part", "1", "--index", "2"],
        d.path(),
    );
    assert_eq!(bad.code, 2);
}

#[test]
fn realize_reports_dimensions() {
    let d = TempDir::new().unwrap();
    write(&d, "e.expr", "X1_1 + X1_1");
    write(&d, "p.json", r#"{"dims":[1],"parts":[[[["2"]]]]}"#);
    let r = mprat(
        &["realize", "--alphabet", "1:1", "--expr", "e.expr", "--base-point", "p.json"],
        d.path(),
    );
    assert_eq!(r.code, 0);
    let v = r.json();
    assert_eq!(v["realization"]["dim"], 4);
    assert!(v["reduced_dim"].as_u64().unwrap() < 4);
    write(&d, "inv.expr", "inv(X1_1)");
    write(&d, "zero.json", r#"{"dims":[1],"parts":[[[["0"]]]]}"#);
    let outside = mprat(
        &["realize", "--alphabet", "1:1", "--expr", "inv.expr", "--base-point", "zero.json"],
        d.path(),
    );
    assert_eq!(outside.code, 3);
}

#[test]
fn bf_eval_commutator() {
    let d = TempDir::new().unwrap();
    write(&d, "c.expr", "X1_1 * X2_2 - X2_2 * X1_1");
    write(
        &d,
        "bf.json",
        r#"{"n":1,"a_prime":[[[2]],[[3]]],"a_second":[[[5]],[[7]]],"b_prime":[[[11]],[[13]]],"b_second":[[[17]],[[19]]]}"#,
    );
    let r = mprat(&["bf-eval", "--g", "2", "--expr", "c.expr", "--point", "bf.json"], d.path());
    assert_eq!(r.code, 0);
    let v = r.json();
    let value = v["value"].as_array().unwrap();
    assert_eq!(value.len(), 1);
    assert!(value.iter().flat_map(|row| row.as_array().unwrap()).all(|x| x == "0"));
    assert_eq!(mprat(&["bf-eval", "--g", "3", "--expr", "c.expr", "--point", "bf.json"], d.path()).code, 2);
}

#[test]
fn domain_scan_levels() {
    let d = TempDir::new().unwrap();
    write(&d, "c.expr", "inv(X1_1 * X1_2 - X1_2 * X1_1)");
    let r = mprat(&["domain-scan", "--alphabet", "1:2", "--expr", "c.expr"], d.path());
    assert_eq!(r.code, 0);
    assert_eq!(r.json()["first_defined_level"], 2);
    write(&d, "z.expr", "inv(X1_1 - X1_1)");
    let none = mprat(&["domain-scan", "--alphabet", "1:1", "--expr", "z.expr"], d.path());
    assert_eq!(none.code, 3);
    assert_eq!(none.json()["first_defined_level"], Value::Null);
}

#[test]
fn mat_inv_verdicts() {
    let d = TempDir::new().unwrap();
    write(&d, "m.json", r#"[["X1_1", "1"], ["0", "X1_1"]]"#);
    let r = mprat(&["mat-inv", "--alphabet", "1:1", "--matrix", "m.json"], d.path());
    assert_eq!(r.code, 0);
    let v = r.json();
    assert_eq!(v["result"], "invertible");
    assert_eq!(v["inverse"][1][0], "0");
    assert_eq!(v["pivots"].as_array().unwrap().len(), 2);
    write(&d, "s.json", r#"[["X1_1", "X1_1"], ["X1_1", "X1_1"]]"#);
    let s = mprat(&["mat-inv", "--alphabet", "1:1", "--matrix", "s.json"], d.path());
    assert_eq!(s.code, 1);
    assert_eq!(s.json()["result"], "probably-not-invertible");
}

#[test]
fn partial_eval_product() {
    let d = TempDir::new().unwrap();
    write(&d, "e.expr", "X1_1 * X2_1");
    write(&d, "t.json", r#"[[[1, 2], [0, -3]]]"#);
    let r = mprat(
        &["partial-eval", "--alphabet", "2:1,1", "--expr", "e.expr", "--tuple", "t.json"],
        d.path(),
    );
    assert_eq!(r.code, 0);
    assert_eq!(r.json()["matrix"], serde_json::json!([["X2_1", "2 * X2_1"], ["0", "-3 * X2_1"]]));
    write(&d, "i.expr", "inv(X1_1)");
    write(&d, "sing.json", r#"[[[1, 1], [1, 1]]]"#);
    let u = mprat(
        &["partial-eval", "--alphabet", "2:1,1", "--expr", "i.expr", "--tuple", "sing.json"],
        d.path(),
    );
    assert_eq!(u.code, 3);
}
