use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn twwc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twwc")).args(args).output().expect("binary runs")
}

fn run_json(args: &[&str]) -> Value {
    let out = twwc(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_temp(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

/// `(coeffs, sense, rhs)` rows after reading a system file, as strings.
fn rows(v: &Value) -> Vec<(Vec<String>, String, String)> {
    let s = |x: &Value| match x {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let mut r: Vec<_> = v["inequalities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|h| (h["coeffs"].as_array().unwrap().iter().map(s).collect(), s(&h["sense"]), s(&h["rhs"])))
        .collect();
    r.sort();
    r
}

#[test]
fn fm_reproduces_bundled_expectations() {
    for (input, expected) in [("ap1.json", "ap1_expected.json"), ("g_to_hh1.json", "g_to_hh1_expected.json")] {
        let got = run_json(&["fm", "--in", fixture(input).to_str().unwrap()]);
        let want: Value = serde_json::from_str(&std::fs::read_to_string(fixture(expected)).unwrap()).unwrap();
        assert_eq!(got["variables"], want["variables"]);
        assert_eq!(rows(&got), rows(&want), "{input}");
    }
}

#[test]
fn fm_empty_elimination_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"variables":["a","b"],"inequalities":[
        {"coeffs":["1/2",0],"sense":"<=","rhs":1},
        {"coeffs":[0,2],"sense":"<=","rhs":"3"}]}"#;
    let p = write_temp(dir.path(), "s.json", body);
    let got = run_json(&["fm", "--in", &p]);
    let mut r = rows(&got);
    r.sort();
    assert_eq!(
        r,
        vec![
            (vec!["0".into(), "2".into()], "<=".into(), "3".into()),
            (vec!["1".into(), "0".into()], "<=".into(), "2".into()),
        ]
    );
}

#[test]
fn fm_unknown_variable_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(dir.path(), "s.json", r#"{"variables":["a"],"inequalities":[],"eliminate":["b"]}"#);
    assert_eq!(twwc(&["fm", "--in", &p]).status.code(), Some(2));
}

#[test]
fn region_commands() {
    let r = run_json(&["region", "--in", fixture("additive_joint.json").to_str().unwrap()]);
    let hs = r["halfspaces"].as_array().unwrap();
    let rate_bounds = hs.iter().filter(|h| h[0].as_f64().unwrap() >= 0.0 && h[1].as_f64().unwrap() >= 0.0).count();
    assert!(rate_bounds <= 3);

    let g = twwc(&["region", "--in", fixture("gaussian_outer_unmet.json").to_str().unwrap()]);
    assert_eq!(g.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&g.stdout).unwrap();
    assert_eq!(v["meta"]["flag"], "condition_unmet");

    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(dir.path(), "bad.json", "{\"channel\": ");
    assert_eq!(twwc(&["region", "--in", &p]).status.code(), Some(2));
    assert_eq!(twwc(&["region", "--in", "/nonexistent/spec.json"]).status.code(), Some(2));
}

#[test]
fn region_csv_matches_json() {
    let f = fixture("additive_joint.json");
    let j = run_json(&["region", "--in", f.to_str().unwrap()]);
    let out = twwc(&["region", "--in", f.to_str().unwrap(), "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("R1_nats,R2_nats"));
    for (line, v) in lines.zip(j["vertices"].as_array().unwrap()) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells, vec![v[0].as_f64().unwrap(), v[1].as_f64().unwrap()]);
    }
}

#[test]
fn region_on_tensor_union_with_cost() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"channel":{"kind":"tensor","sizes":[2,2,2,2,2],
        "probs":[1,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,1, 0,0,0,0,0,0,0,1, 1,0,0,0,0,0,0,0]},
        "flavor":"individual","grid":4}"#;
    let p = write_temp(dir.path(), "t.json", body);
    let free = run_json(&["region", "--in", &p]);
    assert_eq!(free["meta"]["laws_total"], 25);
    let capped = run_json(&["region", "--in", &p, "--cost", r#"{"g1":[0,1],"g2":[0,1],"c1":0,"c2":0}"#]);
    assert_eq!(capped["meta"]["laws_admitted"], 1);
}

#[test]
fn exponent_commands() {
    let f = fixture("exponent_additive.json");
    let r = run_json(&["exponent", "--in", f.to_str().unwrap()]);
    assert_eq!(r["rows"].as_array().unwrap().len(), 99);

    let cc = fixture("exponent_cc.json");
    let exact = run_json(&["exponent", "--in", cc.to_str().unwrap(), "--s-grid", "9"]);
    let bound = run_json(&["exponent", "--in", cc.to_str().unwrap(), "--s-grid", "9", "--factor-mode", "bound"]);
    for (a, b) in exact["rows"].as_array().unwrap().iter().zip(bound["rows"].as_array().unwrap()) {
        for k in ["err", "leak_joint", "leak_m1", "leak_m2"] {
            let num = |v: &Value| v.as_f64().unwrap_or(f64::INFINITY);
            assert!(num(&a[k]) <= num(&b[k]), "{k}");
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(&f).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v.as_object_mut().unwrap().remove("rates");
    let p = write_temp(dir.path(), "e.json", &v.to_string());
    assert_eq!(twwc(&["exponent", "--in", &p]).status.code(), Some(2));
    assert_eq!(twwc(&["exponent", "--in", f.to_str().unwrap(), "--s-grid", "0.5,1.5"]).status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_guarded() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("simulate.json");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = twwc(&["simulate", "--in", f.to_str().unwrap(), "--seed", "7", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert!(v["leakage"]["joint"].as_f64().unwrap() >= v["leakage"]["m1"].as_f64().unwrap());

    let out = twwc(&["simulate", "--in", fixture("simulate_too_large.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sizing"));
}

#[test]
fn verify_commands_emit_verdicts() {
    let r = run_json(&["verify-resolvability", "--in", fixture("verify_resolvability.json").to_str().unwrap(), "--s-grid", "10"]);
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|row| row["holds"] == true));
    assert_eq!(r["realizations"], 16);

    let out = twwc(&["verify-gallager", "--in", fixture("verify_gallager.json").to_str().unwrap(), "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("s,lhs,expectation,rhs,slack,ci_half_width,holds"));
    assert_eq!(text.lines().count(), 100);
    assert!(text.lines().skip(1).all(|l| l.ends_with("true")));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("simulate.json");
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let p = dir.path().join(format!("{threads}.json"));
        let out = Command::new(env!("CARGO_BIN_EXE_twwc"))
            .args(["simulate", "--in", f.to_str().unwrap(), "--seed", "3", "--out", p.to_str().unwrap()])
            .env("TWWC_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        outputs.push(std::fs::read(p).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
