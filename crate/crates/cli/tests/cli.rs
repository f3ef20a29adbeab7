use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mtphi"));
    c.env_remove("MTPHI_PRECISION");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mtphi-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write(name: &str, text: &str) -> PathBuf {
    let path = tmp(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Digits of a serialized `Q_p` coordinate, trailing zeros dropped.
fn digits(scalar: &Value) -> (i64, Vec<u64>) {
    let c = &scalar["pi_coeffs"][0];
    let mut d: Vec<u64> = c["digits"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
    while d.last() == Some(&0) {
        d.pop();
    }
    (c["val"].as_i64().unwrap(), d)
}

fn is_zero(scalar: &Value) -> bool {
    scalar["pi_coeffs"].as_array().unwrap().iter().all(|c| c["digits"].as_array().unwrap().iter().all(|d| d == 0))
}

#[test]
fn golden_corpus() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut seen = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let dir = entry.unwrap().path();
        let out = run(&["check", s(&dir.join("input.json"))]);
        let expected: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("expected.json")).unwrap()).unwrap();
        assert_eq!(json_of(&out), expected, "{}", dir.display());
        let valid = expected["valid"].as_bool().unwrap();
        assert_eq!(out.status.code(), Some(if valid { 0 } else { 2 }), "{}", dir.display());
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn kummer_of_p_has_eta_st_equal_to_x() {
    let k = tmp("kummer5.json");
    let out = run(&["kummer", "--q", "5/1", "--p", "5", "--precision", "20", "--branch", "0/1", "-o", s(&k)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = run(&["eta-st", s(&k)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let e = json_of(&out);
    assert_eq!(e["basis_slopes"], serde_json::json!([0, -1]));
    let lower_left = e["entries"][1][0].as_array().unwrap();
    assert_eq!(lower_left.len(), 2);
    assert!(is_zero(&lower_left[0]));
    assert_eq!(digits(&lower_left[1]), (0, vec![1]));
}

#[test]
fn ext_build_then_ext_class() {
    for (a, n) in [("0/1", "2"), ("7/2", "1"), ("-3/25", "3")] {
        let e = tmp(&format!("ext-{n}.json"));
        let out = run(&["ext-build", "--a", a, "--n", n, "--p", "5", "--precision", "12", "-o", s(&e)]);
        assert!(out.status.success(), "{}", stderr(&out));
        let out = run(&["ext-class", s(&e)]);
        assert!(out.status.success(), "{}", stderr(&out));
        let want = if a == "0/1" { "0" } else { a };
        assert_eq!(json_of(&out)["rational"], want);
    }
}

#[test]
fn baer_sum_adds_classes() {
    let (e1, e2) = (tmp("b1.json"), tmp("b2.json"));
    run(&["ext-build", "--a", "2/3", "--n", "2", "--p", "3", "--precision", "15", "-o", s(&e1)]);
    run(&["ext-build", "--a", "5", "--n", "2", "--p", "3", "--precision", "15", "-o", s(&e2)]);
    let sum = tmp("bsum.json");
    let out = run(&["baer-sum", s(&e1), s(&e2), "-o", s(&sum)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(json_of(&run(&["ext-class", s(&sum)]))["rational"], "17/3");
}

#[test]
fn crystalline_iff_unit() {
    for (q, want) in [("7", true), ("3", false), ("1/9", false)] {
        let k = tmp(&format!("cr-{}.json", q.replace('/', "_")));
        run(&["kummer", "--q", q, "--p", "3", "--precision", "10", "-o", s(&k)]);
        assert_eq!(json_of(&run(&["crystalline", s(&k)]))["crystalline"], want, "q = {q}");
    }
}

#[test]
fn psi_phi_inv_round_trip_through_files() {
    let k = tmp("rt-k.json");
    run(&["kummer", "--q", "6", "--p", "5", "--precision", "15", "-o", s(&k)]);
    let v = tmp("rt-v.json");
    assert!(run(&["psi", s(&k), "-o", s(&v)]).status.success());
    let m = tmp("rt-m.json");
    assert!(run(&["phi-inv", s(&v), "-o", s(&m)]).status.success());
    let report = json_of(&run(&["check", s(&m)]));
    assert_eq!(report["valid"], true);
    assert_eq!(report["mixed_tate"], true);
    let v2 = tmp("rt-v2.json");
    assert!(run(&["psi", s(&m), "-o", s(&v2)]).status.success());
    assert_eq!(std::fs::read_to_string(&v).unwrap(), std::fs::read_to_string(&v2).unwrap());
    let out = run(&["reconstruct-eta", s(&v)]);
    assert!(out.status.success());
    assert_eq!(json_of(&out)["matches"], true);
}

#[test]
fn lie_dims_profile() {
    let out = run(&["lie-dims", "--d", "1", "--cutoff", "4"]);
    assert_eq!(json_of(&out), serde_json::json!([1, 1, 2, 3]));
    assert_eq!(run(&["lie-dims", "--d", "1", "--cutoff", "13"]).status.code(), Some(2));
}

#[test]
fn malformed_input_reports_the_path() {
    let bad = write(
        "bad-entry.json",
        r#"{"field":{"p":5,"precision":6},"dim":2,"phi":[["1","0"],["0","oops"]],"monodromy":[["0","0"],["0","0"]],"filtration":[]}"#,
    );
    let out = run(&["check", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("$.phi[1][1]"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let truncated = write("truncated.json", r#"{"dim": 2,"#);
    assert_eq!(run(&["eta", s(&truncated)]).status.code(), Some(2));
}

#[test]
fn precision_loss_exits_with_three() {
    let big = "9094947017729282379150390625"; // 5^43
    let text = format!(
        r#"{{"field":{{"p":5,"precision":2}},"dim":2,"phi":[["1","0"],["0","1/5"]],"monodromy":[["0","0"],["0","0"]],
            "filtration":[{{"step":-1,"basis":[["1","0"],["0","1"]]}},{{"step":0,"basis":[["1/{big}","1"]]}}]}}"#
    );
    let path = write("lowprec.json", &text);
    let out = run(&["eta", s(&path)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("insufficient precision"));
}

#[test]
fn domain_errors_exit_with_four() {
    assert_eq!(run(&["arch-polylog", "--k", "2", "--z", "0.99"]).status.code(), Some(4));
    assert_eq!(run(&["kummer", "--q", "0", "--p", "5"]).status.code(), Some(4));
}

#[test]
fn archimedean_commands() {
    let h = write(
        "mths.json",
        r#"{"dim":2,"weights":[{"step":-2,"basis":[[1,0]]},{"step":0,"basis":[[1,0],[0,1]]}],
            "hodge":[{"step":-1,"basis":[[[1,0],[0,0]],[[0,0],[1,0]]]},{"step":0,"basis":[[[0.3,0.7],[1,0]]]}]}"#,
    );
    let out = json_of(&run(&["arch-d", s(&h)]));
    let ll = &out["d"][1][0];
    assert!((ll[0].as_f64().unwrap()).abs() < 1e-12);
    assert!((ll[1].as_f64().unwrap() - 1.4).abs() < 1e-12);
    assert_eq!(out["epsilon"][1][0], out["d"][1][0]);

    let li2 = json_of(&run(&["arch-polylog", "--k", "2", "--z", "0.5"]));
    assert!((li2[0].as_f64().unwrap() - 0.5822405264650125).abs() < 1e-12);
    let bd = json_of(&run(&["arch-bd", "--k", "1", "--z", "0.5", "--include-top"]));
    assert!((bd[1].as_f64().unwrap() - 4.0 * 2f64.ln()).abs() < 1e-12);
    let bd = json_of(&run(&["arch-bd", "--k", "2", "--z", "0.5"]));
    assert!(bd[0].as_f64().unwrap().abs() < 1e-12 && bd[1].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn corpus_is_deterministic() {
    let a = run(&["corpus", "--seed", "0", "--count", "25"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(json_of(&a)["ok"], true);
    let b = run(&["corpus", "--seed", "0", "--count", "25"]);
    assert_eq!(a.stdout, b.stdout);
    let empty = json_of(&run(&["corpus", "--seed", "3", "--count", "0"]));
    assert_eq!(empty["ok"], true);
    assert_eq!(empty["invariants"], serde_json::json!([]));
}

#[test]
fn precision_comes_from_the_environment() {
    let out = bin().args(["kummer", "--q", "2", "--p", "3"]).env("MTPHI_PRECISION", "7").output().unwrap();
    assert_eq!(json_of(&out)["field"]["precision"], 7);
    let out = run(&["kummer", "--q", "2", "--p", "3"]);
    assert_eq!(json_of(&out)["field"]["precision"], 20);
}

#[test]
fn field_file_overrides_the_embedded_field() {
    let k = tmp("ff-k.json");
    run(&["kummer", "--q", "3", "--p", "3", "--precision", "10", "-o", s(&k)]);
    let f = write("ff-field.json", r#"{"p":3,"precision":10,"eisenstein":[],"branch":"1/2"}"#);
    let plain = json_of(&run(&["eta-st", s(&k)]));
    let moved = json_of(&run(&["eta-st", s(&k), "--field", s(&f)]));
    // the filtration is read in the new branch, so the constant term moves
    assert_ne!(plain["entries"][1][0][0], moved["entries"][1][0][0]);
}
