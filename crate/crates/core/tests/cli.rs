use std::process::Command;

use serde_json::Value;

fn gromolab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gromolab"))
        .args(args)
        .env("GROMOLAB_THREADS", "2")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn delta_on_tree_is_zero() {
    let (code, out, err) = gromolab(&["delta", "--space", "tree:free:2", "--samples", "300", "--seed", "3"]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert_eq!(v["result"]["delta"], 0.0);
    assert_eq!(v["result"]["quadruple_count"], 300);
    assert_eq!(v["config"]["global"]["seed"], 3);
    assert!(err.contains("four-point delta"));
}

#[test]
fn delta_half_plane_below_ln3() {
    let (code, out, _) = gromolab(&["delta", "--space", "hplane", "--samples", "2000", "--box", "-2,2,0.1,4"]);
    assert_eq!(code, 0);
    let d = json(&out)["result"]["delta"].as_f64().unwrap();
    assert!(d > 0.0 && d <= 3f64.ln() + 1e-9);
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["delta", "--space", "hplane", "--samples", "500", "--seed", "11"];
    let a = gromolab(&args);
    let b = gromolab(&args);
    assert_eq!(a.1, b.1);
    let c = gromolab(&["delta", "--space", "hplane", "--samples", "500", "--seed", "12"]);
    assert_ne!(a.1, c.1);
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["oracle", "--a", "1,2;0,1", "--b", "1,0;2,1", "--maxlen", "8"];
    let one = Command::new(env!("CARGO_BIN_EXE_gromolab")).args(args).env("GROMOLAB_THREADS", "1").output().unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_gromolab")).args(args).env("GROMOLAB_THREADS", "4").output().unwrap();
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn growth_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    let (code, out, _) = gromolab(&["growth", "--group", "abelian:2", "--rmax", "5", "--csv", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().nth(6), Some("5,61"));
    assert_eq!(json(&out)["result"]["profile"]["rows"][5][1], 61);
}

#[test]
fn output_flag_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let (code, out, _) = gromolab(&["classify", "--matrix", "0,-1;1,0", "--output", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let v = json(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(v["result"]["class"], "Elliptic");
}

#[test]
fn classify_parabolic_and_errors() {
    let (code, out, _) = gromolab(&["classify", "--matrix", "1,1;0,1"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["result"]["class"], "Parabolic");
    assert_eq!(gromolab(&["classify", "--matrix", "1,2;2,1"]).0, 2);
    assert_eq!(gromolab(&["classify", "--matrix", "x"]).0, 2);
    assert_eq!(gromolab(&["nonsense"]).0, 2);
}

#[test]
fn length_bracket_contains_closed_form() {
    let (code, out, _) = gromolab(&["length", "--matrix", "3,1;2,1", "--base", "0.2,0.7", "--nmax", "512"]);
    assert_eq!(code, 0);
    let r = &json(&out)["result"];
    let exact = r["closed_form"].as_f64().unwrap();
    assert!(r["bracket"]["lo"].as_f64().unwrap() <= exact + 1e-9);
    assert!(r["bracket"]["hi"].as_f64().unwrap() >= exact - 1e-9);
}

#[test]
fn margulis_report() {
    let (code, out, err) = gromolab(&["margulis", "--matrix", "3,0;0,0.333333333333333333", "--R", "3", "--inner", "2.5", "--base", "0,1"]);
    assert_eq!(code, 0, "{out}{err}");
    let r = &json(&out)["result"];
    assert_eq!(r["member"], true);
    assert_eq!(r["k_attained"], 1);
}

#[test]
fn pingpong_and_oracle_exit_codes() {
    let (code, out, _) = gromolab(&["pingpong", "--a", "1,4;0,1", "--b", "1,0;4,1", "--mode", "schottky", "--base", "0,1"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["result"]["verdict"]["status"], "PASS-range");
    let (code, out, _) = gromolab(&["oracle", "--a", "1,1;0,1", "--b", "1,0;-1,1", "--maxlen", "6"]);
    assert_eq!(code, 3);
    assert_eq!(json(&out)["result"]["status"], "RelationFound");
    let (code, _, _) = gromolab(&["oracle", "--a", "1,1;0,1", "--b", "1,0;1,1", "--maxlen", "8", "--mode", "semigroup"]);
    assert_eq!(code, 0);
}

#[test]
fn bounds_formulas_and_checks() {
    let (code, out, _) = gromolab(&["bounds", "--name", "entropy_lower_group", "--params", "delta=1"]);
    assert_eq!(code, 0);
    assert!(json(&out)["result"]["values"].is_object() || json(&out)["result"]["values"].is_number());
    let (code, out, _) = gromolab(&["bounds", "--name", "collar", "--params", "delta=1,alpha=20,H=1,sys=0.5,d=100"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["result"]["inputs"]["d"], 100.0);
    let (code, _, _) = gromolab(&["bounds", "--name", "collar", "--params", "delta=1,alpha=20,H=1,sys=0.5,d=0"]);
    assert_eq!(code, 1);
    assert_eq!(gromolab(&["bounds", "--name", "collar", "--params", "d=1"]).0, 2);
    assert_eq!(gromolab(&["bounds", "--name", "entropy_lower_group", "--params", "delta"]).0, 2);
}
