use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use cylnorm::approxdeg::{deg_alpha, DualPolynomial, DualPolynomialJson};
use cylnorm::boolfun::BooleanFunction;
use cylnorm::certify::{check_certificate, disjointness_bound, BoundCertificate};
use cylnorm::norms::Alpha;
use cylnorm::tensors::{SignTensor, TensorJson};
use cylnorm::Limits;

fn cylnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cylnorm")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn norm_of_all_ones() {
    let dir = tempfile::tempdir().unwrap();
    let j = write(dir.path(), "j.json", r#"{"shape":[2,2],"entries":"++++"}"#);
    let out = cylnorm(&["norm", "--tensor", &j, "-q"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["value"], "1");
}

#[test]
fn disjointness_certificate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let p = path.to_str().unwrap();
    let out = cylnorm(&["certify-disj", "--n", "1048576", "--k", "2", "-o", p, "-q"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let cert: BoundCertificate = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let direct = disjointness_bound(&1048576.into(), 2).unwrap();
    assert_eq!(cert, direct);

    let check = cylnorm(&["check", "--certificate", p, "-q"]);
    assert_eq!(check.status.code(), Some(0));
    assert_eq!(json(&check)["valid"], true);

    let mut tampered = cert.clone();
    tampered.steps[0].lhs.value = Some(cylnorm::certify::Expr::int(2_000_000));
    fs::write(&path, serde_json::to_string(&tampered).unwrap()).unwrap();
    let check = cylnorm(&["check", "--certificate", p, "-q"]);
    assert_eq!(check.status.code(), Some(6));
    assert_eq!(json(&check)["valid"], false);
    assert!(!check_certificate(&tampered).valid);
}

#[test]
fn adeg_matches_library() {
    let out = cylnorm(&["adeg", "--fn", "OR", "--m", "3", "--alpha", "3", "-q"]);
    assert_eq!(out.status.code(), Some(0));
    let lim = Limits::default();
    let f = BooleanFunction::or(3, &lim).unwrap();
    let d = deg_alpha(&f, &Alpha::int(3), &lim).unwrap();
    assert_eq!(json(&out)["degree"], d);
}

#[test]
fn dual_polynomial_file_reparses() {
    let out = cylnorm(&["dualpoly", "--fn", "OR", "--m", "2", "--alpha", "inf", "-q"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["verification"]["unit_l1"].as_bool().unwrap());
    let dp: DualPolynomialJson = serde_json::from_value(v["dual_polynomial"].clone()).unwrap();
    let parsed = DualPolynomial::from_json(&dp).unwrap();
    assert_eq!(serde_json::to_value(parsed.to_json()).unwrap(), v["dual_polynomial"]);
}

#[test]
fn mu_alpha_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", r#"{"shape":[2,2],"entries":"+++-"}"#);
    let out = cylnorm(&["mu-alpha", "--tensor", &h, "--alpha", "2", "--method", "both", "-q"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["primal"]["value"], v["dual"]["value"]);
}

#[test]
fn pattern_report_and_tensor_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"k":2,"m":1,"M":2,"phi":{"name":"OR","m":1},"scale":"1"}"#);
    let t = dir.path().join("t.json");
    let out = cylnorm(&["pattern", "--spec", &spec, "--tensor-out", t.to_str().unwrap(), "-q"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["size"], 8);
    assert_eq!(v["size_formula_holds"], true);
    let tj: TensorJson = serde_json::from_str(&fs::read_to_string(&t).unwrap()).unwrap();
    let s = SignTensor::from_json(&tj, &Limits::default()).unwrap();
    assert_eq!(s.shape().dims(), &[4, 2]);
}

#[test]
fn hadamard_and_embedding() {
    let out = cylnorm(&["hadamard", "--sylvester", "1", "-q"]);
    assert_eq!(out.status.code(), Some(0));
    let cert: BoundCertificate = serde_json::from_value(json(&out)).unwrap();
    assert!(check_certificate(&cert).valid);
    assert_eq!(cert.final_bound().unwrap(), &cylnorm::certify::Expr::int(2));

    let out = cylnorm(&["embed-disj", "--k", "2", "--m", "2", "--M", "2", "-q"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["matches_or"], true);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let j = write(dir.path(), "j.json", r#"{"shape":[2,2],"entries":"++++"}"#);
    assert_eq!(cylnorm(&["norm"]).status.code(), Some(2));
    assert_eq!(cylnorm(&["mu-alpha", "--tensor", &j, "--alpha", "1/2", "-q"]).status.code(), Some(3));
    let bad = write(dir.path(), "bad.json", r#"{"shape":[2,2],"entries":"+++"}"#);
    assert_eq!(cylnorm(&["norm", "--tensor", &bad, "-q"]).status.code(), Some(3));
    assert_eq!(cylnorm(&["hadamard", "--tensor", &j, "-q"]).status.code(), Some(3));
    assert_eq!(cylnorm(&["norm", "--tensor", &j, "--max-tensor-size", "2", "-q"]).status.code(), Some(4));
    let cond = cylnorm(&["certify-degree", "--fn", "XOR", "--m", "2", "--k", "2", "--M", "3", "--alpha", "2", "--alpha0", "3", "-q"]);
    assert_eq!(cond.status.code(), Some(5));
    assert_eq!(cylnorm(&["norm", "--tensor", "/nonexistent/x.json", "-q"]).status.code(), Some(1));
}

#[test]
fn conversions_from_the_command_line() {
    let out = cylnorm(&["hadamard", "--sylvester", "1", "--conversion", "nondeterministic", "-q"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["conclusion"]["vacuous"], true);
    let out = cylnorm(&["hadamard", "--sylvester", "1", "--conversion", "randomized", "--epsilon", "1/2", "-q"]);
    assert_eq!(out.status.code(), Some(3));
}
