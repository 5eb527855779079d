use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const MODELS: [&str; 3] = ["srw", "king", "kreweras"];

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(format!("{name}.model"))
}

fn qh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qh")).args(args).env_remove("QH_THREADS").output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = qh(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output, key: &str) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().find(|l| l.contains(&format!("\"{key}\""))).unwrap_or_else(|| panic!("no {key} in {text}"));
    serde_json::from_str::<Value>(line).unwrap()[key].clone()
}

fn csv_cells(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn validate_accepts_bundled_models() {
    for m in MODELS {
        let v = ok_json(&["validate", "--model", model(m).to_str().unwrap()]);
        assert_eq!(v["valid"], true);
        assert_eq!(v["model_hash"].as_str().unwrap().len(), 64);
    }
    let v = ok_json(&["validate", "--model", model("kreweras").to_str().unwrap()]);
    assert_eq!(v["p11"], "1/3");
    assert!((v["covariance"]["theta"].as_f64().unwrap() - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
}

#[test]
fn validate_rejects_drift() {
    let out = qh(&["validate", "--model", model("drifted").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert_eq!(stderr_json(&out, "error")["kind"], "NonzeroDrift");
}

#[test]
fn reducible_model_needs_flag() {
    let p = model("big_jumps");
    let out = qh(&["validate", "--model", p.to_str().unwrap()]);
    assert_eq!(stderr_json(&out, "error")["kind"], "Reducible");
    ok_json(&["validate", "--model", p.to_str().unwrap(), "--allow-reducible"]);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(qh(&["harmonic", "--window", "3"]).status.code(), Some(2));
    assert_eq!(qh(&["nonsense"]).status.code(), Some(2));
    let p = model("srw");
    assert_eq!(qh(&["harmonic", "--model", p.to_str().unwrap(), "--field", "complex"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_qh"))
        .args(["validate", "--model", p.to_str().unwrap()])
        .env("QH_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_is_a_domain_error() {
    let out = qh(&["validate", "--model", "/nonexistent/x.model"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out, "error")["kind"], "IoError");
}

#[test]
fn curve_on_bundled_models() {
    for (m, theta) in [("srw", 0.5), ("king", 0.5), ("kreweras", 2.0 / 3.0)] {
        let v = ok_json(&["curve", "--model", model(m).to_str().unwrap(), "--points", "256", "--samples", "200"]);
        assert!((v["theta"].as_f64().unwrap() - theta * std::f64::consts::PI).abs() < 1e-12);
        assert!(v["angle_error"].as_f64().unwrap() < 1e-3);
        assert_eq!(v["points"].as_array().unwrap().len(), 256);
        assert_eq!(v["self_intersections"], 0);
    }
}

#[test]
fn map_on_bundled_models() {
    let v = ok_json(&["map", "--model", model("srw").to_str().unwrap(), "--order", "4"]);
    assert_eq!(v["coefficients"], serde_json::json!(["0/1", "1/1", "2/1", "3/1", "4/1"]));
    let v = ok_json(&["map", "--model", model("king").to_str().unwrap(), "--order", "2"]);
    assert_eq!(v["report"]["backend"], "explicit");
    assert_eq!(v["coefficients"][0], "1/8");
    let v = ok_json(&["map", "--model", model("kreweras").to_str().unwrap(), "--order", "3"]);
    assert_eq!(v["coefficients"], serde_json::json!(["1/3", "9/8", "189/128", "1809/1024"]));
    let out = qh(&["map", "--model", model("srw").to_str().unwrap(), "--backend", "smallstep", "--format", "csv", "--order", "3"]);
    let rows = csv_cells(&String::from_utf8(out.stdout.clone()).unwrap());
    assert!((rows[1][1].parse::<f64>().unwrap() - 8.0).abs() < 1e-9);
    let out = qh(&["map", "--model", model("srw").to_str().unwrap(), "--backend", "bipolar"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out, "error")["kind"], "NotBipolarFamily");
}

#[test]
fn harmonic_srw_table() {
    let out = qh(&["harmonic", "--model", model("srw").to_str().unwrap(), "--F", "t", "--window", "20", "--field", "rational"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_cells(&String::from_utf8(out.stdout.clone()).unwrap());
    assert_eq!(rows.len(), 400);
    for r in rows {
        let (i, j): (i64, i64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        assert_eq!((r[2].parse::<i64>().unwrap(), r[3].as_str()), (-4 * i * j, "1"));
    }
    let p = stderr_json(&out, "provenance");
    assert_eq!(p["backend"], "explicit");
    assert_eq!(p["field"], "rational");
    assert_eq!(p["window"], 20);
}

#[test]
fn harmonic_writes_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    for m in MODELS {
        let a = dir.path().join(format!("{m}-a.csv"));
        let b = dir.path().join(format!("{m}-b.csv"));
        for p in [&a, &b] {
            let out = qh(&["harmonic", "--model", model(m).to_str().unwrap(), "--F", "1,-1/2,3", "--window", "9", "--out", p.to_str().unwrap()]);
            assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let prov: Value = serde_json::from_slice(&std::fs::read(dir.path().join(format!("{m}-a.csv.provenance.json"))).unwrap()).unwrap();
        assert_eq!(prov["command"], "harmonic");
        assert_eq!(prov["spec"], "phi[1/1,-1/2,3/1]");
        assert!(prov["normalization"].is_string());
    }
}

#[test]
fn harmonic_float_field() {
    let out = qh(&["harmonic", "--model", model("kreweras").to_str().unwrap(), "--window", "6", "--field", "float"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("i,j,value\n1,1,-2"));
    // A long float fill is refused unless the stability estimate is waived.
    let out = qh(&["harmonic", "--model", model("srw").to_str().unwrap(), "--window", "40", "--field", "float"]);
    assert_eq!(stderr_json(&out, "error")["kind"], "Unstable");
    let out = qh(&["harmonic", "--model", model("srw").to_str().unwrap(), "--window", "40", "--field", "float", "--no-stability-check"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_on_bundled_models() {
    for m in MODELS {
        for f in ["P1", "P2", "P3"] {
            let v = ok_json(&["verify", "--model", model(m).to_str().unwrap(), "--F", f, "--window", "12"]);
            assert_eq!(v["pass"], true);
            assert_eq!(v["laplacian"]["exact_zero"], true);
            assert_eq!(v["vanishing"]["pass"], true);
        }
    }
    let v = ok_json(&["verify", "--model", model("king").to_str().unwrap(), "--F", "t", "--window", "12", "--cross-check"]);
    assert_eq!(v["pass"], true);
}

#[test]
fn verify_reports_boundary_condition() {
    let out = qh(&["verify", "--model", model("srw").to_str().unwrap(), "--window", "8", "--order", "100", "--exclusion", "0.5"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let max = v["boundary_condition"]["max"].as_f64().unwrap();
    assert_eq!(v["pass"], max <= 1e-8);
    assert_eq!(out.status.code(), Some(if max <= 1e-8 { 0 } else { 1 }));
}

#[test]
fn interpolate_on_bundled_models() {
    let dir = tempfile::tempdir().unwrap();
    for m in MODELS {
        let table = dir.path().join(format!("{m}.csv"));
        let out = qh(&["harmonic", "--model", model(m).to_str().unwrap(), "--F", "2,0,-1/3", "--window", "6", "--out", table.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let rows = csv_cells(&std::fs::read_to_string(&table).unwrap());
        let (mut bx, mut by) = (String::from("i,value\n"), String::from("j,value\n"));
        for r in &rows {
            let v = format!("{}/{}", r[2], r[3]);
            if r[1] == "1" {
                bx.push_str(&format!("{},{v}\n", r[0]));
            }
            if r[0] == "1" {
                by.push_str(&format!("{},{v}\n", r[1]));
            }
        }
        let (px, py) = (dir.path().join(format!("{m}-x.csv")), dir.path().join(format!("{m}-y.csv")));
        std::fs::write(&px, bx).unwrap();
        std::fs::write(&py, by).unwrap();
        let v = ok_json(&[
            "interpolate",
            "--model",
            model(m).to_str().unwrap(),
            "--boundary",
            px.to_str().unwrap(),
            "--boundary-y",
            py.to_str().unwrap(),
            "--n",
            "3",
        ]);
        assert_eq!(v["coefficients"], serde_json::json!(["2/1", "0/1", "-1/3"]), "{m}");
        assert_eq!(v["support"], serde_json::json!([1, 3]));
    }
}

#[test]
fn interpolate_rejects_bad_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("gap.csv");
    std::fs::write(&p, "i,value\n1,3\n3,4\n").unwrap();
    let out = qh(&["interpolate", "--model", model("srw").to_str().unwrap(), "--boundary", p.to_str().unwrap(), "--n", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out, "error")["kind"], "ParseError");
}

#[test]
fn nodal_srw_second_power_has_zero_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("h2.pgm");
    let csv = dir.path().join("h2.csv");
    let v = ok_json(&["nodal", "--model", model("srw").to_str().unwrap(), "--F", "t^2", "--window", "100", "--pgm", pgm.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert!(v["negative_count"].as_u64().unwrap() > 0);
    let img = std::fs::read(&pgm).unwrap();
    let header = b"P5\n100 100\n255\n";
    assert!(img.starts_with(header));
    let px = &img[header.len()..];
    assert_eq!(px.len(), 10_000);
    for k in 0..100 {
        assert_eq!(px[k * 100 + k], 128);
    }
    // Antisymmetry: opposite colours across the diagonal.
    assert_eq!(px[100 * 5 + 2] as u16 + px[100 * 2 + 5] as u16, 255);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("i,j,sign\n1,1,0\n"));
    assert!(dir.path().join("h2.pgm.provenance.json").exists());
}

#[test]
fn nodal_on_other_models() {
    let dir = tempfile::tempdir().unwrap();
    for m in ["king", "kreweras"] {
        let pgm = dir.path().join(format!("{m}.pgm"));
        let v = ok_json(&["nodal", "--model", model(m).to_str().unwrap(), "--F", "P1", "--window", "30", "--pgm", pgm.to_str().unwrap()]);
        assert_eq!(v["negative_count"], 0);
        assert_eq!(v["all_positive"], true);
    }
}

#[test]
fn asymp_on_bundled_models() {
    for (m, w, ms) in [("srw", "150", "5,25"), ("king", "150", "5,25"), ("kreweras", "60", "4,10")] {
        let v = ok_json(&["asymp", "--model", model(m).to_str().unwrap(), "--n", "1", "--window", w, "--m", ms]);
        let rows = v["scaling"]["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(v["scaling"]["monotone"], true, "{m}");
        assert!(v["scaling"]["c_estimate"].as_f64().unwrap().is_finite());
    }
    let out = qh(&["asymp", "--model", model("srw").to_str().unwrap(), "--window", "20", "--m", "50"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out, "error")["kind"], "WindowTooSmall");
}

#[test]
fn thread_count_is_honoured() {
    let out = Command::new(env!("CARGO_BIN_EXE_qh"))
        .args(["harmonic", "--model", model("king").to_str().unwrap(), "--window", "5"])
        .env("QH_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stderr_json(&out, "provenance")["threads"], 3);
}
