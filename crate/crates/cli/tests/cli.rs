use std::fs;
use std::process::{Command, Output};

fn powerconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_powerconv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn presets_are_listed() {
    let o = powerconv(&["presets"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["square-circle-torsion", "beta-concave-source", "pucci-urysohn", "square-rearrangement"] {
        assert!(text.lines().any(|l| l == name), "{name}");
    }
}

#[test]
fn verify_writes_reports_and_sets_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = powerconv(&["verify", "geometry-suite", "--out", out]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("geometry-suite.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "geometry_suite");
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["verdict"] == "pass"));

    // an affine source is not admissible at p = 0.9
    assert_eq!(code(&powerconv(&["verify", "assumption-check", "--p", "0.9"])), 1);

    let cfg = dir.path().join("tight.cfg");
    fs::write(&cfg, "experiment = corollary42\nh = 1/16\nepsilon = 0.012\n").unwrap();
    let o = powerconv(&["verify", cfg.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&o), 2);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("name,lhs,rhs,slack,verdict\n"));
    assert!(csv.contains("norm_r=inf_equality") && csv.contains(",inconclusive"));
}

#[test]
fn usage_and_config_errors_exit_with_three() {
    assert_eq!(code(&powerconv(&["verify", "no-such-preset"])), 3);
    assert_eq!(code(&powerconv(&["verify", "geometry-suite", "--bogus"])), 3);
    assert_eq!(code(&powerconv(&["solve"])), 3);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "experiment = theorem41\np = 0.9\nh = 1/16\n").unwrap();
    let o = powerconv(&["verify", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8(o.stderr).unwrap().contains("waiver"));
    fs::write(&cfg, "experiment = theorem41\nepsilon = -1\n").unwrap();
    assert_eq!(code(&powerconv(&["verify", cfg.to_str().unwrap()])), 3);
    assert_eq!(code(&powerconv(&["geom", "triangle 3"])), 3);
}

#[test]
fn geom_reports_the_steiner_area() {
    let o = powerconv(&["geom", "square 1", "--with", "disc 1", "--m", "8"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let area = v["combination"]["area"].as_f64().unwrap();
    assert!((area - (3.0 + std::f64::consts::PI / 4.0)).abs() < 1e-9);
    assert!(v["rotation_mean_to_ball"].as_f64().unwrap() < 0.07);
}

#[test]
fn solve_convolve_rearrange_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = powerconv(&["solve", "disc 1", "--h", "1/16", "--format", "csv", "--out", out]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("u.csv")).unwrap();
    assert!(csv.starts_with("x,y,value\n") && csv.lines().count() > 700);
    assert!(fs::read_to_string(dir.path().join("u.meta")).unwrap().contains("h = 0.0625"));

    let o = powerconv(&["convolve", "square 1", "disc 1", "--h", "1/8", "--format", "csv", "--out", out]);
    assert_eq!(code(&o), 0);
    let argmax = fs::read_to_string(dir.path().join("argmax.csv")).unwrap();
    assert!(argmax.starts_with("x,y,x0,y0,x1,y1,value\n") && argmax.lines().count() > 100);

    let o = powerconv(&["rearrange", "square 1", "--h", "1/8", "--m", "4", "--format", "csv", "--out", out]);
    assert_eq!(code(&o), 0);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.starts_with("m = 4\n") && manifest.contains("mean_width_rearranged"));
    assert!(fs::read_to_string(dir.path().join("rearranged.csv")).unwrap().starts_with("x,y,value\n"));

    let o = powerconv(&["rearrange", "square 1", "--h", "1/8", "--m", "4"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!((v["max_rearranged"].as_f64().unwrap() - v["max_u"].as_f64().unwrap()).abs() < 1e-9);

    let o = powerconv(&["solve", "disc 1", "--h", "1/16", "--operator", "pucci", "--Lambda", "2"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!((v["max"].as_f64().unwrap() - 0.125).abs() < 1e-6);
    assert_eq!(v["hopf"]["pass"], true);
}
