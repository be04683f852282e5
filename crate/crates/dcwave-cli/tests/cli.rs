use serde_json::Value;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn dcwave(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcwave"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("spawn dcwave")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn eval_matches_the_spherical_bessel_reduction() {
    let dir = TempDir::new().unwrap();
    let o = dcwave(dir.path(), &["eval", "--k", "1", "--nu", "0", "--rho", "2.0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv_rows(&dir.path().join("eval.csv"));
    assert_eq!(h, ["rho", "F", "G", "j0", "j1", "method_used", "est_error"]);
    let x = 2.0f64;
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    let f: f64 = rows[0][col(&h, "F")].parse().unwrap();
    let g: f64 = rows[0][col(&h, "G")].parse().unwrap();
    assert!((f - FRAC_1_SQRT_2 * j1).abs() < 1e-12);
    assert!((g - FRAC_1_SQRT_2 * j0).abs() < 1e-12);
}

#[test]
fn csv_numbers_carry_seventeen_significant_digits() {
    let dir = TempDir::new().unwrap();
    let o = dcwave(dir.path(), &["eval", "--k", "-2", "--nu", "0.3", "--rho-min", "0.5", "--rho-max", "50", "--points", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv_rows(&dir.path().join("eval.csv"));
    assert_eq!(rows.len(), 5);
    for r in &rows {
        for name in ["rho", "F", "G", "j0", "j1"] {
            let s = &r[col(&h, name)];
            let mantissa = s.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.replace('.', "").len(), 17, "{s}");
        }
    }
}

#[test]
fn invalid_parameters_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["eval", "--k", "1", "--nu", "1.5"][..],
        &["eval", "--k", "1", "--points", "0"],
        &["eval", "--k", "0"],
        &["eval", "--k", "1", "--method", "magic"],
        &["eval", "--nu", "0.2"],
        &["verify-envelope", "--k-max", "0"],
        &["saddle-dump", "--gamma", "31", "--rho", "10"],
        &["evolve"],
        &["strichartz", "--q", "4", "--unit-frequency"],
        &["no-such-command"],
    ] {
        let o = dcwave(dir.path(), args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn config_file_is_overridden_by_flags_and_echoed() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"eval": {"k": 2, "nu": 0.3, "rho": 1.5}}"#).unwrap();
    let o = dcwave(dir.path(), &["--config", cfg.to_str().unwrap(), "eval", "--nu", "-0.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(&dir.path().join("eval.json"));
    assert_eq!(j["config"]["k"], 2);
    assert_eq!(j["config"]["nu"], -0.5);
    assert_eq!(j["config"]["rho"][0], 1.5);
    assert_eq!(j["versions"]["dcwave"], "0.1.0");

    fs::write(&cfg, r#"{"eval": {"k": 2, "typo": 1}}"#).unwrap();
    let o = dcwave(dir.path(), &["--config", cfg.to_str().unwrap(), "eval"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn output_directory_defaults_to_the_environment_variable() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dcwave"))
        .env("DCWAVE_OUT_DIR", dir.path())
        .args(["eval", "--k", "3", "--rho", "7"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("eval.csv").exists());
}

#[test]
fn saddle_dump_cases_and_saddle_locations() {
    let dir = TempDir::new().unwrap();
    // q = (γ − 1)/ρ = 1: one coalesced saddle at −i.
    let o = dcwave(dir.path(), &["saddle-dump", "--gamma", "11", "--rho", "10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(&dir.path().join("saddle.json"));
    assert_eq!(j["saddles"]["coalesced"], true);
    let pts = j["saddles"]["points"].as_array().unwrap();
    assert_eq!(pts.len(), 1);
    assert!(pts[0][0].as_f64().unwrap().abs() < 1e-12);
    assert!((pts[0][1].as_f64().unwrap() + 1.0).abs() < 1e-12);

    // q = 0.6: the contour passes near ±0.8 − 0.6i.
    let o = dcwave(dir.path(), &["saddle-dump", "--gamma", "7", "--rho", "10", "--points", "400"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv_rows(&dir.path().join("saddle.csv"));
    let (re, im) = (col(&h, "re_z"), col(&h, "im_z"));
    for target in [(0.8, -0.6), (-0.8, -0.6)] {
        let closest = rows
            .iter()
            .map(|r| {
                let x: f64 = r[re].parse().unwrap();
                let y: f64 = r[im].parse().unwrap();
                (x - target.0).hypot(y - target.1)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(closest < 0.02, "{target:?}: {closest}");
    }

    // q = 1.02 is inside the coalescence window above 1.
    let o = dcwave(dir.path(), &["saddle-dump", "--gamma", "11.2", "--rho", "10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv_rows(&dir.path().join("saddle.csv"));
    assert!(rows.iter().all(|r| r[col(&h, "case")] == "modified_1b"));
}

fn descriptor(dir: &Path) -> String {
    let p = dir.join("data.json");
    fs::write(
        &p,
        r#"{"nu": 0.3, "channels": [
            {"k": 1, "m": 0.5, "profile": {"type": "gaussian", "center": 3.0, "width": 0.75,
                                           "amplitude": [[1.0, 0.0], [0.0, 0.5]]}},
            {"k": -2, "m": -1.5, "profile": {"type": "gaussian", "center": 5.0, "width": 1.0}},
            {"k": 2, "m": 1.5, "profile": {"type": "spike", "energy": 1.7, "positive": false}}
        ]}"#,
    )
    .unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn hankel_reports_isometry_and_roundtrip() {
    let dir = TempDir::new().unwrap();
    let d = descriptor(dir.path());
    let o = dcwave(dir.path(), &["hankel", "--descriptor", &d]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(&dir.path().join("hankel.json"));
    let ch = j["channels"].as_array().unwrap();
    assert_eq!(ch.len(), 3);
    for c in &ch[..2] {
        assert!(c["isometry_error"].as_f64().unwrap() < 1e-3);
        assert!(c["roundtrip_error"].as_f64().unwrap() < 1e-3);
    }
    assert!(ch[2]["roundtrip_error"].is_null());
    assert!(ch[2]["norm_e"].as_f64().unwrap() > 0.0);
    assert_eq!(j["config"]["descriptor"]["nu"], 0.3);
    assert_eq!(j["config"]["grids"]["r_points"], 2048);
}

#[test]
fn evolve_at_time_zero_reproduces_the_input() {
    let dir = TempDir::new().unwrap();
    let d = descriptor(dir.path());
    let o = dcwave(dir.path(), &["evolve", "--descriptor", &d, "--t", "0,3.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(&dir.path().join("evolve.json"));
    for f in j["frames"].as_array().unwrap() {
        assert!(f["norm_change"].as_f64().unwrap() < 1e-3);
        if f["t"] == 0.0 {
            assert!(f["deviation_from_initial"].as_f64().unwrap() < 1e-3, "{f}");
        }
    }
    let (h, rows) = csv_rows(&dir.path().join("evolve.csv"));
    assert_eq!(h, ["t", "k", "m", "r", "plus_re", "plus_im", "minus_re", "minus_im"]);
    assert_eq!(rows.len(), 2 * 3 * 2048);
}

#[test]
fn malformed_descriptors_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.json");
    for text in [
        "not json",
        r#"{"nu": 0.3, "channels": []}"#,
        r#"{"nu": 0.3, "channels": [{"k": 1, "m": 1.5, "profile": {"type": "spike", "energy": 1.0}}]}"#,
        r#"{"nu": 2.0, "channels": [{"k": 1, "m": 0.5, "profile": {"type": "spike", "energy": 1.0}}]}"#,
        r#"{"nu": 0.0, "channels": [{"k": 1, "m": 0.5, "profile": {"type": "square"}}]}"#,
    ] {
        fs::write(&p, text).unwrap();
        let o = dcwave(dir.path(), &["hankel", "--descriptor", p.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{text}: {}", stderr(&o));
    }
}

#[test]
fn envelope_fit_and_verification_failure() {
    let dir = TempDir::new().unwrap();
    let o = dcwave(dir.path(), &["verify-envelope", "--k-max", "3", "--nu", "0,0.7", "--points", "30"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(&dir.path().join("envelope.json"));
    assert_eq!(j["holds"], true);
    assert!(j["constants"]["d"].as_f64().unwrap() >= 0.0);
    let (h, rows) = csv_rows(&dir.path().join("envelope.csv"));
    assert_eq!(h, ["k", "nu", "rho", "regime", "j0", "j1", "bound", "ratio"]);
    assert_eq!(rows.len(), 6 * 2 * 30);

    // Constants that are far too small fail with the worst sample named.
    let o = dcwave(dir.path(), &["verify-envelope", "--k-max", "2", "--nu", "0", "--points", "10", "--c", "1e-6", "--d", "0"]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("worst ratio"));
}

#[test]
fn envelope_middle_regime_gives_the_coalescence_exponent() {
    let dir = TempDir::new().unwrap();
    let o = dcwave(dir.path(), &["verify-envelope", "--k", "8,16,32,64", "--nu", "0", "--rho-min", "4", "--rho-max", "128", "--points", "12"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(&dir.path().join("envelope.json"));
    let s = j["coalescence_slope"]["slope"].as_f64().unwrap();
    assert!((s + 5.0 / 6.0).abs() <= 0.05, "{s}");
}

#[test]
fn dyadic_slopes_for_a_small_scan() {
    let dir = TempDir::new().unwrap();
    let o = dcwave(dir.path(), &["verify-dyadic", "--k", "2,-3", "--nu", "0.7", "--j-max", "8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(&dir.path().join("dyadic.json"));
    assert_eq!(j["pass"], true);
    for c in j["channels"].as_array().unwrap() {
        let g = c["gamma"].as_f64().unwrap();
        assert!((c["small_slopes"][0].as_f64().unwrap() - (g + 0.5)).abs() < 0.05);
        assert!((c["large_slopes"][0].as_f64().unwrap() - 0.5).abs() < 0.05);
    }
    let (_, rows) = csv_rows(&dir.path().join("dyadic.csv"));
    assert_eq!(rows.len(), 2 * 19);
}

#[test]
fn strichartz_q4_is_a_named_divergence() {
    let dir = TempDir::new().unwrap();
    let o = dcwave(dir.path(), &["strichartz", "--q", "4"]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("2/q - 1/2 < 0"), "{}", stderr(&o));
}

#[test]
fn strichartz_outputs_are_deterministic_for_a_seed() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = [
        "strichartz", "--nu", "0.5", "--q", "10", "--k-cutoffs", "2", "--t-windows", "8",
        "--frequencies", "1", "--trials", "2", "--seed", "11",
    ];
    for d in [&a, &b] {
        let o = dcwave(d.path(), &args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["strichartz.csv", "strichartz.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let j = json(&a.path().join("strichartz.json"));
    assert_eq!(j["config"]["scan"]["seed"], 11);
    let r = j["summary"][0]["max_ratios"][0]["max_ratio"].as_f64().unwrap();
    assert!(r.is_finite() && r > 0.0);
    let (h, rows) = csv_rows(&a.path().join("strichartz.csv"));
    assert_eq!(&h[..3], ["q", "s", "trial"]);
    assert_eq!(rows.len(), 2);
}
