use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples")
}

fn example(name: &str) -> String {
    examples().join(name).display().to_string()
}

fn vixvol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vixvol")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = vixvol(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn norm_cdf(x: f64) -> f64 {
    // Zelen–Severo, |error| < 7.5e-8
    let t = 1.0 / (1.0 + 0.2316419 * x.abs());
    let poly = t * (0.319381530 + t * (-0.356563782 + t * (1.781477937 + t * (-1.821255978 + t * 1.330274429))));
    let tail = (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt() * poly;
    if x >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

#[test]
fn price_smoke() {
    let bergomi = example("bergomi.json");
    let out = ok(&["price", "--model", &bergomi, "--strike", "0.2", "--paths", "2000", "--n", "10"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let est = v["estimate"].as_f64().unwrap();
    assert!(est > 0.0 && est < 0.2, "{est}");
    assert!(v["std_error"].as_f64().unwrap() > 0.0);
    assert_eq!(v["n"], 10);
    assert_eq!(v["seed"], 1);
}

#[test]
fn fourier_price_for_the_modulated_model() {
    let levy = example("levy_ou.json");
    let out = ok(&["price", "--model", &levy, "--engine", "fourier", "--strike", "0.12", "--maturity", "0.1"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["estimate"].as_f64().unwrap() > 0.0);
    assert_eq!(v["std_error"].as_f64().unwrap(), 0.0);
}

#[test]
fn negative_strike_is_a_validation_error() {
    let out = vixvol(&["price", "--model", &example("bergomi.json"), "--strike", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strike"));
}

#[test]
fn missing_file_is_an_io_error() {
    let out = vixvol(&["price", "--model", "/nonexistent/model.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn malformed_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    for body in [
        r#"{"kernel": {"type": "power_law", "alpha": 0.4, "hurst": 0.1}, "curve": {"flat": -0.04}}"#,
        r#"{"kernel": {"type": "power_law", "#,
    ] {
        std::fs::write(&path, body).unwrap();
        let out = vixvol(&["price", "--model", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{body}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn single_grid_size_omits_the_slope() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let bergomi = example("bergomi.json");
    ok(&[
        "--out", out_dir, "--paths", "2000", "convergence", "--model", &bergomi, "--strike", "0.2", "--n-list", "10",
        "--reference-n", "80",
    ]);
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("n,price,std_error,abs_error_vs_reference"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("convergence.json")).unwrap()).unwrap();
    assert!(report["slope"].is_null());
}

#[test]
fn smile_csv_has_a_row_per_strike() {
    let dir = tempfile::tempdir().unwrap();
    let levy = example("levy_ou.json");
    ok(&[
        "--out", dir.path().to_str().unwrap(), "smile", "--model", &levy, "--engine", "fourier", "--maturity", "0.1",
        "--strikes", "0.10,0.11,0.12,0.13",
    ]);
    let csv = std::fs::read_to_string(dir.path().join("smile.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let vol: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(vol > 0.05 && vol < 2.0, "{row}");
    }
}

#[test]
fn toy_hedge_ratio_is_n_d1() {
    let out = ok(&["hedge", "toy", "--model", &example("bergomi.json"), "--t0", "0.5", "--strike", "0.05"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let d1 = v["d1"].as_f64().unwrap();
    let ratio = v["hedge_ratio"].as_f64().unwrap();
    assert!((ratio - norm_cdf(d1)).abs() < 1e-6, "{ratio} vs N({d1})");
}

#[test]
fn synth_then_calibrate_recovers_the_quotes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["--out", d, "synth", "--model", &example("levy_ou.json"), "--maturities", "7"]);
    let quotes = dir.path().join("quotes.csv");
    let fit_dir = dir.path().join("fit");
    ok(&[
        "--out",
        fit_dir.to_str().unwrap(),
        "calibrate",
        "--model",
        &example("levy_ou_start.json"),
        "--quotes",
        quotes.to_str().unwrap(),
        "--starts",
        "0",
    ]);
    let result: Value = serde_json::from_str(&std::fs::read_to_string(fit_dir.join("calibration.json")).unwrap()).unwrap();
    let rmse = result["fits"][0]["per_maturity_rmse"][0]["rmse"].as_f64().unwrap();
    assert!(rmse < 0.005, "{rmse}");
    assert!(fit_dir.join("calibration.txt").exists());
}

#[test]
fn bundled_quotes_match_the_example_model() {
    let bundled = std::fs::read_to_string(examples().join("quotes_levy_ou.csv")).unwrap();
    let regenerated = ok(&["synth", "--model", &example("levy_ou.json")]);
    assert_eq!(bundled, regenerated);
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let bergomi = example("bergomi.json");
    let run = |workers: &str| {
        let out = dir.path().join(workers);
        ok(&[
            "--out", out.to_str().unwrap(), "--workers", workers, "--paths", "3000", "--seed", "7", "smile", "--model",
            &bergomi, "--n", "12", "--maturity", "0.5",
        ]);
        out
    };
    let (a, b) = (run("1"), run("3"));
    for name in ["smile.csv", "smile.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let digest = |dir: &Path| -> Value {
        let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
        m["config_digest"].clone()
    };
    assert_eq!(digest(&a), digest(&b));
}
