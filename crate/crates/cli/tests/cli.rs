//! End-to-end checks of the binary: exit codes, cache reuse across processes,
//! output formats and sidecars.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rabi-lab")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rabi-cli-{}-{}", name, std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn spectrum_matches_closed_form_in_decoupled_limit() {
    let dir = scratch("spectrum");
    let status = Command::new(bin())
        .args(["spectrum", "--g", "0", "--lambda", "0", "--ntr", "5"])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let text = read(&dir.join("spectrum.csv"));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "index,energy,parity_expectation");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let energy: f64 = first[1].parse().unwrap();
    assert!((energy + 0.5).abs() < 1e-12, "ground level should be -ω/2");
    // sidecar exists and round-trips as JSON
    let meta = read(&dir.join("spectrum.csv.meta.json"));
    let v: serde_json::Value = serde_json::from_str(&meta).unwrap();
    assert_eq!(v["experiment"], "spectrum");
    assert_eq!(v["config"]["model"]["n_tr"], 5);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn invalid_config_exits_with_code_2() {
    let dir = scratch("badconfig");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, r#"{"version": 1, "model": {"omega": "not a number"}}"#).unwrap();
    let status = Command::new(bin())
        .args(["spectrum", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // invalid parameter values are configuration errors too
    let status = Command::new(bin())
        .args(["spectrum", "--g", "-3", "--ntr", "4"])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn numerical_failure_exits_with_code_3() {
    let dir = scratch("numfail");
    // window too sparse for spacing statistics
    let status = Command::new(bin())
        .args([
            "levelstats", "--g", "0.5", "--lambda", "0.0", "--ntr", "8", "--emin", "0.0",
            "--emax", "0.4",
        ])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn resource_cap_exits_with_code_4() {
    let dir = scratch("cap");
    let cfg = dir.join("cap.json");
    std::fs::create_dir_all(&dir).unwrap();
    // ground-state convergence at g = 6 needs n_tr ~ 100, above this cap
    std::fs::write(
        &cfg,
        r#"{
  "version": 1,
  "model": {"omega": 1.0, "g": 6.0, "lambda": 0.0, "n_tr": 8},
  "ntr_auto_tol": 1e-10,
  "ntr_cap": 32
}"#,
    )
    .unwrap();
    let status = Command::new(bin())
        .args(["spectrum", "--config"])
        .arg(&cfg)
        .arg("--ntr")
        .arg("auto")
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn cache_is_reused_across_processes() {
    let dir = scratch("cache");
    let cache = dir.join("cache");
    for _ in 0..2 {
        let status = Command::new(bin())
            .args(["spectrum", "--g", "1.5", "--lambda", "0.3", "--ntr", "40"])
            .arg("--out")
            .arg(&dir)
            .arg("--cache")
            .arg(&cache)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let meta = read(&dir.join("spectrum.csv.meta.json"));
    let v: serde_json::Value = serde_json::from_str(&meta).unwrap();
    assert_eq!(v["cache_computes"], 0, "second run must reuse the cached decomposition");
    assert_eq!(v["cache_hits"], 1);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn wigner_binary_layout_matches_header() {
    let dir = scratch("wigner");
    let status = Command::new(bin())
        .args([
            "wigner", "--g", "0.5", "--lambda", "0.2", "--ntr", "16", "--g0", "0.1", "--time",
            "10", "--half-width", "6", "--points", "41", "--format", "binary",
        ])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let header: serde_json::Value =
        serde_json::from_str(&read(&dir.join("wigner_header.json"))).unwrap();
    let nx = header["x"]["points"].as_u64().unwrap() as usize;
    let np = header["p"]["points"].as_u64().unwrap() as usize;
    let bytes = std::fs::read(dir.join("wigner.w64")).unwrap();
    assert_eq!(bytes.len(), nx * np * 8);
    // values are finite and the normalization recorded in the summary is ~1
    let summary = read(&dir.join("wigner_summary.csv"));
    let row: Vec<f64> = summary
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((row[0] - 1.0).abs() < 1e-4, "normalization {}", row[0]);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn quench_stats_reports_thermalization_discrepancy() {
    let dir = scratch("quench");
    let status = Command::new(bin())
        .args([
            "quench-stats", "--g", "1.5", "--lambda", "0.4", "--ntr", "48", "--g0", "0.1",
            "--samples", "400", "--tmax", "1e4", "--seed", "9",
        ])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let text = read(&dir.join("quench_summary.csv"));
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let row: Vec<f64> =
        text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    // the discrepancy column carries the microcanonical comparison; both
    // sides must be finite and the identity mean - mc = discrepancy holds
    assert!(col("long_time_mean").is_finite());
    assert!(col("microcanonical_mean").is_finite());
    assert!(
        (col("long_time_mean") - col("microcanonical_mean") - col("thermalization_discrepancy"))
            .abs()
            < 1e-12
    );
    // Γ(l) sums to one
    let gamma = read(&dir.join("quench_gamma.csv"));
    let total: f64 = gamma.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-10);
    let _ = std::fs::remove_dir_all(&dir);
}
