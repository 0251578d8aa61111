use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn offload(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_offload"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = offload(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![rd.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(rd.records().map(|r| r.unwrap().iter().map(String::from).collect()));
    rows
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let i = rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows[1..].iter().map(|r| r[i].clone()).collect()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const KINETIC_RATES: &str = r#"
name = "kinetic_rates"
side_length_m = 8000.0
radio_range_m = 250.0
message_count = 3
rng_seed = 42

[[types]]
count = 480
speed_mps = 10.0
active_period_s = 40.0

[[types]]
count = 480
active_period_s = 40.0

[contact_rates]
rates_per_s = [[9.947e-05, 7.8125e-05], [7.8125e-05, 0.0]]
"#;

#[test]
fn analyze_single_type() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().display().to_string();
    let cfg = repo_config("single_type.toml").display().to_string();
    let report = run_ok(&["analyze", &cfg, "--out", &out]);
    assert!(report.contains("supercritical = true"));
    let rows = read_csv(&dir.path().join("analyze.csv"));
    let w: f64 = column(&rows, "extinction")[0].parse().unwrap();
    let z: f64 = column(&rows, "fraction")[0].parse().unwrap();
    assert!((w - 0.203_188).abs() < 1e-6);
    assert!((z - 0.796_812).abs() < 1e-6);
    assert!(dir.path().join("analyze.manifest.json").exists());
}

#[test]
fn analyze_subcritical() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().display().to_string();
    let cfg = repo_config("subcritical.toml").display().to_string();
    run_ok(&["analyze", &cfg, "--out", &out]);
    let rows = read_csv(&dir.path().join("analyze.csv"));
    assert_eq!(column(&rows, "supercritical"), vec!["false"]);
    assert_eq!(column(&rows, "extinction"), vec!["1"]);
    assert_eq!(column(&rows, "fraction"), vec!["0"]);
}

#[test]
fn malformed_config_fails_without_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.toml", "name = \"x\"\nside_length_m = 8000.0\nradio_range_m = = 3\n");
    let out = dir.path().join("out");
    let res = offload(&["analyze", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("bad.toml"), "{err}");
    assert!(err.contains("line 3"), "{err}");
    assert!(!out.exists());
}

#[test]
fn invalid_scenario_names_the_field() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(repo_config("single_type.toml"))
        .unwrap()
        .replace("radio_range_m = 250.0", "radio_range_m = 4000.0");
    let cfg = write_config(&dir, "wide.toml", &text);
    let res = offload(&["analyze", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("radio_range"));
    assert!(!dir.path().join("analyze.csv").exists());
}

#[test]
fn optimize_subcritical_pushes_one_packet() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().display().to_string();
    let cfg = repo_config("subcritical.toml").display().to_string();
    let report = run_ok(&["optimize", &cfg, "--out", &out]);
    assert!(report.contains("beta* = 1"), "{report}");
    assert!(report.contains("total* = 961.0000"), "{report}");
    assert!(report.contains("baseline = 960"), "{report}");
    let rows = read_csv(&dir.path().join("load_curve.csv"));
    assert_eq!(rows[0], ["beta", "Y", "total", "coding"]);
    assert_eq!(rows.len(), 961);
}

#[test]
fn coded_and_uncoded_curves_cross_at_most_once() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "kinetic.toml", KINETIC_RATES);
    let mut totals = Vec::new();
    for coding in ["on", "off"] {
        let out = dir.path().join(coding);
        run_ok(&["optimize", &cfg, "--coding", coding, "--max-beta", "50", "--out", out.to_str().unwrap()]);
        let rows = read_csv(&out.join("load_curve.csv"));
        let t: Vec<f64> = column(&rows, "total").iter().map(|v| v.parse().unwrap()).collect();
        totals.push(t);
    }
    let signs: Vec<bool> = totals[0]
        .iter()
        .zip(&totals[1])
        .filter(|(c, u)| (*c - *u).abs() > 1e-9)
        .map(|(c, u)| c < u)
        .collect();
    let crossings = signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert!(crossings <= 1, "{crossings} crossings");
}

#[test]
fn simulate_twice_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let cfg = repo_config("single_type.toml").display().to_string();
    let mut seen = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        run_ok(&["simulate", &cfg, "--reps", "1", "--seed", "42", "--out", out.to_str().unwrap()]);
        seen.push([
            std::fs::read(out.join("simulate_replications.csv")).unwrap(),
            std::fs::read(out.join("simulate_summary.csv")).unwrap(),
        ]);
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn manifest_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = repo_config("wifi_ap.toml").display().to_string();
    let first = dir.path().join("first");
    run_ok(&["simulate", &cfg, "--reps", "5", "--seed", "7", "--out", first.to_str().unwrap()]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(first.join("simulate.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    let resolved = write_config(&dir, "resolved.toml", manifest["config"].as_str().unwrap());
    let second = dir.path().join("second");
    run_ok(&["simulate", &resolved, "--out", second.to_str().unwrap()]);
    for f in ["simulate_replications.csv", "simulate_summary.csv"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn spatial_engine_from_the_command_line() {
    let dir = TempDir::new().unwrap();
    let cfg = repo_config("cross_engine.toml").display().to_string();
    let report = run_ok(&[
        "simulate", &cfg, "--engine", "spatial", "--reps", "3", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(report.contains("engine spatial"));
    let rows = read_csv(&dir.path().join("simulate_replications.csv"));
    // two packets per replication
    assert_eq!(rows.len(), 1 + 6);
    assert!(!dir.path().join("rates.csv").exists());
}

#[test]
fn access_point_sweep_is_nondecreasing() {
    let dir = TempDir::new().unwrap();
    let cfg = repo_config("wifi_ap.toml").display().to_string();
    let out = dir.path().display().to_string();
    run_ok(&[
        "sweep", &cfg, "--param", "types[0].active_period_s", "--values", "0,2,5,10,20,40", "--out", &out,
    ]);
    let rows = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows[0][..2], ["param", "value"]);
    let fr: Vec<f64> = column(&rows, "fraction_at_beta").iter().step_by(2).map(|v| v.parse().unwrap()).collect();
    assert_eq!(fr.len(), 6);
    assert!(fr.windows(2).all(|w| w[0] <= w[1]), "{fr:?}");
    assert!(fr[5] > fr[0]);
}

#[test]
fn sweep_usage_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = repo_config("wifi_ap.toml").display().to_string();
    let out = dir.path().to_str().unwrap();
    let res = offload(&["sweep", &cfg, "--param", "types[0].colour", "--values", "1", "--out", out]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("types[0].active_period_s"));
    let res = offload(&["sweep", &cfg, "--param", "side_length_m", "--out", out]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn zero_threads_is_a_usage_error() {
    let cfg = repo_config("single_type.toml").display().to_string();
    let res = Command::new(env!("CARGO_BIN_EXE_offload"))
        .args(["analyze", &cfg, "--out", std::env::temp_dir().to_str().unwrap()])
        .env("OFFLOAD_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}
