//! End-to-end tests against the compiled binary: exit codes, artifacts,
//! output-directory resolution and rerun determinism.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flow3"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const SINK_CONFIG: &str = r#"
seed = 3
output_dir = "outdir"

[flow]
builtin = "cylinder"
[flow.params]
c = -1.0

[budgets]
seeds = 48
mc_samples = 200
t_transient = 10.0
t_horizon = 50.0
trap_horizons = [0.0, 5.0]
"#;

#[test]
fn orbits_writes_catalog_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write(&cfg, SINK_CONFIG);
    let out = dir.path().join("o");
    let status = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "orbits"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("catalog.json").exists());
    let csv = std::fs::read_to_string(out.join("catalog.csv")).unwrap();
    assert!(csv.starts_with("name,px,py,pz,period,"));
    assert!(csv.lines().count() >= 2, "catalog CSV must have the sink row");
    let line = csv.lines().nth(1).unwrap();
    assert!(line.contains("sink"));
    assert!(line.contains("true"), "sink is dissipative: {line}");
}

#[test]
fn empty_census_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write(
        &cfg,
        r#"
seed = 0
[flow]
builtin = "rotation"
[budgets]
seeds = 24
"#,
    );
    let out = dir.path().join("o");
    let output = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "orbits"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("no periodic orbits"));
    // the (empty) catalog is still written
    let csv = std::fs::read_to_string(out.join("catalog.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn malformed_expression_exits_sixtyfour_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write(
        &cfg,
        r#"
[flow.expression]
x = "x +\n y * ("
y = "y"
z = "z"
[domain]
kind = "torus"
"#,
    );
    let output = bin().args(["--config", cfg.to_str().unwrap(), "orbits"]).output().unwrap();
    assert_eq!(output.status.code(), Some(64));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("parse error at 2:"), "diagnostic with line/col: {stderr}");
}

#[test]
fn missing_config_exits_sixtyfour() {
    let output = bin().args(["--config", "/nonexistent/x.toml", "analyze"]).output().unwrap();
    assert_eq!(output.status.code(), Some(64));
}

#[test]
fn surgery_emits_report_and_margins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write(&cfg, SINK_CONFIG);
    let params = dir.path().join("saddle.toml");
    write(
        &params,
        r#"
lambda = 0.5
mu = 1.6
gamma = 0.1
tau = 1.0
[budget]
c = 10.0
eps = 0.1
lambda_rate = 0.9
alpha = 0.5
"#,
    );
    let out = dir.path().join("o");
    let output = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--json",
            "surgery",
            "--params",
            params.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let line: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("one JSON summary line on stdout");
    assert!((line["modulus"].as_f64().unwrap() - 0.894427).abs() < 1e-5);
    assert_eq!(line["m"].as_u64().unwrap(), 8088);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("surgery.json")).unwrap()).unwrap();
    assert!(report["budget_margins"].as_array().unwrap().iter().all(|m| m.as_f64().unwrap() >= 0.0));
    assert_eq!(report["sink"]["det"].as_f64().unwrap(), 0.8);
}

#[test]
fn non_dissipative_surgery_exits_sixtysix() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("saddle.toml");
    write(&params, "lambda = 0.5\nmu = 2.0\ngamma = 0.1\ntau = 1.0\n");
    let output = bin()
        .args(["surgery", "--params", params.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(66));
    assert!(String::from_utf8_lossy(&output.stderr).contains("not dissipative"));
}

#[test]
fn basin_writes_plot_data_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write(&cfg, SINK_CONFIG);
    let out = dir.path().join("o");
    let run = || {
        let status = bin()
            .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "basin"])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        (
            std::fs::read(out.join("basin.csv")).unwrap(),
            std::fs::read(out.join("plot_basin.csv")).unwrap(),
            std::fs::read(out.join("plot_trapped.csv")).unwrap(),
        )
    };
    let a = run();
    let b = run();
    assert_eq!(a, b, "fixed-seed rerun must be byte-identical");
    let plot = String::from_utf8(a.1).unwrap();
    assert!(plot.starts_with("n,estimate\n"));
    assert!(plot.lines().count() > 2);
    let trapped = String::from_utf8(a.2).unwrap();
    assert!(trapped.starts_with("N,estimate,"));
}

#[test]
fn analyze_then_report_renders_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write(&cfg, SINK_CONFIG);
    let out = dir.path().join("o");
    let status = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "analyze"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("report.json").exists());
    assert!(out.join("timings.json").exists());
    let output = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "report"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("flow: cylinder"));
    assert!(text.contains("weak basin"));
    assert!(text.contains("attractor-evidence"));
}

#[test]
fn output_dir_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write(&cfg, SINK_CONFIG);
    let env_out = dir.path().join("env-out");
    let status = bin()
        .args(["--config", cfg.to_str().unwrap(), "orbits"])
        .env("OUTPUT_DIR", env_out.to_str().unwrap())
        .current_dir(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(env_out.join("catalog.json").exists());
    assert!(!dir.path().join("outdir").exists(), "env override must win over config");
}

#[test]
fn json_mode_emits_single_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write(&cfg, SINK_CONFIG);
    let out = dir.path().join("o");
    let output = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--json",
            "analyze",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(stdout.trim().lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(v["command"], "analyze");
    assert_eq!(v["sinks"], 1);
}

#[test]
fn explicit_sections_drive_the_census() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write(
        &cfg,
        r#"
seed = 0
[flow]
builtin = "catmap-suspension"
[budgets]
seeds = 120
period_bound = 1.2
max_returns = 1

[[sections]]
anchor = [0.5, 0.5, 0.5]
normal = [0.0, 0.0, 1.0]
half_width = 0.75
"#,
    );
    let out = dir.path().join("o");
    let status = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "orbits"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let catalog: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("catalog.json")).unwrap()).unwrap();
    // only the fixed-fiber orbit has period <= 1.2
    assert_eq!(catalog["orbits"].as_array().unwrap().len(), 1);

    // a section tangent to the field is rejected up front
    write(
        &cfg,
        r#"
seed = 0
[flow]
builtin = "catmap-suspension"
[[sections]]
anchor = [0.5, 0.5, 0.5]
normal = [1.0, 0.0, 0.0]
half_width = 0.5
"#,
    );
    let output = bin().args(["--config", cfg.to_str().unwrap(), "orbits"]).output().unwrap();
    assert_eq!(output.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&output.stderr).contains("transversal"));
}
