//! End-to-end tests of the binary: artifacts, exit codes, overrides, and
//! byte-level reproducibility of reruns.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).expect("config written");
    path
}

fn run_command(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qclt"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

const WHITE_NOISE: &str = r#"
seed = 7

[process]
family = "linear"

[process.coeffs]
prefix = [1.0]

[process.innovation]
kind = "normal"
variance = 1.0
"#;

fn white_noise_with(section: &str) -> String {
    format!("{WHITE_NOISE}\n{section}")
}

#[test]
fn simulate_writes_trajectory_and_manifest() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), &white_noise_with("[simulate]\nn = 32\n"));
    let out = dir.path().join("out");
    let result = run_command("simulate", &config, &out, &[]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));

    let trajectory = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(trajectory.lines().count(), 33, "header plus 32 rows");
    assert!(trajectory.starts_with("k,x\n1,"));

    let manifest: toml::Value =
        toml::from_str(&fs::read_to_string(out.join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(manifest["command"].as_str(), Some("simulate"));
    assert_eq!(manifest["resolved_seed"].as_integer(), Some(7));
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 1);
    assert_eq!(outputs[0]["path"].as_str(), Some("trajectory.csv"));
    let digest = qclt::report::sha256_hex(trajectory.as_bytes());
    assert_eq!(outputs[0]["sha256"].as_str(), Some(digest.as_str()), "digest matches the file");
}

#[test]
fn quenched_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        &white_noise_with(
            r#"
[quenched]
n = 64
replicates = 100

[quenched.frequencies]
kind = "explicit"
points = [1.0, 2.0]

# 100 replicates carry sampling noise far above the default thresholds.
[quenched.tolerances]
ks-max = 0.2
cross-correlation-max = 0.3
variance-relative-max = 0.5
periodogram-mean-low = 0.6
periodogram-mean-high = 1.4
periodogram-ks-max = 0.2
"#,
        ),
    );
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    for out in [&first, &second] {
        let result = run_command("quenched", &config, out, &[]);
        assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    }
    for name in ["report.toml", "samples.csv"] {
        let a = fs::read(first.join(name)).unwrap();
        let b = fs::read(second.join(name)).unwrap();
        assert_eq!(a, b, "{name} must be byte-identical across reruns");
    }

    let manifest: toml::Value =
        toml::from_str(&fs::read_to_string(first.join("manifest.toml")).unwrap()).unwrap();
    assert!(manifest["failures"].as_array().unwrap().is_empty());
}

#[test]
fn impossible_tolerances_exit_nonzero_with_failure_list() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        &white_noise_with(
            r#"
[quenched]
n = 64
replicates = 100

[quenched.frequencies]
kind = "explicit"
points = [1.0]

[quenched.tolerances]
ks-max = 1e-9
"#,
        ),
    );
    let out = dir.path().join("out");
    let result = run_command("quenched", &config, &out, &[]);
    assert_eq!(result.status.code(), Some(1), "failed checks exit 1");
    assert!(String::from_utf8_lossy(&result.stderr).contains("FAIL"));

    let manifest: toml::Value =
        toml::from_str(&fs::read_to_string(out.join("manifest.toml")).unwrap()).unwrap();
    let failures = manifest["failures"].as_array().unwrap();
    assert!(!failures.is_empty(), "the manifest lists which checks failed");
    assert!(
        failures.iter().any(|f| f.as_str().unwrap().contains("KS")),
        "the impossible KS threshold shows up in the list: {failures:?}"
    );
}

#[test]
fn malformed_and_invalid_configs_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let broken = write_config(dir.path(), "seed = \n");
    let out = dir.path().join("out");
    let result = run_command("simulate", &broken, &out, &[]);
    assert_eq!(result.status.code(), Some(2), "unparseable config exits 2");
    assert!(
        String::from_utf8_lossy(&result.stderr).contains("line"),
        "parse errors carry line numbers"
    );

    let invalid_kernel = write_config(
        dir.path(),
        r#"
seed = 7

[process]
family = "finite-markov"
transition = [[0.5, 0.4], [0.5, 0.5]]
stationary = [0.5, 0.5]
observable = [1.0, -1.0]

[simulate]
n = 16
"#,
    );
    let result = run_command("simulate", &invalid_kernel, &out, &[]);
    assert_eq!(result.status.code(), Some(2), "invalid kernel exits 2");
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("row 0"), "the failing row is named: {stderr}");
}

#[test]
fn seed_override_is_recorded_and_changes_the_draw() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), &white_noise_with("[simulate]\nn = 32\n"));
    let base = dir.path().join("base");
    let reseeded = dir.path().join("reseeded");
    assert!(run_command("simulate", &config, &base, &[]).status.success());
    assert!(run_command("simulate", &config, &reseeded, &["--seed", "123"])
        .status
        .success());

    let a = fs::read(base.join("trajectory.csv")).unwrap();
    let b = fs::read(reseeded.join("trajectory.csv")).unwrap();
    assert_ne!(a, b, "a new seed draws a new trajectory");

    let manifest: toml::Value =
        toml::from_str(&fs::read_to_string(reseeded.join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(manifest["resolved_seed"].as_integer(), Some(123));
    let overrides = manifest["overrides"].as_array().unwrap();
    assert_eq!(overrides[0].as_str(), Some("seed=123"));
}

#[test]
fn frequency_override_reaches_the_grid() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        &white_noise_with(
            r#"
[periodogram]
n = 128

[periodogram.frequencies]
kind = "explicit"
points = [1.0]
"#,
        ),
    );
    let out = dir.path().join("out");
    let result = run_command("periodogram", &config, &out, &["--frequencies", "0.5,2.5"]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    let table = fs::read_to_string(out.join("periodogram.csv")).unwrap();
    assert_eq!(table.lines().count(), 3, "two overridden grid points");
    assert!(table.lines().nth(1).unwrap().starts_with("0.5,"));
    assert!(table.lines().nth(2).unwrap().starts_with("2.5,"));
}

#[test]
fn conditions_verdicts_reach_stdout_and_artifacts() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        r#"
seed = 7

[process]
family = "linear"

[process.coeffs]
prefix = [1.0]

[process.coeffs.tail]
kind = "geometric"
scale = 1.0
ratio = 0.5

[process.innovation]
kind = "normal"
variance = 1.0

[conditions]
frequencies = [1.0]
"#,
    );
    let out = dir.path().join("out");
    let result = run_command("conditions", &config, &out, &[]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("cond-16"), "verdict table on stdout: {stdout}");
    assert!(stdout.contains("holds-analytic"));

    let document = fs::read_to_string(out.join("conditions.toml")).unwrap();
    assert!(document.contains("cond-14"));
    assert!(document.contains("holds-analytic"));
    assert!(out.join("conditions.txt").exists());
}

#[test]
fn martingale_emits_gap_and_residual_tables() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        &white_noise_with(
            r#"
[martingale]
frequencies = [1.0]
ladder = [64, 128]
replicates = 50

[martingale.origin]
kind = "linear-past"
past_innovations = [1.0]
"#,
        ),
    );
    let out = dir.path().join("out");
    let result = run_command("martingale", &config, &out, &[]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    let gaps = fs::read_to_string(out.join("gap.csv")).unwrap();
    assert_eq!(gaps.lines().count(), 3, "two ladder points");
    assert!(gaps.starts_with("n,t,gap,stderr,replicates\n"));
    let residuals = fs::read_to_string(out.join("residuals.csv")).unwrap();
    assert_eq!(residuals.lines().count(), 3);
    for line in residuals.lines().skip(1) {
        let residual: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(residual < 1e-9, "telescoping must close: {line}");
    }
}
