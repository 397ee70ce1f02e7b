use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use nlacoustics::app::directories_identical;

const BASE: &str = r#"
seed = 7

[domain]
dim = 2

[problem]
family = "dirdir"
sigma = 1.0
cutoff = 6
dt = 0.005
horizon = 0.5

[forcing]
modes = [{ component = 0, k = [1, 1], amplitude = 0.05, envelope = { type = "sine", omega = 2.0, phase = 0.0 } }]

[initial]
random = { amplitude = 0.05, max_k = 2 }

[boundary]
modes = [{ component = 0, axis = 1, side = 0, k = [1, 0], amplitude = 0.05, envelope = { type = "sine", omega = 1.0, phase = 0.0 } }]
"#;

fn nlac(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nlac")).args(args).output().expect("binary runs");
    let text = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    (out.status.code().expect("exited normally"), text)
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &str, config: &Path, out: &Path) -> (i32, String) {
    nlac(&[cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

#[test]
fn simulate_writes_artifacts_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "base.toml", BASE);
    let out = dir.path().join("out");
    let (code, text) = run("simulate", &cfg, &out);
    assert_eq!(code, 0, "{text}");
    for f in
        ["trajectory.csv", "newton.csv", "certificate.txt", "norms.svg", "energy.svg", "residuals.svg", "pressure.svg"]
    {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let cert = fs::read_to_string(out.join("certificate.txt")).unwrap();
    assert!(cert.contains("verdict = PASS"));
    let (header, rows) = nlacoustics::output::read_csv(&out.join("trajectory.csv")).unwrap();
    assert_eq!(header[0], "time");
    assert!(header.iter().any(|h| h == "p[1 1]"));
    assert_eq!(rows.len(), 101);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "base.toml", BASE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("simulate", &cfg, &a).0, 0);
    assert_eq!(run("simulate", &cfg, &b).0, 0);
    assert!(directories_identical(&a, &b).unwrap());
}

#[test]
fn seed_flag_changes_random_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "base.toml", BASE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("simulate", &cfg, &a).0, 0);
    let (code, _) = nlac(&["simulate", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "8"]);
    assert_eq!(code, 0);
    assert!(!directories_identical(&a, &b).unwrap());
}

#[test]
fn sigma_outside_range_is_a_config_error_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &BASE.replace("sigma = 1.0", "sigma = 0.3"));
    let (code, text) = run("simulate", &cfg, &dir.path().join("out"));
    assert_eq!(code, 2);
    assert!(text.contains("line 9") && text.contains("problem.sigma"), "{text}");
}

#[test]
fn unknown_keys_and_missing_files_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.toml", &BASE.replace("horizon = 0.5", "horizon = 0.5\nhorizn = 1"));
    assert_eq!(run("simulate", &cfg, &dir.path().join("out")).0, 2);
    assert_eq!(run("simulate", &dir.path().join("absent.toml"), &dir.path().join("out")).0, 2);
}

#[test]
fn large_data_fail_the_certificate_or_diverge() {
    let dir = tempfile::tempdir().unwrap();
    let moderate = BASE.replace("amplitude = 0.05, max_k", "amplitude = 0.6, max_k");
    let cfg = write_config(dir.path(), "moderate.toml", &moderate);
    let out = dir.path().join("moderate");
    let (code, text) = run("simulate", &cfg, &out);
    assert_eq!(code, 3, "{text}");
    assert!(fs::read_to_string(out.join("certificate.txt")).unwrap().contains("verdict = FAIL"));

    let huge = BASE.replace("amplitude = 0.05, max_k", "amplitude = 8.0, max_k");
    let cfg = write_config(dir.path(), "huge.toml", &huge);
    let (code, text) = run("simulate", &cfg, &dir.path().join("huge"));
    assert_eq!(code, 5, "{text}");
}

#[test]
fn zero_boundary_data_give_a_zero_lift() {
    let dir = tempfile::tempdir().unwrap();
    let body = BASE.replace(
        "amplitude = 0.05, envelope = { type = \"sine\", omega = 1.0",
        "amplitude = 0.0, envelope = { type = \"sine\", omega = 1.0",
    );
    let cfg = write_config(dir.path(), "zero.toml", &body);
    let out = dir.path().join("out");
    assert_eq!(run("lift", &cfg, &out).0, 0);
    let report = fs::read_to_string(out.join("lift_report.txt")).unwrap();
    assert!(report.contains("zero_data = true") && report.contains("terms = 0"), "{report}");
    let (_, rows) = nlacoustics::output::read_csv(&out.join("lift.csv")).unwrap();
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn incompatible_initial_data_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let body = BASE
        .replace(
            "random = { amplitude = 0.05, max_k = 2 }",
            "random = { amplitude = 0.05, max_k = 2 }\nadd_lift = false",
        )
        .replace("omega = 1.0, phase = 0.0", "omega = 1.0, phase = 0.5");
    let cfg = write_config(dir.path(), "incompatible.toml", &body);
    let (code, text) = run("simulate", &cfg, &dir.path().join("out"));
    assert_eq!(code, 2, "{text}");
    assert!(text.contains("incompatible"), "{text}");
}

#[test]
fn disabled_dealiasing_is_caught_by_verify() {
    let dir = tempfile::tempdir().unwrap();
    let body = BASE.replace("horizon = 0.5", "horizon = 0.5\ndealiasing = \"off\"")
        + "\n[verify]\nsamples = 6\ncutoffs = [4, 6, 8]\n";
    let cfg = write_config(dir.path(), "off.toml", &body);
    let out = dir.path().join("out");
    let (code, text) = run("verify", &cfg, &out);
    assert_eq!(code, 4, "{text}");
    let report = fs::read_to_string(out.join("verify_report.txt")).unwrap();
    assert!(report.contains("bilinear_oracle[DirDir] FAIL"), "{report}");
}

#[test]
fn convergence_and_sweep_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let body = BASE.to_string() + "\n[convergence]\naxis = \"dt\"\nlevels = [0.02, 0.01, 0.005, 0.0025]\n\n[sweep]\nparameter = \"sigma\"\nvalues = [0.5, 1.0]\n";
    let cfg = write_config(dir.path(), "study.toml", &body);
    let out = dir.path().join("conv");
    let (code, text) = run("convergence", &cfg, &out);
    assert_eq!(code, 0, "{text}");
    assert!(out.join("convergence.csv").is_file());
    let out = dir.path().join("sweep");
    let (code, text) =
        nlac(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(code, 0, "{text}");
    assert!(out.join("sigma_0/certificate.txt").is_file() && out.join("sigma_1/certificate.txt").is_file());
    let (_, rows) = nlacoustics::output::read_csv(&out.join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 2);
}
