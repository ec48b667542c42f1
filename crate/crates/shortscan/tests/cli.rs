//! Exit-code and error-surface contract of the `shortscan` binary:
//! 0 success, 1 runtime error, 2 usage error, 3 comparison failure.

use std::path::Path;
use std::process::{Command, Output};

fn shortscan(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shortscan"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("spawn shortscan")
}

#[test]
fn scan_without_populate_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = shortscan(&["scan"], dir.path());
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("populate"), "hint the missing step: {stderr}");
}

#[test]
fn invalid_config_is_a_usage_error_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[shortener]\ntarget_density = 7.5\n").unwrap();
    let output = shortscan(
        &["populate", "--config", config.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("shortener.target_density"),
        "field-level message expected: {stderr}"
    );
}

#[test]
fn report_without_inputs_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = shortscan(&["report"], dir.path());
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = shortscan(&["populate", "--no-such-flag"], dir.path());
    assert_eq!(output.status.code(), Some(2), "clap usage errors exit 2");
}

#[test]
fn standalone_estimate_reproduces_headline_density() {
    let dir = tempfile::tempdir().unwrap();
    let output = shortscan(
        &[
            "estimate",
            "--sampled",
            "100000000",
            "--hits",
            "42229055",
            "--length",
            "6",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("0.4223"), "point estimate: {stdout}");
}

#[test]
fn small_experiment_end_to_end_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(
        &config,
        r#"
seed = 11
[shortener]
target_density = 0.42
[[shortener.spaces]]
length = 2
[storage]
accounts = 60
link_count = 40
[maps]
records = 200
address_pool = 100
[scan]
sample_size = 1000
space_length = 2
workers = 2
max_queries = 2000
"#,
    )
    .unwrap();
    let cfg = config.to_str().unwrap();
    for step in [
        "populate",
        "scan",
        "estimate",
        "traverse",
        "inject-audit",
        "maps-analyze",
        "mitigate",
    ] {
        let output = shortscan(&[step, "--config", cfg], dir.path());
        assert_eq!(
            output.status.code(),
            Some(0),
            "{step} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let output = shortscan(&["report", "--config", cfg], dir.path());
    assert_eq!(
        output.status.code(),
        Some(0),
        "report failed: {}{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("rows pass"));
    // Outputs exist where promised.
    for name in [
        "shortener_links.jsonl",
        "cloudstore.json",
        "maps_records.jsonl",
        "scan_report.json",
        "scan_progress.jsonl",
        "density_estimates.jsonl",
        "traversal_report.json",
        "inject_audit.jsonl",
        "maps_analysis.json",
        "mitigation_report.json",
        "mitigation_table.txt",
        "report.txt",
    ] {
        assert!(dir.path().join(name).exists(), "missing output {name}");
    }
}

#[test]
fn seed_flag_changes_outputs_and_is_deterministic() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let dir_c = tempfile::tempdir().unwrap();
    let config_body = r#"
[shortener]
target_density = 0.3
[[shortener.spaces]]
length = 2
[storage]
accounts = 30
link_count = 30
[maps]
records = 100
address_pool = 50
[scan]
space_length = 2
sample_size = 500
"#;
    for dir in [&dir_a, &dir_b, &dir_c] {
        std::fs::write(dir.path().join("c.toml"), config_body).unwrap();
    }
    let run = |dir: &tempfile::TempDir, seed: &str| {
        let config = dir.path().join("c.toml");
        let output = shortscan(
            &[
                "populate",
                "--config",
                config.to_str().unwrap(),
                "--seed",
                seed,
            ],
            dir.path(),
        );
        assert_eq!(output.status.code(), Some(0));
        std::fs::read(dir.path().join("shortener_links.jsonl")).unwrap()
    };
    let a = run(&dir_a, "5");
    let b = run(&dir_b, "5");
    let c = run(&dir_c, "6");
    assert_eq!(a, b, "same seed, same snapshot");
    assert_ne!(a, c, "different seed, different snapshot");
}
