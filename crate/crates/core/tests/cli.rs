//! End-to-end checks of the `femtoq` binary: config loading, outputs,
//! determinism, checkpoint resume and the exit-code contract of `--check`.

use std::fs;
use std::path::Path;
use std::process::Command;

fn femtoq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_femtoq"))
}

fn write_small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("episode.toml");
    fs::write(&path, "n_femto = 2\nq_iterations = 60\nrng_seed = 9\n").unwrap();
    path
}

#[test]
fn run_produces_outputs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = femtoq()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .arg("--check")
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["trace.csv", "topology.json", "summary.json"] {
        assert!(out_a.join(name).exists(), "{name} missing");
    }
    assert_eq!(
        fs::read(out_a.join("trace.csv")).unwrap(),
        fs::read(out_b.join("trace.csv")).unwrap(),
        "identical configs must produce identical traces"
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("summary.json")).unwrap()).unwrap();
    assert!(summary["aggregate_femto_capacity"].as_f64().unwrap() >= 0.0);
}

#[test]
fn run_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "q_iterations = 10\nnot_a_field = 1\n").unwrap();
    let output = femtoq()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("not_a_field"), "stderr: {stderr}");
}

#[test]
fn checkpoint_resume_matches_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());

    let full = dir.path().join("full");
    let status = femtoq()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&full)
        .status()
        .unwrap();
    assert!(status.success());

    let paused = dir.path().join("paused");
    let status = femtoq()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&paused)
        .args(["--checkpoint-at", "30"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(paused.join("checkpoint.json").exists());

    let resumed = dir.path().join("resumed");
    let status = femtoq()
        .args(["run", "--resume"])
        .arg(paused.join("checkpoint.json"))
        .arg("--out")
        .arg(&resumed)
        .status()
        .unwrap();
    assert!(status.success());

    // The resumed tail must reproduce the full run's endgame: its last
    // trace rows equal the full trace's last rows byte for byte.
    let full_trace = fs::read_to_string(full.join("trace.csv")).unwrap();
    let resumed_trace = fs::read_to_string(resumed.join("trace.csv")).unwrap();
    let tail = |text: &str, n: usize| -> Vec<String> {
        text.lines().rev().take(n).map(str::to_string).collect()
    };
    assert_eq!(tail(&full_trace, 50), tail(&resumed_trace, 50));
}

#[test]
fn report_recomputes_metrics_from_trace() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let out = dir.path().join("out");
    femtoq()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();

    let output = femtoq()
        .args(["report", "--trace"])
        .arg(out.join("trace.csv"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("report prints JSON");
    assert_eq!(report["n_femto"], 2);
    assert_eq!(report["iterations"], 60);

    // Cross-check against the stored summary.
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let a = report["aggregate_femto_capacity"].as_f64().unwrap();
    let b = summary["aggregate_femto_capacity"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-9, "report {a} vs summary {b}");
}

#[test]
fn sweep_writes_figures_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    fs::write(
        &config,
        r#"
n_femto = [3, 4]
paradigms = ["il", "cl"]
seeds = [0, 1]
figure_stride = 5

[[rewards]]
kind = "rf1"

[[rewards]]
kind = "rf3"

[base]
q_iterations = 40
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = femtoq()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let points = manifest["points"].as_array().unwrap();
    assert_eq!(points.len(), 2 * 2 * 2);
    for point in points {
        assert_eq!(point["trace_digests"].as_array().unwrap().len(), 2);
    }
    // RF1/RF3 x IL/CL covers the cooperation figures but not the RF2 ones.
    assert!(out.join("figure_7.csv").exists());
    assert!(out.join("figure_9.csv").exists());
    assert!(out.join("figure_11.csv").exists());
    assert!(!out.join("figure_3.csv").exists());
}

#[test]
fn oracle_check_reports_pass() {
    let output = femtoq()
        .args([
            "oracle-check",
            "--seeds",
            "3",
            "--steps",
            "30000",
            "--check",
        ])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(output.status.success(), "stdout: {stdout}");
    assert!(stdout.contains("3/3"), "stdout: {stdout}");
}

#[test]
fn out_dir_env_variable_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let out = dir.path().join("from-env");
    let status = femtoq()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--no-trace")
        .env("FEMTOQ_OUT_DIR", &out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("summary.json").exists());
    assert!(!out.join("trace.csv").exists());
}
