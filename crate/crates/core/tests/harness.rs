use std::path::Path;
use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use heavytail::harness::noise::NoiseModel;
use heavytail::harness::trace::{header, read_csv, read_jsonl, write_csv, write_jsonl};
use heavytail::harness::{run_experiment, ExperimentConfig};

const CONFIG: &str = r#"
[learner]
algorithm = "sub-exp-1d"
sigma = 1.0
b = 3.0
lipschitz = 1.0
delta = 0.05
epsilon = 1.0
horizon = 200

[noise]
kind = "bounded-uniform"

[loss]
kind = "absolute"
target = 0.5
"#;

fn heavytail() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heavytail"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn monte_carlo_moment(noise: &NoiseModel, p: f64, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    (0..n)
        .map(|_| noise.sample(&mut rng).abs().powf(p))
        .sum::<f64>()
        / n as f64
}

#[test]
fn pareto_second_moment_matches_calibration() {
    let noise = NoiseModel::symmetric_pareto(3.0, 1.0, 2.0).unwrap();
    assert!((noise.abs_moment(2.0) - 1.0).abs() < 1e-12);
    // Infinite fourth moment makes the sample average noisy; a few percent is ample.
    assert!((monte_carlo_moment(&noise, 2.0, 2_000_000) - 1.0).abs() < 0.05);
    assert!(NoiseModel::symmetric_pareto(1.5, 1.0, 2.0).is_err());
}

#[test]
fn uniform_and_student_moments_match_calibration() {
    for p in [1.2, 1.5, 2.0] {
        let uniform = NoiseModel::bounded_uniform(0.7, p).unwrap();
        let exact = 0.7f64.powf(p);
        assert!((uniform.abs_moment(p) - exact).abs() < 1e-12);
        assert!((monte_carlo_moment(&uniform, p, 500_000) / exact - 1.0).abs() < 0.01);
        let t = NoiseModel::student_t(5.0, 0.7, p).unwrap();
        assert!((t.abs_moment(p) - exact).abs() < 1e-12);
        assert!((monte_carlo_moment(&t, p, 1_000_000) / exact - 1.0).abs() < 0.02);
    }
}

#[test]
fn trace_round_trips_and_empty_csv_has_header() {
    let cfg = ExperimentConfig::from_toml(CONFIG).unwrap();
    let out = run_experiment(&cfg, &[0, 1]).unwrap();
    let rows: Vec<_> = out.traces.iter().flat_map(|t| t.rows.clone()).collect();
    let comparators = out.traces[0].rows[0].regret.len();

    let mut csv = Vec::new();
    write_csv(&mut csv, comparators, &out.traces).unwrap();
    assert_eq!(read_csv(csv.as_slice()).unwrap(), rows);
    let mut jsonl = Vec::new();
    write_jsonl(&mut jsonl, &out.traces).unwrap();
    assert_eq!(read_jsonl(jsonl.as_slice()).unwrap(), rows);

    let mut empty = Vec::new();
    write_csv(&mut empty, comparators, &[]).unwrap();
    let text = String::from_utf8(empty).unwrap();
    assert_eq!(text.trim_end(), header(comparators).join(","));
    assert!(read_csv(text.as_bytes()).unwrap().is_empty());
}

#[test]
fn zero_comparator_regret_bounded_by_epsilon_without_noise() {
    let text = CONFIG
        .replace("kind = \"bounded-uniform\"", "kind = \"none\"")
        .replace(
            "kind = \"absolute\"\ntarget = 0.5",
            "kind = \"linear\"\nslope = 0.8",
        );
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    let out = run_experiment(&cfg, &[0]).unwrap();
    let last = out.traces[0].rows.last().unwrap();
    assert!(last.regret[0] <= cfg.learner.epsilon);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(
        dir.path(),
        &CONFIG.replace("delta = 0.05", "delta = 0.05\nunknown_key = 1"),
    );
    let status = heavytail()
        .args(["run", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("o"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let invalid = write_config(dir.path(), &CONFIG.replace("delta = 0.05", "delta = 2.0"));
    let status = heavytail()
        .args(["run", "--config"])
        .arg(&invalid)
        .arg("--out")
        .arg(dir.path().join("o"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let good = write_config(dir.path(), CONFIG);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let status = heavytail()
        .args(["run", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(blocker.join("sub"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    let status = heavytail()
        .args(["run", "--config"])
        .arg(dir.path().join("missing.toml"))
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn cli_sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    let out = dir.path().join("sweep");
    let status = heavytail()
        .args(["sweep", "--config"])
        .arg(&config)
        .args([
            "--vary",
            "epsilon=0.5,2",
            "--seeds",
            "2",
            "--format",
            "jsonl",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for value in ["0.5", "2"] {
        let sub = out.join(format!("epsilon={value}"));
        for file in ["trace.jsonl", "comparators.json", "summary.json"] {
            assert!(sub.join(file).is_file(), "{}", sub.join(file).display());
        }
    }
    let sweep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sweep.as_array().unwrap().len(), 2);

    let status = heavytail()
        .args(["sweep", "--config"])
        .arg(&config)
        .args(["--vary", "bogus=1", "--out"])
        .arg(dir.path().join("bad"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn cli_concentration_check_reports_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let output = heavytail()
        .args([
            "concentration-check",
            "--which",
            "squares",
            "--runs",
            "500",
            "--delta",
            "0.1",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("coverage-sum-squares.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["runs"], 500);
    assert!(report["fraction"].as_f64().unwrap() >= 0.9);
}
