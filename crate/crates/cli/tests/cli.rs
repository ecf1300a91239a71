use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lbd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lbd"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn lbd")
}

const TWO_RING: &str = r#"
target = { kind = "two_ring" }
n_particles = 40
iterations = 120
tau = 0.005
anneal = true
bd = "on"
bd_stride = 20
gamma = 0.5
reference_samples = 200
diag_stride = 40
"#;

fn csv_shape(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn missing_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "target = { kind = \"two_ring\" }\nn_particles = 10\niterations = 5\n").unwrap();
    let out = lbd(dir.path(), &["--config", "c.toml", "run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"target":{"kind":"two_ring"},"n_particles":10,"iterations":5,"tau":0.01,"taus":1}"#).unwrap();
    let out = lbd(dir.path(), &["--config", "c.json", "run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("taus"));
}

#[test]
fn run_writes_samples_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), TWO_RING).unwrap();
    let out = lbd(dir.path(), &["--config", "c.toml", "--out-dir", "o", "run"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("final epsilon_stat"));

    let (header, rows) = csv_shape(&dir.path().join("o/samples.csv"));
    assert_eq!(header, ["x1", "x2"]);
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| r.len() == 2 && r.iter().all(|v| v.is_finite())));

    let (header, rows) = csv_shape(&dir.path().join("o/trace.csv"));
    assert_eq!(header, ["iteration", "epsilon_stat", "beta", "jump_count", "bandwidth"]);
    let iterations: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(iterations, [0.0, 40.0, 80.0, 120.0]);
    assert_eq!(rows.last().unwrap()[2], 1.0);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), TWO_RING).unwrap();
    for (out_dir, threads) in [("a", "1"), ("b", "3")] {
        let out = lbd(dir.path(), &["--config", "c.toml", "--seed", "7", "--threads", threads, "--out-dir", out_dir, "run"]);
        assert!(out.status.success());
    }
    for file in ["samples.csv", "trace.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
}

#[test]
fn oracle_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for out_dir in ["a", "b"] {
        let out = lbd(dir.path(), &["--seed", "4", "--out-dir", out_dir, "oracle", "--count", "25"]);
        assert!(out.status.success());
        files.push(fs::read(dir.path().join(out_dir).join("oracle.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let (header, rows) = csv_shape(&dir.path().join("a/oracle.csv"));
    assert_eq!(header.len(), 10);
    assert_eq!(header[9], "x10");
    assert_eq!(rows.len(), 25);

    let out = lbd(dir.path(), &["oracle", "--target", "banana"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_column_per_bandwidth() {
    let dir = tempfile::tempdir().unwrap();
    let out = lbd(dir.path(), &["bandwidth-sweep", "--iterations", "100"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("bandwidth_sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,h=0.01,h=1,h=100"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split(',').count() == 4));
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = lbd(dir.path(), &["compare-precond", "--iterations", "50"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}
