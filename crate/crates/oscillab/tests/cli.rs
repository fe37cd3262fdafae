use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn oscillab(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_oscillab"));
    c.args(args);
    match threads {
        Some(t) => c.env("OSCILLAB_THREADS", t),
        None => c.env_remove("OSCILLAB_THREADS"),
    };
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn run_config(cmd: &str, config: &Path, out: &Path, threads: Option<&str>) -> Output {
    oscillab(&[cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()], threads)
}

#[test]
fn help_version_and_subcommand_errors() {
    assert_eq!(code(&oscillab(&["--help"], None)), 0);
    assert_eq!(code(&oscillab(&["--version"], None)), 0);
    assert_eq!(code(&oscillab(&[], None)), 1);
    assert_eq!(code(&oscillab(&["frobnicate"], None)), 1);
    assert_eq!(code(&oscillab(&["solve", "--out", "x"], None)), 2);
}

#[test]
fn validation_and_runtime_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let bad_h0 = write_config(tmp.path(), "k.json", r#"{"m": 2, "h0": 0.7, "n": 10}"#);
    let o = run_config("simulate-path", &bad_h0, &out, None);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("1 - 1/(2m)"));

    let few = write_config(
        tmp.path(),
        "few.json",
        r#"{"m": 1, "h0": 0.8, "epsilons": [0.1], "replicas": 50}"#,
    );
    assert_eq!(code(&run_config("oscillatory", &few, &out, None)), 2);

    let garbage = write_config(tmp.path(), "g.json", "{ not json");
    assert_eq!(code(&run_config("build-phi", &garbage, &out, None)), 2);

    let missing = tmp.path().join("missing.json");
    assert_eq!(code(&run_config("build-phi", &missing, &out, None)), 3);

    // order 4 exceeds the Hermite-process complexity guard
    let m4 = write_config(tmp.path(), "z.json", r#"{"m": 4, "h0": 0.95, "n_grid": 50}"#);
    assert_eq!(code(&run_config("hermite-path", &m4, &out, None)), 3);
}

fn outputs(dir: &Path) -> Vec<String> {
    let text = fs::read_to_string(dir.join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["outputs"].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect()
}

fn assert_same_outputs(a: &Path, b: &Path) {
    let files = outputs(a);
    assert!(!files.is_empty());
    assert_eq!(files, outputs(b));
    for f in files {
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{f} differs");
    }
}

#[test]
fn simulate_path_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "k.json", r#"{"m": 1, "h0": 0.8, "delta": 0.5, "n": 500, "seed": 11}"#);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run_config("simulate-path", &cfg, &a, None)), 0);
    assert_eq!(code(&run_config("simulate-path", &cfg, &b, None)), 0);
    assert_same_outputs(&a, &b);
    let csv = fs::read_to_string(a.join("path.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x,g");
    assert_eq!(csv.lines().count(), 502);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["seed_base"], 11);
}

#[test]
fn oscillatory_report_does_not_depend_on_threads() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "o.json",
        r#"{"m": 1, "h0": 0.8, "epsilons": [0.1, 0.05], "replicas": 100, "seed_base": 3,
            "z_grid": 50, "permutations": 20, "h": {"kind": "named", "name": "half"}}"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run_config("oscillatory", &cfg, &a, Some("1"))), 0);
    assert_eq!(code(&run_config("oscillatory", &cfg, &b, Some("2"))), 0);
    assert_same_outputs(&a, &b);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["per_epsilon"].as_array().unwrap().len(), 2);
    assert!(a.join("convergence.dat").exists());
}

#[test]
fn other_experiments_run() {
    let tmp = TempDir::new().unwrap();
    let corr = write_config(
        tmp.path(),
        "c.json",
        r#"{"m": 1, "h0": 0.8, "epsilons": [0.1], "replicas": 100, "z_grid": 40, "permutations": 10}"#,
    );
    assert_eq!(code(&run_config("corrector", &corr, &tmp.path().join("c"), None)), 0);
    assert!(tmp.path().join("c/probes.csv").exists());

    let cov = write_config(
        tmp.path(),
        "v.json",
        r#"{"m": 2, "h0": 0.9, "lags": [1, 4, 16], "mc_paths": 8, "mc_length": 400}"#,
    );
    assert_eq!(code(&run_config("covariance", &cov, &tmp.path().join("v"), None)), 0);
    let csv = fs::read_to_string(tmp.path().join("v/covariance.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let taq = write_config(
        tmp.path(),
        "t.json",
        r#"{"m": 1, "h0": 0.8, "ts": [10, 100], "replicas": 100, "z_grid": 40, "permutations": 10}"#,
    );
    assert_eq!(code(&run_config("taqqu", &taq, &tmp.path().join("t"), None)), 0);

    let wrong_mode = write_config(
        tmp.path(),
        "w.json",
        r#"{"m": 1, "h0": 0.8, "mode": "covariance"}"#,
    );
    assert_eq!(code(&run_config("taqqu", &wrong_mode, &tmp.path().join("w"), None)), 2);

    let phi = write_config(tmp.path(), "p.json", r#"{"method": "rank2_bounded", "m": 2, "a_star": 1.0}"#);
    assert_eq!(code(&run_config("build-phi", &phi, &tmp.path().join("p"), None)), 0);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("p/report.json")).unwrap()).unwrap();
    assert_eq!(r["rank"], 2);

    let z = write_config(tmp.path(), "z.json", r#"{"m": 2, "h0": 0.9, "n_grid": 64, "seed": 5}"#);
    assert_eq!(code(&run_config("hermite-path", &z, &tmp.path().join("z"), None)), 0);
    let csv = fs::read_to_string(tmp.path().join("z/path.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "0e0,0e0");
}

#[test]
fn solve_with_constant_phi_has_no_corrector() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s");
    let o = oscillab(
        &["solve", "--epsilon", "0.05", "--b", "0.5", "--f", "sin", "--phi", "constant", "--a-star", "2", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x,u_eps,u_bar,corrector,U_eps");
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(v[3].abs() < 1e-12 && v[4].abs() < 1e-10, "{l}");
    }
    let random = tmp.path().join("r");
    let o = oscillab(&["solve", "--epsilon", "0.05", "--seed", "4", "--out", random.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let bad = oscillab(&["solve", "--epsilon", "0.05", "--f", "cubic", "--out", random.to_str().unwrap()], None);
    assert_eq!(code(&bad), 2);
}
