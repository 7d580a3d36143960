use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn smd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn check_without_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = smd(&["check", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("check_report.json")).unwrap();
    assert!(report.contains("\"passed\": true"));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("check:"));
}

#[test]
fn simulate_pennies_stays_under_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("pennies_simulate.toml");
    let out = smd(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config: "));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "gap_xbar").unwrap();
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    let t = last[0];
    // 2 ln 2 / T plus the y0 correction 0.5 * diam, diam = 2
    let bound = (2.0 * 2f64.ln() + 0.5 * 2.0) / t;
    assert!(last[col] <= bound, "gap {} > {bound}", last[col]);
    assert!(last[col] <= 2.0 * 2f64.ln() / t);
}

#[test]
fn invalid_config_exits_with_two_and_lists_every_issue() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        r#"
[problem]
kind = "matrix_game"
matrix = [[1.0, -1.0], [-1.0, 1.0]]

[schedule]
kind = "power"
a = 1.5
b = 0.2

[noise]
kind = "constant_volatility"
sigma_star = -1.0
"#,
    );
    let out = smd(&["rates", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("a must lie in [0,1]"), "{err}");
    assert!(err.contains("noise.sigma_star"), "{err}");
    assert!(err.contains("H3"), "{err}");
}

#[test]
fn parse_error_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[problem]\nkind = \"matrix_game\"\nmatrix = [[1.0,\n");
    let out = smd(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn missing_config_is_an_io_error() {
    let out = smd(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/run.toml"));
}

#[test]
fn failed_audit_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("dominance_rates.toml"))
        .unwrap()
        .replace("horizon = 100.0", "horizon = 20.0")
        .replace("window = [10.0, 100.0]", "window = [2.0, 20.0]")
        .replace("exponent_range = [-10.0, -0.9]", "exponent_range = [0.5, 1.0]");
    let cfg = write(dir.path(), "rates.toml", &text);
    let out = smd(&["rates", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("rates.json").exists());
}

#[test]
fn seed_flag_overrides_config_and_workers_do_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("pennies_ldp.toml"))
        .unwrap()
        .replace("size = 500", "size = 100")
        .replace("horizon = 50.0", "horizon = 5.0")
        .replace("t_eval = 50.0", "t_eval = 5.0")
        .replace("dt = 0.001", "dt = 0.01");
    let cfg = write(dir.path(), "ldp.toml", &text);
    let run = |sub: &str, workers: &str, seed: &str| {
        let out_dir = dir.path().join(sub);
        let out = smd(&[
            "ldp",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--workers",
            workers,
            "--seed",
            seed,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        ["ldp.json", "ldp.csv", "ldp_gaps.csv"]
            .map(|f| std::fs::read(out_dir.join(f)).unwrap())
    };
    let a = run("a", "1", "11");
    let b = run("b", "4", "11");
    let c = run("c", "1", "12");
    assert_eq!(a, b);
    assert_ne!(a[2], c[2]);
    assert!(String::from_utf8_lossy(&a[0]).contains("\"base_seed\": 11"));
}
