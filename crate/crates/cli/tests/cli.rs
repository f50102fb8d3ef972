use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn currents(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_currents"))
        .args(args)
        .env_remove("CURRENTS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unit_cell_run_reports_ground_truths() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let run = currents(&["run", path(&scenario("unit-cell.toml")), "--out", path(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stdout));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["lambda0"], 2.0);
    assert_eq!(summary["c_fit"], 2.0);
    assert_eq!(summary["g"][2], serde_json::json!([1.0, 3.0]));
    assert_eq!(summary["pass"], true);
    for file in ["selection.csv", "lambda_sweep.csv", "profile.csv", "summary.json"] {
        assert!(out.join(file).is_file(), "{file}");
    }
    let plot = currents(&["plot", path(&out), "--what", "profile"]);
    assert!(plot.status.success());
    assert_eq!(String::from_utf8(plot.stdout).unwrap(), "# eta g\n0 1\n1 3\n");
    let absent = currents(&["plot", path(&out), "--what", "spectrum"]);
    assert!(!absent.status.success());
    assert!(String::from_utf8_lossy(&absent.stderr).contains("missing stage"));
}

#[test]
fn segment_spectrum_minimum_is_near_pi_squared() {
    let dir = tempfile::tempdir().unwrap();
    let run = currents(&[
        "run",
        path(&scenario("segment-spectrum.toml")),
        "--out",
        path(dir.path()),
    ]);
    assert!(run.status.success());
    let plot = currents(&["plot", path(dir.path()), "--what", "spectrum"]);
    let text = String::from_utf8(plot.stdout).unwrap();
    let first: f64 = text.lines().nth(1).unwrap().split(' ').nth(1).unwrap().parse().unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    assert!((first - pi2).abs() < 0.01 * pi2);
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        "name = \"bad\"\n[complex]\nextent = [0, 2]\n[sigma]\nkind = \"row\"\nrow = 0\n[integrand]\nkind = \"area\"\n",
    )
    .unwrap();
    let out = dir.path().join("bundle");
    let run = currents(&["run", path(&config), "--out", path(&out)]);
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(!out.exists());
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let config = scenario("strip-5x3.toml");
    assert!(currents(&["run", path(&config), "--out", path(&a), "--jobs", "1"])
        .status
        .success());
    assert!(currents(&["run", path(&config), "--out", path(&b), "--jobs", "4"])
        .status
        .success());
    for file in [
        "selection.csv",
        "lambda_sweep.csv",
        "profile.csv",
        "spectrum.csv",
        "summary.json",
    ] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_currents"))
        .args(["run", path(&scenario("unit-cell.toml"))])
        .env("CURRENTS_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(dir.path().join("unit-cell").join("summary.json").is_file());
}

#[test]
fn oracle_agrees_with_pruned_search() {
    let run = currents(&["oracle", path(&scenario("unit-cell.toml"))]);
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stdout).contains(", 0 mismatches"));
}

#[test]
fn failing_expectation_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("unit-cell.toml"))
        .unwrap()
        .replace("c_fit = 2.0", "c_fit = 3.0");
    let config = dir.path().join("wrong.toml");
    std::fs::write(&config, text).unwrap();
    let run = currents(&["run", path(&config), "--out", path(&dir.path().join("o"))]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stdout).contains("FAIL expected C_fit"));
}
