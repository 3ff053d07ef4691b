//! End-to-end tests of the `ftl` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ftl(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftl"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FTL_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn figure1_spans_the_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftl(&["figure1"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("diagnostics.csv"));
    assert_eq!(header[..3], ["t", "tv_rho", "tv_y"]);
    assert_eq!(header.last().unwrap(), "l1_vs_ref");
    let t: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(t[0], 0.0);
    assert_eq!(*t.last().unwrap(), 4.0);
    let tv: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((tv[0] - 1.9).abs() < 1e-9);
    assert!(tv.iter().any(|&v| v > 1.9 + 1e-6));
    let manifest = fs::read_to_string(dir.path().join("run_manifest.txt")).unwrap();
    assert!(manifest.contains("vehicles = 52"));
    assert!(manifest.contains("sum to 0.5"));
    // Seventeen significant digits.
    assert!(rows[1][1].split('e').next().unwrap().len() >= 18);
}

#[test]
fn weight_sum_violation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(
        &cfg,
        "weights = 0.25, 0.25, 0\nperiod = 4\nprofile_breaks = 0\nprofile_values = 0.5\nvehicles = 20\n",
    )
    .unwrap();
    let o = ftl(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("weight-sum invariant"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ftl(&["simulate"], dir.path())), 2);
    assert_eq!(code(&ftl(&["simulate", "--preset", "nope"], dir.path())), 2);
    assert_eq!(code(&ftl(&["simulate", "--preset", "smooth", "--set", "colour=red"], dir.path())), 2);
    let o = ftl(&["simulate", "--preset", "smooth", "--set", "dt=ell:2"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("step guard"));
    let o = ftl(&["simulate", "--preset", "smooth", "--set", "profile_mean=0.2"], dir.path());
    assert_eq!(code(&o), 2, "vacuum data: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn collision_exits_3() {
    // Stepping far beyond the guard makes followers overrun their leaders.
    let dir = tempfile::tempdir().unwrap();
    let o = ftl(
        &["simulate", "--preset", "figure1", "--set", "dt=ell:12", "--set", "kappa=0", "--unsafe-dt"],
        dir.path(),
    );
    assert_eq!(code(&o), 2, "beyond even the literal guard is a configuration error");
    let cfg = dir.path().join("tight.cfg");
    fs::write(
        &cfg,
        "weights = uniform:1\nkappa = 1\nperiod = 4\nprofile_breaks = 0, 2\nprofile_values = 1, 0.2\nvehicles = 40\nscheme = euler\ndt = ell:1\nhorizon = 2\n",
    )
    .unwrap();
    let o = ftl(&["simulate", "--config", cfg.to_str().unwrap(), "--unsafe-dt"], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("collision"));
}

#[test]
fn uniform_steady_keeps_gaps() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ftl(&["simulate", "--preset", "uniform-steady"], dir.path())), 0);
    let (_, rows) = read_csv(&dir.path().join("trajectory.csv"));
    let rho: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(rho.iter().all(|&r| (r - 0.5).abs() < 1e-12));
    let (_, diag) = read_csv(&dir.path().join("diagnostics.csv"));
    assert!(diag.iter().all(|r| r[1].parse::<f64>().unwrap() < 1e-12));
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = ftl(&["simulate", "--preset", "random-bv", "--seed", "11"], dir.path());
        assert_eq!(code(&o), 0);
    }
    for name in ["trajectory.csv", "diagnostics.csv", "run_manifest.txt"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let c = tempfile::tempdir().unwrap();
    ftl(&["simulate", "--preset", "random-bv", "--seed", "12"], c.path());
    assert_ne!(fs::read(a.path().join("trajectory.csv")).unwrap(), fs::read(c.path().join("trajectory.csv")).unwrap());
}

#[test]
fn manifest_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&ftl(&["simulate", "--preset", "random-bv", "--seed", "5"], a.path())), 0);
    let manifest = a.path().join("run_manifest.txt");
    assert_eq!(code(&ftl(&["simulate", "--config", manifest.to_str().unwrap()], b.path())), 0);
    for name in ["trajectory.csv", "diagnostics.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn env_var_overrides_out() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ftl"))
        .args(["simulate", "--preset", "uniform-steady", "--out"])
        .arg(flag_dir.path())
        .env("FTL_OUT_DIR", env_dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(env_dir.path().join("diagnostics.csv").exists());
    assert!(!flag_dir.path().join("diagnostics.csv").exists());
}

#[test]
fn converge_writes_orders() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftl(
        &["converge", "--preset", "smooth", "--m-list", "32,64", "--ref-cells", "512", "--set", "horizon=0.5"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("convergence.csv"));
    assert_eq!(header, ["M", "ell", "l1_error", "observed_order"]);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][3], "");
    assert!(rows[1][3].parse::<f64>().unwrap() > 0.0);
    let e: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(e[1] < e[0]);
    let (grid_header, grid) = read_csv(&dir.path().join("reference.csv"));
    assert_eq!(grid_header, ["x_center", "rho"]);
    assert_eq!(grid.len(), 512);

    let single = tempfile::tempdir().unwrap();
    let o = ftl(&["converge", "--preset", "smooth", "--m-list", "32", "--ref-cells", "128", "--set", "horizon=0.2"], single.path());
    assert_eq!(code(&o), 0);
    let (_, rows) = read_csv(&single.path().join("convergence.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][3], "");
    // ref_cells below 4 max(M) is rejected.
    assert_eq!(code(&ftl(&["converge", "--preset", "smooth", "--m-list", "64", "--ref-cells", "128"], single.path())), 2);
}

#[test]
fn godunov_validate_policies() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftl(&["godunov-validate"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("godunov_validation.csv"));
    assert_eq!(header, ["case", "m", "l1_error", "observed_order"]);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().filter(|r| r[1] == "1024").all(|r| r[2].parse::<f64>().unwrap() < 0.02));

    let small = tempfile::tempdir().unwrap();
    let o = ftl(&["godunov-validate", "--m-list", "8"], small.path());
    assert_eq!(code(&o), 0);
    let (_, rows) = read_csv(&small.path().join("godunov_validation.csv"));
    assert!(rows.iter().all(|r| r[2].parse::<f64>().unwrap() > 0.02));

    let o = ftl(&["godunov-validate", "--set", "model=power:2"], dir.path());
    assert_eq!(code(&o), 2);
}
