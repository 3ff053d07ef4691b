//! CSV emission. Every float is written with 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use ftl_core::continuum::{ConvergenceReport, ValidationReport};
use ftl_core::diagnostics::DiagnosticsRecord;
use ftl_core::dynamics::RingState;
use ftl_core::godunov::UniformGrid;

use crate::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>, CliError> {
    fs::create_dir_all(dir)?;
    Ok(csv::Writer::from_path(dir.join(name))?)
}

/// Rows `t, x, rho`, one per vehicle per snapshot.
pub fn write_trajectory(dir: &Path, snapshots: &[RingState]) -> Result<PathBuf, CliError> {
    let mut w = writer(dir, "trajectory.csv")?;
    w.write_record(["t", "x", "rho"])?;
    for s in snapshots {
        for (x, rho) in s.positions().iter().zip(s.densities().values()) {
            w.write_record([num(s.t()), num(*x), num(*rho)])?;
        }
    }
    w.flush()?;
    Ok(dir.join("trajectory.csv"))
}

pub fn write_diagnostics(
    dir: &Path,
    entropy_names: &[String],
    records: &[DiagnosticsRecord],
) -> Result<PathBuf, CliError> {
    let mut w = writer(dir, "diagnostics.csv")?;
    let mut header = vec!["t".to_string(), "tv_rho".into(), "tv_y".into()];
    header.extend(entropy_names.iter().map(|n| format!("entropy_{n}")));
    header.extend(
        ["rho_min", "rho_max", "gap_min_over_ell", "speed_min", "l1_vs_ref"].map(String::from),
    );
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![num(r.t), num(r.tv_rho), num(r.tv_y)];
        row.extend(r.entropy.iter().map(|&e| num(e)));
        row.extend([
            num(r.rho_min),
            num(r.rho_max),
            num(r.gap_min_over_ell),
            num(r.speed_min),
            opt(r.l1_vs_ref),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(dir.join("diagnostics.csv"))
}

pub fn write_convergence(dir: &Path, report: &ConvergenceReport) -> Result<PathBuf, CliError> {
    let mut w = writer(dir, "convergence.csv")?;
    w.write_record(["M", "ell", "l1_error", "observed_order"])?;
    for (case, order) in report.cases.iter().zip(report.observed_orders()) {
        w.write_record([case.vehicles.to_string(), num(case.ell), num(case.l1_error), opt(order)])?;
    }
    w.flush()?;
    Ok(dir.join("convergence.csv"))
}

/// Rows `x_center, rho`.
pub fn write_grid(dir: &Path, name: &str, grid: &UniformGrid) -> Result<PathBuf, CliError> {
    let mut w = writer(dir, name)?;
    w.write_record(["x_center", "rho"])?;
    for (j, &rho) in grid.averages().iter().enumerate() {
        w.write_record([num(grid.center(j)), num(rho)])?;
    }
    w.flush()?;
    Ok(dir.join(name))
}

pub fn write_validation(dir: &Path, report: &ValidationReport) -> Result<PathBuf, CliError> {
    let mut w = writer(dir, "godunov_validation.csv")?;
    w.write_record(["case", "m", "l1_error", "observed_order"])?;
    for row in &report.rows {
        w.write_record([row.case.clone(), row.cells.to_string(), num(row.l1_error), opt(row.observed_order)])?;
    }
    w.flush()?;
    Ok(dir.join("godunov_validation.csv"))
}

pub fn write_manifest(dir: &Path, text: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join("run_manifest.txt");
    fs::write(&path, text)?;
    Ok(path)
}
