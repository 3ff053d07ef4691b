//! Subcommand implementations. Each writes its CSV artifacts and a
//! `run_manifest.txt` into the output directory.

use std::path::{Path, PathBuf};

use ftl_core::continuum::{godunov_validation, run_convergence, ConvergenceSetup, VALIDATION_THRESHOLD_CELLS};
use ftl_core::diagnostics::{default_entropy_battery, record, tv_blowup_check, BlowupReport, DiagnosticsRecord};
use ftl_core::dynamics::{simulate as integrate, uniform_samples, Run};
use ftl_core::eulerian::equal_mass_partition;
use ftl_core::godunov::{solve, UniformGrid};

use crate::config::{ResolvedRun, RunConfig};
use crate::{output, CliError};

/// Environment variable that overrides `--out`.
pub const OUT_DIR_ENV: &str = "FTL_OUT_DIR";

/// Where a command and its configuration came from.
#[derive(Debug, Clone, Default)]
pub struct Sources {
    pub preset: Option<String>,
    pub config: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub unsafe_dt: bool,
    pub literal_weights: bool,
    pub seed: Option<u64>,
}

/// Preset, then config file, then `--set` overrides, then flags.
pub fn build_config(src: &Sources) -> Result<RunConfig, CliError> {
    let mut cfg = match &src.preset {
        Some(name) => RunConfig::preset(name)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &src.config {
        let text = std::fs::read_to_string(path)?;
        cfg.overlay(&RunConfig::parse(&text)?);
    }
    for assignment in &src.overrides {
        cfg.set_assignment(assignment)?;
    }
    if src.unsafe_dt {
        cfg.set("unsafe_dt", "true")?;
    }
    if src.literal_weights {
        cfg.set("literal_weights", "true")?;
    }
    if let Some(seed) = src.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    Ok(cfg)
}

/// `FTL_OUT_DIR`, else `--out`, else `out_dir` from the config, else `out`.
pub fn resolve_out_dir(flag: Option<&Path>, run: &ResolvedRun) -> PathBuf {
    if let Some(env) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(env);
    }
    flag.map(Path::to_path_buf)
        .or_else(|| run.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub records: Vec<DiagnosticsRecord>,
    pub blowup: BlowupReport,
    pub steps: usize,
    pub reversing_steps: usize,
}

pub fn simulate(run: &ResolvedRun, out: &Path, label: &str) -> Result<SimulateSummary, CliError> {
    let (init, _) = equal_mass_partition(&run.profile, run.vehicles)?;
    let times = uniform_samples(0.0, run.horizon, run.samples.max(2));
    let dynamics = Run {
        weights: &run.weights,
        model: &*run.model,
        stepper: &*run.stepper,
        dt: run.dt,
        bound: run.bound,
    };
    let traj = integrate(dynamics, &init, run.horizon, &times)?;

    let battery = default_entropy_battery(&run.model);
    let mut reference: Option<UniformGrid> = if run.reference {
        Some(run.profile.cell_averages(run.ref_cells)?)
    } else {
        None
    };
    let mut records = Vec::with_capacity(traj.snapshots.len());
    for s in &traj.snapshots {
        if let Some(grid) = reference.as_mut() {
            let gap = s.t() - grid.t();
            if gap > 0.0 {
                *grid = solve(grid, &*run.model, gap, run.cfl)?;
            }
        }
        records.push(record(s, &run.weights, &*run.model, &battery, reference.as_ref())?);
    }

    let names: Vec<String> = battery.iter().map(|p| p.name()).collect();
    output::write_trajectory(out, &traj.snapshots)?;
    output::write_diagnostics(out, &names, &records)?;
    output::write_manifest(out, &run.manifest(label))?;
    Ok(SimulateSummary {
        records,
        blowup: tv_blowup_check(&traj),
        steps: traj.steps.len(),
        reversing_steps: traj.reversing_steps(),
    })
}

pub fn converge(run: &ResolvedRun, out: &Path) -> Result<ftl_core::continuum::ConvergenceReport, CliError> {
    let setup = ConvergenceSetup {
        profile: &run.profile,
        weights: &run.weights,
        model: &*run.model,
        stepper: &*run.stepper,
        dt: run.dt_rule,
        bound: run.bound,
        horizon: run.horizon,
        ref_cells: run.ref_cells,
        cfl: run.cfl,
    };
    let report = run_convergence(&setup, &run.m_list)?;
    output::write_convergence(out, &report)?;
    output::write_grid(out, "reference.csv", &report.reference)?;
    output::write_manifest(out, &run.manifest("converge"))?;
    Ok(report)
}

/// Writes the validation table, then fails with a property error if the
/// Godunov errors do not behave.
pub fn godunov_validate(run: &ResolvedRun, out: &Path) -> Result<ftl_core::continuum::ValidationReport, CliError> {
    let report = godunov_validation(&*run.model, &run.godunov_m_list, run.cfl)?;
    output::write_validation(out, &report)?;
    let mut manifest = run.manifest("godunov-validate");
    manifest.push_str(&format!(
        "# note: the error threshold applies to grids with m >= {VALIDATION_THRESHOLD_CELLS}\n"
    ));
    output::write_manifest(out, &manifest)?;
    if !report.passed() {
        return Err(CliError::Property(report.failures.join("; ")));
    }
    Ok(report)
}
