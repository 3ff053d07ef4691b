//! Continuum-limit studies: the particle density against a Godunov
//! reference as `ell -> 0`, and the Godunov solver against exact Riemann
//! solutions as the grid is refined.

use rayon::prelude::*;

use crate::dynamics::{simulate, DtRule, Run, StepBound, TimeStepper};
use crate::error::{FtlError, Result};
use crate::eulerian::{density_field, equal_mass_partition, l1_distance_fields, resample_to_grid, InitialProfile};
use crate::godunov::{solve, PeriodicRiemann, UniformGrid};
use crate::velocity::{VelocityLaw, WeightProfile};

/// Everything a convergence case needs except its vehicle count.
#[derive(Clone, Copy)]
pub struct ConvergenceSetup<'a> {
    pub profile: &'a InitialProfile,
    pub weights: &'a WeightProfile,
    pub model: &'a dyn VelocityLaw,
    pub stepper: &'a dyn TimeStepper,
    pub dt: DtRule,
    pub bound: StepBound,
    pub horizon: f64,
    pub ref_cells: usize,
    pub cfl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCase {
    pub vehicles: usize,
    pub ell: f64,
    pub dt: f64,
    pub l1_error: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub cases: Vec<ConvergenceCase>,
    pub reference: UniformGrid,
}

impl ConvergenceReport {
    /// `log2(e_{k-1} / e_k) / log2(M_k / M_{k-1})`; `None` for the first case.
    pub fn observed_orders(&self) -> Vec<Option<f64>> {
        observed_orders(&self.cases)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.cases.windows(2).all(|w| w[1].l1_error < w[0].l1_error)
    }

    pub fn final_error(&self) -> f64 {
        self.cases.last().map_or(f64::NAN, |c| c.l1_error)
    }
}

pub fn observed_orders(cases: &[ConvergenceCase]) -> Vec<Option<f64>> {
    let mut out = vec![None; cases.len()];
    for k in 1..cases.len() {
        let (a, b) = (&cases[k - 1], &cases[k]);
        let ratio = (b.vehicles as f64 / a.vehicles as f64).ln();
        out[k] = Some((a.l1_error / b.l1_error).ln() / ratio);
    }
    out
}

/// Godunov reference on `ref_cells` cells at the study horizon.
pub fn godunov_reference(setup: &ConvergenceSetup<'_>) -> Result<UniformGrid> {
    let rho0 = setup.profile.cell_averages(setup.ref_cells)?;
    solve(&rho0, setup.model, setup.horizon, setup.cfl)
}

/// One particle run compared with `reference`.
pub fn convergence_case(setup: &ConvergenceSetup<'_>, vehicles: usize, reference: &UniformGrid) -> Result<ConvergenceCase> {
    let (init, ell) = equal_mass_partition(setup.profile, vehicles)?;
    let dt = setup.dt.resolve(ell, setup.weights, setup.model);
    let run = Run {
        weights: setup.weights,
        model: setup.model,
        stepper: setup.stepper,
        dt,
        bound: setup.bound,
    };
    let traj = simulate(run, &init, setup.horizon, &[])?;
    let grid = resample_to_grid(&density_field(&traj.final_state), reference.cells())?;
    Ok(ConvergenceCase {
        vehicles,
        ell,
        dt,
        l1_error: l1_distance_fields(&grid, reference)?,
    })
}

/// Run every vehicle count concurrently; results keep the order of `m_list`.
pub fn run_convergence(setup: &ConvergenceSetup<'_>, m_list: &[usize]) -> Result<ConvergenceReport> {
    if m_list.is_empty() || m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FtlError::Config(format!("m_list {m_list:?} must be non-empty and strictly increasing")));
    }
    let max_m = m_list[m_list.len() - 1];
    if setup.ref_cells < 4 * max_m {
        return Err(FtlError::Config(format!(
            "ref_cells = {} must be at least 4 * max(m_list) = {}",
            setup.ref_cells,
            4 * max_m
        )));
    }
    let reference = godunov_reference(setup)?;
    let cases = m_list
        .par_iter()
        .map(|&m| convergence_case(setup, m, &reference))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport { cases, reference })
}

/// Grid size at which the Riemann error threshold applies.
pub const VALIDATION_THRESHOLD_CELLS: usize = 1024;
pub const VALIDATION_THRESHOLD: f64 = 0.02;
pub const VALIDATION_HORIZON: f64 = 0.5;
pub const VALIDATION_PERIOD: f64 = 4.0;

/// The two standard Riemann cases: a rarefaction through the sonic point
/// and a stationary shock.
pub const RIEMANN_CASES: [(&str, f64, f64); 2] = [("rarefaction", 1.0, 0.05), ("shock", 0.2, 0.8)];

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub case: String,
    pub cells: usize,
    pub l1_error: f64,
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    /// Cases whose errors failed to decrease, or exceeded the threshold.
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Godunov errors against exact Riemann solutions at `T = 0.5` on `P = 4`.
/// Errors must strictly decrease along `m_list`; the threshold applies only
/// when the list reaches [`VALIDATION_THRESHOLD_CELLS`].
pub fn godunov_validation(model: &dyn VelocityLaw, m_list: &[usize], cfl: f64) -> Result<ValidationReport> {
    if m_list.is_empty() || m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FtlError::Config(format!("m_list {m_list:?} must be non-empty and strictly increasing")));
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (name, left, right) in RIEMANN_CASES {
        let problem = PeriodicRiemann::new(left, right, VALIDATION_PERIOD)?;
        let errors = m_list
            .par_iter()
            .map(|&m| {
                let out = solve(&problem.initial_grid(m)?, model, VALIDATION_HORIZON, cfl)?;
                problem.l1_error(&out, model)
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, (&m, &e)) in m_list.iter().zip(&errors).enumerate() {
            let observed_order =
                (k > 0).then(|| (errors[k - 1] / e).ln() / (m as f64 / m_list[k - 1] as f64).ln());
            rows.push(ValidationRow {
                case: name.to_string(),
                cells: m,
                l1_error: e,
                observed_order,
            });
        }
        if errors.windows(2).any(|w| w[1] >= w[0]) {
            failures.push(format!("{name}: errors {errors:?} do not decrease"));
        }
        for (&m, &e) in m_list.iter().zip(&errors) {
            if m >= VALIDATION_THRESHOLD_CELLS && e >= VALIDATION_THRESHOLD {
                failures.push(format!("{name}: error {e:.3e} at m = {m} is not below {VALIDATION_THRESHOLD}"));
            }
        }
    }
    Ok(ValidationReport { rows, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Rk4;
    use crate::velocity::greenshields;

    #[test]
    fn orders_of_exact_halving() {
        let cases: Vec<ConvergenceCase> = [(64, 0.4), (128, 0.2), (256, 0.1)]
            .iter()
            .map(|&(m, e)| ConvergenceCase {
                vehicles: m,
                ell: 1.0 / m as f64,
                dt: 0.0,
                l1_error: e,
            })
            .collect();
        let o = observed_orders(&cases);
        assert_eq!(o[0], None);
        assert!((o[1].unwrap() - 1.0).abs() < 1e-12);
        assert!((o[2].unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(observed_orders(&cases[..1]), vec![None]);
    }

    #[test]
    fn convergence_rejects_bad_lists() {
        let g = greenshields();
        let profile = InitialProfile::sinusoid(4.0, 0.5, 0.3, 1).unwrap();
        let w = WeightProfile::uniform(2, 0.0).unwrap();
        let setup = ConvergenceSetup {
            profile: &profile,
            weights: &w,
            model: &*g,
            stepper: &Rk4,
            dt: DtRule::EllMultiple(0.1),
            bound: StepBound::Strict,
            horizon: 0.2,
            ref_cells: 64,
            cfl: 0.9,
        };
        assert!(run_convergence(&setup, &[32, 16]).is_err());
        assert!(run_convergence(&setup, &[32]).is_err());
        let r = run_convergence(&setup, &[8, 16]).unwrap();
        assert_eq!(r.cases.len(), 2);
        assert_eq!(r.cases[0].vehicles, 8);
        assert!(r.strictly_decreasing(), "{:?}", r.cases);
    }

    #[test]
    fn small_validation_runs_without_threshold() {
        let g = greenshields();
        let r = godunov_validation(&*g, &[8], 0.9).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(|row| row.l1_error > VALIDATION_THRESHOLD));
        assert!(r.passed());
    }
}
