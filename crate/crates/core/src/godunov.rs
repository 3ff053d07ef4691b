//! Godunov finite-volume solver for `rho_t + f(rho)_x = 0` on a periodic
//! interval, with an exact Riemann solver for the Greenshields flux.

use crate::error::{FtlError, Result};
use crate::eulerian::{resample_to_grid, StepField};
use crate::ring_ops::stable_sum;
use crate::velocity::VelocityLaw;

/// Slack on `[0, 1]` membership of cell averages and on the CFL test.
const GRID_TOL: f64 = 1e-12;

const GOLDEN_TOL: f64 = 1e-12;

/// Default Courant number.
pub const DEFAULT_CFL: f64 = 0.9;

/// Cell averages on `cells` uniform cells of a `P`-periodic interval.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    period: f64,
    avg: Vec<f64>,
    t: f64,
}

impl UniformGrid {
    pub fn new(period: f64, avg: Vec<f64>, t: f64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(FtlError::InvalidState(format!("grid period {period} must be positive")));
        }
        if avg.is_empty() {
            return Err(FtlError::InvalidState("grid needs at least one cell".into()));
        }
        if let Some((j, v)) = avg
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= -GRID_TOL && **v <= 1.0 + GRID_TOL))
        {
            return Err(FtlError::InvalidState(format!("cell {j} average {v} outside [0, 1]")));
        }
        Ok(Self { period, avg, t })
    }

    pub fn constant(period: f64, cells: usize, value: f64) -> Result<Self> {
        Self::new(period, vec![value; cells], 0.0)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn cells(&self) -> usize {
        self.avg.len()
    }

    pub fn cell_width(&self) -> f64 {
        self.period / self.avg.len() as f64
    }

    pub fn averages(&self) -> &[f64] {
        &self.avg
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.cell_width()
    }

    pub fn mass(&self) -> f64 {
        stable_sum(&self.avg) * self.cell_width()
    }

    pub fn min(&self) -> f64 {
        self.avg.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.avg.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(FtlError::Domain(format!("{name} = {v} outside [0, 1]")))
    }
}

fn golden_extremum(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, maximize: bool) -> f64 {
    let g = |x: f64| if maximize { -f(x) } else { f(x) };
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut gc, mut gd) = (g(c), g(d));
    while (b - a).abs() > GOLDEN_TOL {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    f(0.5 * (a + b))
}

/// Godunov flux without range checks; callers guarantee `a, b` lie in
/// `[0, 1]` up to rounding.
fn flux_unchecked(model: &dyn VelocityLaw, peak: Option<f64>, a: f64, b: f64) -> f64 {
    let (fa, fb) = (model.flux(a), model.flux(b));
    if a <= b {
        match peak {
            Some(_) => fa.min(fb),
            None => fa.min(fb).min(golden_extremum(|r| model.flux(r), a, b, false)),
        }
    } else {
        match peak {
            Some(p) if b <= p && p <= a => model.flux(p),
            Some(_) => fa.max(fb),
            None => fa.max(fb).max(golden_extremum(|r| model.flux(r), b, a, true)),
        }
    }
}

/// Godunov numerical flux `G(a, b)`.
pub fn godunov_flux(model: &dyn VelocityLaw, a: f64, b: f64) -> Result<f64> {
    check_unit("left state", a)?;
    check_unit("right state", b)?;
    Ok(flux_unchecked(model, model.flux_peak(), a, b))
}

/// Largest stable step for a grid at Courant number 1.
pub fn cfl_limit(grid: &UniformGrid, model: &dyn VelocityLaw) -> f64 {
    grid.cell_width() / model.max_char_speed()
}

fn interface_fluxes(avg: &[f64], model: &dyn VelocityLaw) -> Vec<f64> {
    let peak = model.flux_peak();
    let m = avg.len();
    (0..m)
        .map(|j| flux_unchecked(model, peak, avg[j], avg[(j + 1) % m]))
        .collect()
}

/// One Godunov step of length `dt`.
pub fn godunov_step(grid: &UniformGrid, model: &dyn VelocityLaw, dt: f64) -> Result<UniformGrid> {
    let limit = cfl_limit(grid, model);
    if !(dt >= 0.0) || dt > limit * (1.0 + GRID_TOL) {
        return Err(FtlError::Config(format!(
            "CFL violated: dt = {dt} exceeds (P/m)/max|f'| = {limit}"
        )));
    }
    let lambda = dt / grid.cell_width();
    let flux = interface_fluxes(&grid.avg, model);
    let m = grid.avg.len();
    let avg = (0..m)
        .map(|j| grid.avg[j] - lambda * (flux[j] - flux[(j + m - 1) % m]))
        .collect();
    Ok(UniformGrid {
        period: grid.period,
        avg,
        t: grid.t + dt,
    })
}

/// Advance to `grid.t() + horizon` with `dt = cfl (P/m) / max|f'|`, the last
/// step shortened to land exactly.
pub fn solve(rho0: &UniformGrid, model: &dyn VelocityLaw, horizon: f64, cfl: f64) -> Result<UniformGrid> {
    solve_observed(rho0, model, horizon, cfl, |_, _, _| {})
}

/// As [`solve`], calling `observer(before, after, dt)` after every step.
pub fn solve_observed(
    rho0: &UniformGrid,
    model: &dyn VelocityLaw,
    horizon: f64,
    cfl: f64,
    mut observer: impl FnMut(&UniformGrid, &UniformGrid, f64),
) -> Result<UniformGrid> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(FtlError::Config(format!("cfl = {cfl} must lie in (0, 1]")));
    }
    if !(horizon >= 0.0) {
        return Err(FtlError::Config(format!("horizon {horizon} must be non-negative")));
    }
    let dt = cfl * cfl_limit(rho0, model);
    let end = rho0.t + horizon;
    let mut grid = rho0.clone();
    let mut steps = 0usize;
    loop {
        let remaining = end - grid.t;
        if remaining <= dt * 1e-12 {
            break;
        }
        let next = godunov_step(&grid, model, dt.min(remaining)).map_err(|e| FtlError::Step {
            step: steps,
            t: grid.t,
            source: Box::new(e),
        })?;
        observer(&grid, &next, dt.min(remaining));
        grid = next;
        steps += 1;
    }
    grid.t = end;
    Ok(grid)
}

/// Numerical Kruzkov flux `G(a v k, b v k) - G(a ^ k, b ^ k)`.
pub fn kruzkov_flux(model: &dyn VelocityLaw, a: f64, b: f64, k: f64) -> f64 {
    let peak = model.flux_peak();
    flux_unchecked(model, peak, a.max(k), b.max(k)) - flux_unchecked(model, peak, a.min(k), b.min(k))
}

/// Per-cell residuals of the discrete Kruzkov inequality for one step;
/// entropy-consistent schemes make each entry `<= 0` up to rounding.
pub fn kruzkov_residuals(
    before: &UniformGrid,
    after: &UniformGrid,
    model: &dyn VelocityLaw,
    dt: f64,
    k: f64,
) -> Vec<f64> {
    let m = before.avg.len();
    let lambda = dt / before.cell_width();
    let q: Vec<f64> = (0..m)
        .map(|j| kruzkov_flux(model, before.avg[j], before.avg[(j + 1) % m], k))
        .collect();
    (0..m)
        .map(|j| {
            (after.avg[j] - k).abs() - (before.avg[j] - k).abs()
                + lambda * (q[j] - q[(j + m - 1) % m])
        })
        .collect()
}

/// Self-similar entropy solution `rho(x / t)` of a Riemann problem for
/// the Greenshields flux `f = rho (1 - rho)`.
pub fn exact_riemann(model: &dyn VelocityLaw, left: f64, right: f64, xi: f64) -> Result<f64> {
    if model.name() != "greenshields" {
        return Err(FtlError::Unsupported(format!(
            "exact Riemann solutions are implemented for greenshields only, not {}",
            model.name()
        )));
    }
    check_unit("left state", left)?;
    check_unit("right state", right)?;
    let fp = |r: f64| 1.0 - 2.0 * r;
    Ok(if left < right {
        let s = 1.0 - left - right;
        if xi < s {
            left
        } else {
            right
        }
    } else if left > right {
        if xi <= fp(left) {
            left
        } else if xi >= fp(right) {
            right
        } else {
            0.5 * (1.0 - xi)
        }
    } else {
        left
    })
}

/// Periodic Riemann data: `left` on `[0, P/2)`, `right` on `[P/2, P)`.
/// The reverse jump sits at the wrap point, so the exact solution is the
/// superposition of two Riemann fans until they meet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicRiemann {
    pub left: f64,
    pub right: f64,
    pub period: f64,
}

/// Sub-samples per cell when integrating the exact solution.
const ORACLE_SAMPLES: usize = 64;

impl PeriodicRiemann {
    pub fn new(left: f64, right: f64, period: f64) -> Result<Self> {
        check_unit("left state", left)?;
        check_unit("right state", right)?;
        if !(period > 0.0) {
            return Err(FtlError::Config(format!("period {period} must be positive")));
        }
        Ok(Self {
            left,
            right,
            period,
        })
    }

    pub fn initial_grid(&self, cells: usize) -> Result<UniformGrid> {
        let field = StepField::new(self.period, vec![0.0, 0.5 * self.period], vec![self.left, self.right])?;
        resample_to_grid(&field, cells)
    }

    /// Latest time at which the two fans cannot have interacted.
    pub fn valid_until(&self, model: &dyn VelocityLaw) -> f64 {
        0.25 * self.period / model.max_char_speed()
    }

    pub fn exact(&self, model: &dyn VelocityLaw, x: f64, t: f64) -> Result<f64> {
        let p = self.period;
        let x = x.rem_euclid(p);
        if t <= 0.0 {
            return Ok(if x < 0.5 * p { self.left } else { self.right });
        }
        if t > self.valid_until(model) * (1.0 + GRID_TOL) {
            return Err(FtlError::Domain(format!(
                "t = {t} is past the fan interaction time {}",
                self.valid_until(model)
            )));
        }
        if (0.25 * p..0.75 * p).contains(&x) {
            exact_riemann(model, self.left, self.right, (x - 0.5 * p) / t)
        } else {
            let d = if x < 0.25 * p { x } else { x - p };
            exact_riemann(model, self.right, self.left, d / t)
        }
    }

    /// `int_0^P |grid - exact(., grid.t)| dx`, with the exact solution
    /// integrated by 64-point midpoint sub-sampling in each cell.
    pub fn l1_error(&self, grid: &UniformGrid, model: &dyn VelocityLaw) -> Result<f64> {
        let h = grid.cell_width();
        let sub = h / ORACLE_SAMPLES as f64;
        let mut terms = Vec::with_capacity(grid.cells());
        for (j, &avg) in grid.averages().iter().enumerate() {
            let x0 = j as f64 * h;
            let mut cell = 0.0;
            for s in 0..ORACLE_SAMPLES {
                let x = x0 + (s as f64 + 0.5) * sub;
                cell += (avg - self.exact(model, x, grid.t())?).abs();
            }
            terms.push(cell * sub);
        }
        Ok(stable_sum(&terms))
    }
}
