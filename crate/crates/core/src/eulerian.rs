//! Passage between vehicle positions and Eulerian densities: equal-mass
//! placement of vehicles from an initial profile, the piecewise-constant
//! density `rho_ell(t, x)`, the Lagrangian lattice function, and exact
//! integration of step functions on the periodic domain.

use std::f64::consts::PI;

use crate::dynamics::RingState;
use crate::error::{FtlError, Result};
use crate::godunov::UniformGrid;
use crate::ring_ops::{stable_sum, tv_periodic, PeriodicSeq};

/// Relative accuracy of the bisection used to invert smooth cumulative masses.
const INVERSION_TOL: f64 = 1e-12;

/// Slack when comparing periods of two fields.
const PERIOD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileShape {
    /// `values[i]` on `[breaks[i], breaks[i+1])`, the last value up to `P`.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// `mean + amplitude * sin(2 pi wavenumber x / P)`.
    Sinusoid {
        mean: f64,
        amplitude: f64,
        wavenumber: u32,
    },
}

/// A `P`-periodic initial density with a certified lower bound `nu > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialProfile {
    shape: ProfileShape,
    period: f64,
    nu: f64,
}

impl InitialProfile {
    pub fn piecewise(period: f64, breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(FtlError::Config(format!("profile period {period} must be positive")));
        }
        if breaks.is_empty() || breaks.len() != values.len() {
            return Err(FtlError::Config(format!(
                "piecewise profile needs matching breaks and values ({} vs {})",
                breaks.len(),
                values.len()
            )));
        }
        if breaks[0] != 0.0 {
            return Err(FtlError::Config("first profile break must be 0".into()));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) || !(breaks[breaks.len() - 1] < period) {
            return Err(FtlError::Config(
                "profile breaks must be strictly increasing within [0, P)".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(**v <= 1.0) || !v.is_finite()) {
            return Err(FtlError::Config(format!("profile value {v} exceeds the jam density 1")));
        }
        let nu = values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            shape: ProfileShape::PiecewiseConstant { breaks, values },
            period,
            nu,
        })
    }

    pub fn sinusoid(period: f64, mean: f64, amplitude: f64, wavenumber: u32) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(FtlError::Config(format!("profile period {period} must be positive")));
        }
        if wavenumber == 0 {
            return Err(FtlError::Config("sinusoid wavenumber must be >= 1".into()));
        }
        if !(mean + amplitude.abs() <= 1.0) {
            return Err(FtlError::Config(format!(
                "sinusoid maximum {} exceeds the jam density 1",
                mean + amplitude.abs()
            )));
        }
        Ok(Self {
            shape: ProfileShape::Sinusoid {
                mean,
                amplitude,
                wavenumber,
            },
            period,
            nu: mean - amplitude.abs(),
        })
    }

    /// The profile on `[-2, 2]` equal to 1 on `|x| < 0.5` and 0.05
    /// elsewhere, shifted to `[0, 4)`.
    pub fn figure1() -> Self {
        Self::piecewise(4.0, vec![0.0, 1.5, 2.5], vec![0.05, 1.0, 0.05])
            .expect("figure-1 profile is valid")
    }

    /// Replace the lower bound `nu` with an explicitly certified value.
    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn shape(&self) -> &ProfileShape {
        &self.shape
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.rem_euclid(self.period);
        match &self.shape {
            ProfileShape::PiecewiseConstant { breaks, values } => {
                let idx = breaks.partition_point(|&b| b <= x);
                values[idx.saturating_sub(1)]
            }
            ProfileShape::Sinusoid {
                mean,
                amplitude,
                wavenumber,
            } => mean + amplitude * (2.0 * PI * *wavenumber as f64 * x / self.period).sin(),
        }
    }

    pub fn inf(&self) -> f64 {
        match &self.shape {
            ProfileShape::PiecewiseConstant { values, .. } => {
                values.iter().copied().fold(f64::INFINITY, f64::min)
            }
            ProfileShape::Sinusoid { mean, amplitude, .. } => mean - amplitude.abs(),
        }
    }

    pub fn sup(&self) -> f64 {
        match &self.shape {
            ProfileShape::PiecewiseConstant { values, .. } => {
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
            ProfileShape::Sinusoid { mean, amplitude, .. } => mean + amplitude.abs(),
        }
    }

    /// Total variation over one period, including the wrap jump.
    pub fn tv(&self) -> f64 {
        match &self.shape {
            ProfileShape::PiecewiseConstant { values, .. } => {
                tv_periodic(&PeriodicSeq::from_vec(values.clone()))
            }
            ProfileShape::Sinusoid {
                amplitude,
                wavenumber,
                ..
            } => 4.0 * amplitude.abs() * *wavenumber as f64,
        }
    }

    /// `int_0^x rho_0` for `x` in `[0, P]`.
    pub fn cumulative(&self, x: f64) -> f64 {
        match &self.shape {
            ProfileShape::PiecewiseConstant { breaks, values } => {
                let mut acc = 0.0;
                for (i, (&b, &v)) in breaks.iter().zip(values).enumerate() {
                    let end = breaks.get(i + 1).copied().unwrap_or(self.period);
                    if x <= b {
                        break;
                    }
                    acc += (x.min(end) - b) * v;
                }
                acc
            }
            ProfileShape::Sinusoid {
                mean,
                amplitude,
                wavenumber,
            } => {
                let omega = 2.0 * PI * *wavenumber as f64 / self.period;
                mean * x + amplitude / omega * (1.0 - (omega * x).cos())
            }
        }
    }

    pub fn mass(&self) -> f64 {
        match &self.shape {
            ProfileShape::Sinusoid { mean, .. } => mean * self.period,
            ProfileShape::PiecewiseConstant { .. } => self.cumulative(self.period),
        }
    }

    /// Exact cell averages on `cells` uniform cells.
    pub fn cell_averages(&self, cells: usize) -> Result<UniformGrid> {
        if cells == 0 {
            return Err(FtlError::Config("grid needs at least one cell".into()));
        }
        let h = self.period / cells as f64;
        let edges = grid_edges(self.period, cells);
        let avg = edges
            .windows(2)
            .map(|e| (self.cumulative(e[1]) - self.cumulative(e[0])) / h)
            .collect();
        UniformGrid::new(self.period, avg, 0.0)
    }

    /// The profile as a step function, when it is one.
    pub fn step_field(&self) -> Option<StepField> {
        match &self.shape {
            ProfileShape::PiecewiseConstant { breaks, values } => Some(StepField {
                period: self.period,
                knots: breaks.clone(),
                values: values.clone(),
            }),
            ProfileShape::Sinusoid { .. } => None,
        }
    }

    fn check_vacuum(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(FtlError::Vacuum(format!("lower bound nu = {} must be positive", self.nu)));
        }
        if self.inf() < self.nu {
            return Err(FtlError::Vacuum(format!(
                "min rho_0 = {} is below the certified bound nu = {}",
                self.inf(),
                self.nu
            )));
        }
        Ok(())
    }

    /// Smallest `x` in `[lo, P]` with `cumulative(x) = target`.
    fn invert(&self, target: f64, lo: f64) -> Result<f64> {
        match &self.shape {
            ProfileShape::PiecewiseConstant { breaks, values } => {
                let mut acc = 0.0;
                for (i, (&b, &v)) in breaks.iter().zip(values).enumerate() {
                    let end = breaks.get(i + 1).copied().unwrap_or(self.period);
                    let seg = (end - b) * v;
                    if target < acc + seg || i + 1 == breaks.len() {
                        return Ok(b + (target - acc) / v);
                    }
                    acc += seg;
                }
                Err(FtlError::Numerical("cumulative mass inversion ran off the profile".into()))
            }
            ProfileShape::Sinusoid { .. } => {
                let (mut a, mut b) = (lo, self.period);
                if self.cumulative(a) > target || self.cumulative(b) < target {
                    return Err(FtlError::Numerical(format!(
                        "mass {target} not bracketed in [{a}, {b}]"
                    )));
                }
                while b - a > INVERSION_TOL * self.period {
                    let mid = 0.5 * (a + b);
                    if self.cumulative(mid) < target {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                Ok(0.5 * (a + b))
            }
        }
    }
}

fn grid_edges(period: f64, cells: usize) -> Vec<f64> {
    (0..=cells)
        .map(|j| {
            if j == cells {
                period
            } else {
                j as f64 * period / cells as f64
            }
        })
        .collect()
}

/// Place `m` vehicles so each carries mass `ell = (int_0^P rho_0) / m`,
/// starting from `x_0 = 0`.
pub fn equal_mass_partition(profile: &InitialProfile, m: usize) -> Result<(RingState, f64)> {
    profile.check_vacuum()?;
    if m == 0 {
        return Err(FtlError::Config("need at least one vehicle".into()));
    }
    let mass = profile.mass();
    let ell = mass / m as f64;
    let mut positions = Vec::with_capacity(m);
    let mut prev = 0.0;
    for i in 0..m {
        let x = if i == 0 { 0.0 } else { profile.invert(i as f64 * ell, prev)? };
        positions.push(x);
        prev = x;
    }
    let state = RingState::new(ell, profile.period(), positions, 0.0).map_err(|e| {
        FtlError::Numerical(format!("partition produced an invalid ring state: {e}"))
    })?;
    Ok((state, ell))
}

/// Number of vehicles closest to a target vehicle length, and the exact
/// length it implies.
pub fn vehicles_for_target_ell(profile: &InitialProfile, target_ell: f64) -> Result<(usize, f64)> {
    if !(target_ell > 0.0) {
        return Err(FtlError::Config(format!("target ell {target_ell} must be positive")));
    }
    let mass = profile.mass();
    let m = (mass / target_ell).round().max(1.0) as usize;
    Ok((m, mass / m as f64))
}

/// A `P`-periodic step function. `values[i]` holds on
/// `[knots[i], knots[i+1])`; the last value also covers `[0, knots[0])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepField {
    period: f64,
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl StepField {
    pub fn new(period: f64, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(FtlError::LengthMismatch {
                left: knots.len(),
                right: values.len(),
            });
        }
        if knots.windows(2).any(|w| w[1] < w[0])
            || !(knots[0] >= 0.0)
            || !(knots[knots.len() - 1] < period)
        {
            return Err(FtlError::Domain("knots must be sorted within [0, P)".into()));
        }
        Ok(Self {
            period,
            knots,
            values,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.rem_euclid(self.period);
        let idx = self.knots.partition_point(|&k| k <= x);
        if idx == 0 {
            self.values[self.values.len() - 1]
        } else {
            self.values[idx - 1]
        }
    }

    fn prefix(&self) -> Vec<f64> {
        let last = self.values[self.values.len() - 1];
        let mut cum = Vec::with_capacity(self.knots.len());
        let mut acc = self.knots[0] * last;
        cum.push(acc);
        for i in 1..self.knots.len() {
            acc += (self.knots[i] - self.knots[i - 1]) * self.values[i - 1];
            cum.push(acc);
        }
        cum
    }

    fn antiderivative(&self, prefix: &[f64], x: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k <= x);
        if idx == 0 {
            x * self.values[self.values.len() - 1]
        } else {
            prefix[idx - 1] + (x - self.knots[idx - 1]) * self.values[idx - 1]
        }
    }

    /// `int_0^P`.
    pub fn integral(&self) -> f64 {
        let prefix = self.prefix();
        self.antiderivative(&prefix, self.period)
    }
}

/// Anything representable as a periodic step function.
pub trait PiecewiseConstant {
    fn period(&self) -> f64;
    fn step_field(&self) -> StepField;
}

impl PiecewiseConstant for StepField {
    fn period(&self) -> f64 {
        self.period
    }
    fn step_field(&self) -> StepField {
        self.clone()
    }
}

impl PiecewiseConstant for UniformGrid {
    fn period(&self) -> f64 {
        UniformGrid::period(self)
    }
    fn step_field(&self) -> StepField {
        let edges = grid_edges(self.period(), self.cells());
        StepField {
            period: self.period(),
            knots: edges[..self.cells()].to_vec(),
            values: self.averages().to_vec(),
        }
    }
}

/// Eulerian density `rho_ell(t, .)`: value `ell / gap_i` on
/// `[x_i, x_{i+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    period: f64,
    ell: f64,
    t: f64,
}

impl DensityField {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `int_0^P rho_ell`, equal to `M ell` by construction.
    pub fn mass(&self) -> f64 {
        let gaps: Vec<f64> = self.values.iter().map(|rho| self.ell / rho).collect();
        let terms: Vec<f64> = self.values.iter().zip(&gaps).map(|(r, g)| r * g).collect();
        stable_sum(&terms)
    }

    /// Total variation of the value sequence, wrap jump included.
    pub fn tv(&self) -> f64 {
        tv_periodic(&PeriodicSeq::from_vec(self.values.clone()))
    }
}

impl PiecewiseConstant for DensityField {
    fn period(&self) -> f64 {
        self.period
    }

    fn step_field(&self) -> StepField {
        let p = self.period;
        let split = self.breakpoints.partition_point(|&x| x < p);
        let mut knots = Vec::with_capacity(self.breakpoints.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in (split..self.breakpoints.len()).chain(0..split) {
            let x = self.breakpoints[i];
            knots.push(if x >= p { x - p } else { x });
            values.push(self.values[i]);
        }
        StepField {
            period: p,
            knots,
            values,
        }
    }
}

pub fn density_field(state: &RingState) -> DensityField {
    DensityField {
        breakpoints: state.positions().to_vec(),
        values: state.densities().into_vec(),
        period: state.period(),
        ell: state.ell(),
        t: state.t(),
    }
}

/// Spacings `y_i` laid out on cells of width `1/M` over `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    pub values: PeriodicSeq,
    pub cell_width: f64,
}

impl LatticeFunction {
    pub fn l1_distance(&self, other: &LatticeFunction) -> Result<f64> {
        let w = vec![self.cell_width; self.values.len()];
        crate::ring_ops::l1_weighted(&self.values, &other.values, &w)
    }

    pub fn tv(&self) -> f64 {
        tv_periodic(&self.values)
    }
}

pub fn lattice_y(state: &RingState) -> LatticeFunction {
    LatticeFunction {
        cell_width: 1.0 / state.len() as f64,
        values: state.spacings(),
    }
}

/// Exact cell averages of a step function on `cells` uniform cells.
pub fn resample_to_grid<F: PiecewiseConstant + ?Sized>(field: &F, cells: usize) -> Result<UniformGrid> {
    if cells == 0 {
        return Err(FtlError::Config("grid needs at least one cell".into()));
    }
    let f = field.step_field();
    let prefix = f.prefix();
    let h = f.period / cells as f64;
    let edges = grid_edges(f.period, cells);
    let anti: Vec<f64> = edges.iter().map(|&e| f.antiderivative(&prefix, e)).collect();
    let avg = anti.windows(2).map(|a| (a[1] - a[0]) / h).collect();
    UniformGrid::new(f.period, avg, 0.0)
}

/// `int_0^P |a - b| dx`, exact on the merged breakpoint set.
pub fn l1_distance_fields<A, B>(a: &A, b: &B) -> Result<f64>
where
    A: PiecewiseConstant + ?Sized,
    B: PiecewiseConstant + ?Sized,
{
    let (fa, fb) = (a.step_field(), b.step_field());
    if (fa.period - fb.period).abs() > PERIOD_TOL * fa.period.max(fb.period) {
        return Err(FtlError::Domain(format!(
            "period mismatch: {} vs {}",
            fa.period, fb.period
        )));
    }
    let p = fa.period;
    let mut cuts: Vec<f64> = Vec::with_capacity(fa.knots.len() + fb.knots.len() + 2);
    cuts.push(0.0);
    cuts.extend_from_slice(&fa.knots);
    cuts.extend_from_slice(&fb.knots);
    cuts.push(p);
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    let terms: Vec<f64> = cuts
        .windows(2)
        .filter(|c| c[1] > c[0])
        .map(|c| {
            let mid = 0.5 * (c[0] + c[1]);
            (fa.eval(mid) - fb.eval(mid)).abs() * (c[1] - c[0])
        })
        .collect();
    Ok(stable_sum(&terms))
}
