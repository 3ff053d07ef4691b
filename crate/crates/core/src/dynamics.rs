//! Vehicle dynamics on the ring: speeds, the spacing and density
//! right-hand sides, time steppers and trajectory sampling.
//!
//! Positions are kept unwound: `x_0 < x_1 < ... < x_{M-1} < x_0 + P`, with
//! `x_0` re-wrapped into `[0, P)` after each step.

use std::fmt;
use std::sync::Arc;

use crate::error::{FtlError, Result};
use crate::registry::{no_argument, Registry};
use crate::ring_ops::{bar, delta_minus, delta_plus, stable_sum, PeriodicSeq};
use crate::velocity::{VelocityLaw, WeightProfile};

/// Relative slack on the no-overlap condition `gap >= ell`, absorbing
/// floating-point rounding in position updates.
pub const GAP_TOL: f64 = 1e-12;

/// Absolute slack on the same condition in units of `eps * P`: a gap is a
/// difference of two stored positions of magnitude up to `2P`.
pub const GAP_ROUNDING_ULPS: f64 = 32.0;

/// Smallest gap accepted as collision-free on a ring of period `period`.
pub fn gap_floor(ell: f64, period: f64) -> f64 {
    ell * (1.0 - GAP_TOL) - GAP_ROUNDING_ULPS * f64::EPSILON * period
}

/// Relative slack on step-size guards and sample-time landing.
const STEP_TOL: f64 = 1e-12;

/// Positions of `M` vehicles of length `ell` on a ring of period `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingState {
    ell: f64,
    period: f64,
    positions: Vec<f64>,
    t: f64,
}

impl RingState {
    pub fn new(ell: f64, period: f64, positions: Vec<f64>, t: f64) -> Result<Self> {
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(FtlError::InvalidState(format!("vehicle length {ell} must be positive")));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(FtlError::InvalidState(format!("period {period} must be positive")));
        }
        if positions.is_empty() {
            return Err(FtlError::InvalidState("no vehicles".into()));
        }
        if positions.iter().any(|x| !x.is_finite()) || !t.is_finite() {
            return Err(FtlError::InvalidState("non-finite position or time".into()));
        }
        if let Some(i) = (1..positions.len()).find(|&i| positions[i] <= positions[i - 1]) {
            return Err(FtlError::InvalidState(format!(
                "positions must be strictly increasing (x_{} = {} >= x_{i} = {})",
                i - 1,
                positions[i - 1],
                positions[i]
            )));
        }
        let m = positions.len();
        if positions[m - 1] >= positions[0] + period {
            return Err(FtlError::InvalidState(format!(
                "positions span {} which is not below the period {period}",
                positions[m - 1] - positions[0]
            )));
        }
        if m as f64 * ell > period * (1.0 + GAP_TOL) {
            return Err(FtlError::InvalidState(format!(
                "{m} vehicles of length {ell} do not fit on a ring of period {period}"
            )));
        }
        let mut state = Self {
            ell,
            period,
            positions,
            t,
        };
        state.check_gaps()?;
        state.rewrap();
        Ok(state)
    }

    /// Build from consecutive gaps; the period is their sum.
    pub fn from_gaps(ell: f64, gaps: &[f64], x0: f64, t: f64) -> Result<Self> {
        if gaps.is_empty() {
            return Err(FtlError::InvalidState("no vehicles".into()));
        }
        let period = stable_sum(gaps);
        let mut positions = Vec::with_capacity(gaps.len());
        let mut x = x0;
        for g in gaps {
            positions.push(x);
            x += g;
        }
        Self::new(ell, period, positions, t)
    }

    /// `m` equally spaced vehicles starting at 0.
    pub fn uniform(m: usize, ell: f64, period: f64) -> Result<Self> {
        let gap = period / m as f64;
        Self::new(ell, period, (0..m).map(|i| i as f64 * gap).collect(), 0.0)
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Number of vehicles `M`.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Gap from vehicle `i` to vehicle `i + 1`.
    pub fn gaps(&self) -> Vec<f64> {
        gaps_of(&self.positions, self.period)
    }

    /// Normalized spacings `y_i = gap_i / ell`.
    pub fn spacings(&self) -> PeriodicSeq {
        PeriodicSeq::from_vec(self.gaps().into_iter().map(|g| g / self.ell).collect())
    }

    /// Local densities `rho_i = ell / gap_i`.
    pub fn densities(&self) -> PeriodicSeq {
        PeriodicSeq::from_vec(self.gaps().into_iter().map(|g| self.ell / g).collect())
    }

    pub fn min_gap_over_ell(&self) -> f64 {
        self.gaps().into_iter().fold(f64::INFINITY, f64::min) / self.ell
    }

    fn check_gaps(&self) -> Result<()> {
        check_gaps(&self.gaps(), self.ell, self.period)
    }

    fn rewrap(&mut self) {
        let turns = (self.positions[0] / self.period).floor();
        if turns != 0.0 {
            let shift = turns * self.period;
            for x in &mut self.positions {
                *x -= shift;
            }
        }
    }
}

fn gaps_of(positions: &[f64], period: f64) -> Vec<f64> {
    let m = positions.len();
    (0..m)
        .map(|i| {
            if i + 1 < m {
                positions[i + 1] - positions[i]
            } else {
                positions[0] + period - positions[i]
            }
        })
        .collect()
}

fn check_gaps(gaps: &[f64], ell: f64, period: f64) -> Result<()> {
    let floor = gap_floor(ell, period);
    match gaps.iter().position(|&g| !(g >= floor)) {
        Some(index) => Err(FtlError::Collision {
            index,
            gap_over_ell: gaps[index] / ell,
        }),
        None => Ok(()),
    }
}

fn check_stencil(m: usize, w: &WeightProfile) -> Result<()> {
    if m < w.n() + 2 {
        return Err(FtlError::Config(format!(
            "{m} vehicles cannot hold a look-ahead stencil of N = {} (need M >= N + 2)",
            w.n()
        )));
    }
    Ok(())
}

/// `v(ell / gap_i)`, with densities clamped into `[0, 1]`.
fn vehicle_velocities(gaps: &[f64], ell: f64, m: &dyn VelocityLaw) -> Vec<f64> {
    gaps.iter().map(|&g| m.eval((ell / g).min(1.0))).collect()
}

/// Speeds from raw positions without validation; shared by all steppers.
fn raw_speeds(
    positions: &[f64],
    ell: f64,
    period: f64,
    w: &WeightProfile,
    m: &dyn VelocityLaw,
) -> Vec<f64> {
    let v = vehicle_velocities(&gaps_of(positions, period), ell, m);
    let n = v.len();
    let c = w.coeffs();
    let kappa = w.kappa();
    (0..n)
        .map(|i| {
            let ahead: f64 = c
                .iter()
                .enumerate()
                .map(|(j, &cj)| cj * v[(i + j) % n])
                .sum();
            ahead + kappa * (v[i] - v[(i + n - 1) % n])
        })
        .collect()
}

/// Vehicle speeds `sum_j c_j v_{i+j} + kappa (v_i - v_{i-1})`.
pub fn speeds(state: &RingState, w: &WeightProfile, m: &dyn VelocityLaw) -> Result<PeriodicSeq> {
    check_stencil(state.len(), w)?;
    state.check_gaps()?;
    Ok(PeriodicSeq::from_vec(raw_speeds(
        &state.positions,
        state.ell,
        state.period,
        w,
        m,
    )))
}

/// Spacing right-hand side `(Delta+ bar(V)_i + kappa Delta+ Delta- V_i) / ell`.
pub fn rhs_y(state: &RingState, w: &WeightProfile, m: &dyn VelocityLaw) -> Result<PeriodicSeq> {
    check_stencil(state.len(), w)?;
    state.check_gaps()?;
    let v = PeriodicSeq::from_vec(vehicle_velocities(&state.gaps(), state.ell, m));
    let transport = delta_plus(&bar(&v, w));
    let coupling = delta_plus(&delta_minus(&v));
    transport.zip_with(&coupling, |a, b| (a + w.kappa() * b) / state.ell)
}

/// Density right-hand side `-rho_i^2 (Delta+ bar(v)_i + kappa Delta+ Delta- v_i) / ell`.
pub fn rhs_rho(state: &RingState, w: &WeightProfile, m: &dyn VelocityLaw) -> Result<PeriodicSeq> {
    let dy = rhs_y(state, w, m)?;
    state.densities().zip_with(&dy, |rho, d| -rho * rho * d)
}

/// Which step-size guard applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepBound {
    /// `dt <= ell / ((1 + 2 kappa) lip)`.
    #[default]
    Strict,
    /// `dt <= ell`, the literal rule for `kappa = 0`, `lip = 1`.
    Literal,
}

/// Largest admissible step under `bound`.
pub fn step_limit(ell: f64, w: &WeightProfile, m: &dyn VelocityLaw, bound: StepBound) -> f64 {
    match bound {
        StepBound::Strict => ell / ((1.0 + 2.0 * w.kappa()) * m.lip()),
        StepBound::Literal => ell,
    }
}

fn check_step(dt: f64, limit: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(FtlError::Config(format!("time step {dt} must be positive")));
    }
    if dt > limit * (1.0 + STEP_TOL) {
        return Err(FtlError::Config(format!(
            "time step {dt} exceeds the collision guard {limit}"
        )));
    }
    Ok(())
}

/// How the time step is derived from the vehicle length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    Absolute(f64),
    /// `dt = factor * ell`.
    EllMultiple(f64),
    /// `dt = factor * ell / ((1 + 2 kappa) lip)`.
    Guard(f64),
}

impl DtRule {
    pub fn resolve(&self, ell: f64, w: &WeightProfile, m: &dyn VelocityLaw) -> f64 {
        match *self {
            DtRule::Absolute(dt) => dt,
            DtRule::EllMultiple(f) => f * ell,
            DtRule::Guard(f) => f * step_limit(ell, w, m, StepBound::Strict),
        }
    }
}

impl fmt::Display for DtRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DtRule::Absolute(dt) => write!(f, "{dt:?}"),
            DtRule::EllMultiple(k) => write!(f, "ell:{k:?}"),
            DtRule::Guard(k) => write!(f, "guard:{k:?}"),
        }
    }
}

/// A one-step integrator for the position ODE.
pub trait TimeStepper: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Classical order of accuracy.
    fn order(&self) -> u32;

    /// Position increments over one step of length `dt`, together with the
    /// minimum vehicle speed at the start of the step.
    fn increment(
        &self,
        state: &RingState,
        w: &WeightProfile,
        m: &dyn VelocityLaw,
        dt: f64,
    ) -> (Vec<f64>, f64);
}

/// Forward Euler: `x(t + dt) = x(t) + dt * speeds`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euler;

impl TimeStepper for Euler {
    fn name(&self) -> &'static str {
        "euler"
    }

    fn order(&self) -> u32 {
        1
    }

    fn increment(
        &self,
        state: &RingState,
        w: &WeightProfile,
        m: &dyn VelocityLaw,
        dt: f64,
    ) -> (Vec<f64>, f64) {
        let k1 = raw_speeds(&state.positions, state.ell, state.period, w, m);
        let min = k1.iter().copied().fold(f64::INFINITY, f64::min);
        (k1.into_iter().map(|s| dt * s).collect(), min)
    }
}

/// Classical four-stage Runge-Kutta.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rk4;

impl TimeStepper for Rk4 {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn order(&self) -> u32 {
        4
    }

    fn increment(
        &self,
        state: &RingState,
        w: &WeightProfile,
        m: &dyn VelocityLaw,
        dt: f64,
    ) -> (Vec<f64>, f64) {
        let (ell, period) = (state.ell, state.period);
        let x = &state.positions;
        let stage = |k: &[f64], h: f64| -> Vec<f64> {
            let shifted: Vec<f64> = x.iter().zip(k).map(|(xi, ki)| xi + h * ki).collect();
            raw_speeds(&shifted, ell, period, w, m)
        };
        let k1 = raw_speeds(x, ell, period, w, m);
        let k2 = stage(&k1, 0.5 * dt);
        let k3 = stage(&k2, 0.5 * dt);
        let k4 = stage(&k3, dt);
        let min = k1.iter().copied().fold(f64::INFINITY, f64::min);
        let inc = (0..x.len())
            .map(|i| dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        (inc, min)
    }
}

/// Time steppers by name: `euler`, `rk4`.
pub fn stepper_registry() -> Registry<Arc<dyn TimeStepper>> {
    let mut reg: Registry<Arc<dyn TimeStepper>> = Registry::new("time stepper");
    reg.register("euler", |arg| {
        no_argument("euler", arg)?;
        Ok(Arc::new(Euler))
    });
    reg.register("rk4", |arg| {
        no_argument("rk4", arg)?;
        Ok(Arc::new(Rk4))
    });
    reg
}

/// One guarded step. Returns the new state and the minimum start-of-step
/// speed.
pub fn step(
    stepper: &dyn TimeStepper,
    state: &RingState,
    w: &WeightProfile,
    m: &dyn VelocityLaw,
    dt: f64,
    bound: StepBound,
) -> Result<(RingState, f64)> {
    check_step(dt, step_limit(state.ell, w, m, bound))?;
    check_stencil(state.len(), w)?;
    state.check_gaps()?;
    let (inc, min_speed) = stepper.increment(state, w, m, dt);
    let positions: Vec<f64> = state.positions.iter().zip(&inc).map(|(x, d)| x + d).collect();
    check_gaps(&gaps_of(&positions, state.period), state.ell, state.period)?;
    let mut next = RingState {
        ell: state.ell,
        period: state.period,
        positions,
        t: state.t + dt,
    };
    next.rewrap();
    Ok((next, min_speed))
}

pub fn euler_step(
    state: &RingState,
    w: &WeightProfile,
    m: &dyn VelocityLaw,
    dt: f64,
    bound: StepBound,
) -> Result<RingState> {
    step(&Euler, state, w, m, dt, bound).map(|(s, _)| s)
}

pub fn rk4_step(
    state: &RingState,
    w: &WeightProfile,
    m: &dyn VelocityLaw,
    dt: f64,
    bound: StepBound,
) -> Result<RingState> {
    step(&Rk4, state, w, m, dt, bound).map(|(s, _)| s)
}

/// Per-step log entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    /// Minimum vehicle speed at the start of the step (negative values mean
    /// some vehicle moves backwards).
    pub min_speed: f64,
}

/// Snapshots of a simulation at the requested sample times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub weights: WeightProfile,
    pub snapshots: Vec<RingState>,
    pub final_state: RingState,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn min_speed(&self) -> f64 {
        self.steps.iter().map(|s| s.min_speed).fold(f64::INFINITY, f64::min)
    }

    /// Number of steps during which some vehicle had negative speed.
    pub fn reversing_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.min_speed < 0.0).count()
    }
}

/// Parameters shared by every step of a run.
#[derive(Clone, Copy)]
pub struct Run<'a> {
    pub weights: &'a WeightProfile,
    pub model: &'a dyn VelocityLaw,
    pub stepper: &'a dyn TimeStepper,
    pub dt: f64,
    pub bound: StepBound,
}

/// Integrate from `init` over `[t0, t0 + horizon]`, recording a snapshot
/// at each sample time. Steps are shortened (never lengthened) to land on
/// sample times exactly.
pub fn simulate(run: Run<'_>, init: &RingState, horizon: f64, sample_times: &[f64]) -> Result<Trajectory> {
    simulate_observed(run, init, horizon, sample_times, |_| {})
}

/// [`simulate`], calling `observer` on the state after every step.
pub fn simulate_observed(
    run: Run<'_>,
    init: &RingState,
    horizon: f64,
    sample_times: &[f64],
    mut observer: impl FnMut(&RingState),
) -> Result<Trajectory> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(FtlError::Config(format!("horizon {horizon} must be nonnegative")));
    }
    check_step(run.dt, step_limit(init.ell, run.weights, run.model, run.bound))?;
    let t0 = init.t;
    let t_end = t0 + horizon;
    let slack = STEP_TOL * t_end.abs().max(1.0);
    if sample_times.windows(2).any(|p| p[1] < p[0]) {
        return Err(FtlError::Config("sample times must be sorted".into()));
    }
    if let Some(&s) = sample_times.iter().find(|&&s| s < t0 - slack || s > t_end + slack) {
        return Err(FtlError::Config(format!(
            "sample time {s} outside [{t0}, {t_end}]"
        )));
    }

    let mut targets: Vec<(f64, bool)> = sample_times.iter().map(|&s| (s.clamp(t0, t_end), true)).collect();
    targets.push((t_end, false));

    let mut state = init.clone();
    let mut snapshots = Vec::with_capacity(sample_times.len());
    let mut steps = Vec::new();
    for (target, is_sample) in targets {
        // Whole steps followed by one shortened step landing on the target.
        loop {
            let remaining = target - state.t;
            if remaining <= run.dt * STEP_TOL {
                break;
            }
            let h = remaining.min(run.dt);
            let landing = h == remaining;
            let (mut next, min_speed) =
                step(run.stepper, &state, run.weights, run.model, h, run.bound).map_err(|e| {
                    FtlError::Step {
                        step: steps.len(),
                        t: state.t,
                        source: Box::new(e),
                    }
                })?;
            if landing {
                next.t = target;
            }
            steps.push(StepRecord {
                t: next.t,
                dt: h,
                min_speed,
            });
            observer(&next);
            state = next;
        }
        state.t = target;
        if is_sample {
            snapshots.push(state.clone());
        }
    }
    Ok(Trajectory {
        weights: run.weights.clone(),
        snapshots,
        final_state: state,
        steps,
    })
}

/// `count` equally spaced times covering `[t0, t0 + horizon]` inclusive.
pub fn uniform_samples(t0: f64, horizon: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![t0 + horizon],
        _ => (0..count)
            .map(|k| {
                if k + 1 == count {
                    t0 + horizon
                } else {
                    t0 + horizon * k as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}
