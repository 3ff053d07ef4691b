//! Time-series diagnostics of ring trajectories: total variation, entropy
//! functionals, density and gap extremes, and distances between solutions.

use std::sync::Arc;

use crate::dynamics::{speeds, RingState, Trajectory};
use crate::error::{FtlError, Result};
use crate::eulerian::{density_field, l1_distance_fields, resample_to_grid};
use crate::godunov::UniformGrid;
use crate::ring_ops::{stable_sum, tv_periodic};
use crate::velocity::{kruzkov_pair, EntropyPair, Quadratic, VelocityLaw, VelocityModel, WeightProfile};

/// Kruzkov levels of the default y-space entropy battery.
pub const BATTERY_KRUZKOV_LEVELS: [f64; 5] = [1.25, 1.5, 2.0, 3.0, 5.0];

/// `s^2` plus Kruzkov entropies at [`BATTERY_KRUZKOV_LEVELS`].
pub fn default_entropy_battery(model: &VelocityModel) -> Vec<EntropyPair> {
    let mut battery = vec![EntropyPair::new(Arc::new(Quadratic), model.clone())];
    battery.extend(BATTERY_KRUZKOV_LEVELS.iter().map(|&k| kruzkov_pair(model, k)));
    battery
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub tv_rho: f64,
    pub tv_y: f64,
    /// `ell * sum_i eta(y_i)` for each configured entropy.
    pub entropy: Vec<f64>,
    pub rho_min: f64,
    pub rho_max: f64,
    pub gap_min_over_ell: f64,
    pub speed_min: f64,
    pub l1_vs_ref: Option<f64>,
}

/// `ell * sum_i eta(y_i)`.
pub fn entropy_functional(state: &RingState, pair: &EntropyPair) -> f64 {
    let terms: Vec<f64> = state.spacings().values().iter().map(|&y| pair.eta(y)).collect();
    state.ell() * stable_sum(&terms)
}

/// All diagnostics of one snapshot. A pure function of its arguments.
pub fn record(
    state: &RingState,
    w: &WeightProfile,
    m: &dyn VelocityLaw,
    entropies: &[EntropyPair],
    reference: Option<&UniformGrid>,
) -> Result<DiagnosticsRecord> {
    let rho = state.densities();
    let l1_vs_ref = match reference {
        Some(grid) => {
            let sampled = resample_to_grid(&density_field(state), grid.cells())?;
            Some(l1_distance_fields(&sampled, grid)?)
        }
        None => None,
    };
    Ok(DiagnosticsRecord {
        t: state.t(),
        tv_rho: tv_periodic(&rho),
        tv_y: tv_periodic(&state.spacings()),
        entropy: entropies.iter().map(|p| entropy_functional(state, p)).collect(),
        rho_min: rho.min(),
        rho_max: rho.max(),
        gap_min_over_ell: state.min_gap_over_ell(),
        speed_min: speeds(state, w, m)?.min(),
        l1_vs_ref,
    })
}

/// A failed monotonicity or bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub quantity: String,
    pub t: f64,
    /// Snapshot index in the series.
    pub index: usize,
    /// Amount by which the tolerance was exceeded.
    pub magnitude: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} increased by {:.3e} at t = {} (snapshot {})",
            self.quantity, self.magnitude, self.t, self.index
        )
    }
}

/// First index where `values` rises by more than `tol` over its running
/// predecessor.
pub fn first_increase(quantity: &str, times: &[f64], values: &[f64], tol: f64) -> Option<Violation> {
    values.windows(2).enumerate().find_map(|(i, w)| {
        let rise = w[1] - w[0];
        (rise > tol).then(|| Violation {
            quantity: quantity.to_string(),
            t: times[i + 1],
            index: i + 1,
            magnitude: rise,
        })
    })
}

fn snapshot_series(traj: &Trajectory, f: impl Fn(&RingState) -> f64) -> (Vec<f64>, Vec<f64>) {
    traj.snapshots.iter().map(|s| (s.t(), f(s))).unzip()
}

/// Whether `tv_rho` is non-increasing along a trajectory with `N = 1`.
pub fn tvd_check_n1(traj: &Trajectory, tol: f64) -> Result<Option<Violation>> {
    if traj.weights.n() != 1 {
        return Err(FtlError::Usage(format!(
            "TV diminishing is only expected for N = 1, trajectory has N = {}",
            traj.weights.n()
        )));
    }
    let (t, tv) = snapshot_series(traj, |s| tv_periodic(&s.densities()));
    Ok(first_increase("tv_rho", &t, &tv, tol))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupReport {
    pub initial: f64,
    pub max: f64,
    pub t_max: f64,
    pub exceeds_initial: bool,
}

/// Relative growth of `tv_rho` below which an increase counts as rounding.
pub const TV_ROUNDING: f64 = 1e-12;

/// Supremum of `tv_rho` over the snapshots, compared with its first value.
/// Growth within [`TV_ROUNDING`] of the initial value (or of 1, whichever
/// is larger) is not an exceedance.
pub fn tv_blowup_check(traj: &Trajectory) -> BlowupReport {
    let (t, tv) = snapshot_series(traj, |s| tv_periodic(&s.densities()));
    let initial = tv.first().copied().unwrap_or(0.0);
    let (mut max, mut t_max) = (initial, t.first().copied().unwrap_or(0.0));
    for (&ti, &v) in t.iter().zip(&tv) {
        if v > max {
            max = v;
            t_max = ti;
        }
    }
    BlowupReport {
        initial,
        max,
        t_max,
        exceeds_initial: max - initial > TV_ROUNDING * initial.max(1.0),
    }
}

/// First increase of any entropy functional along the snapshots.
pub fn entropy_decay_check(traj: &Trajectory, entropies: &[EntropyPair], tol: f64) -> Option<Violation> {
    entropies.iter().find_map(|pair| {
        let (t, e) = snapshot_series(traj, |s| entropy_functional(s, pair));
        first_increase(&format!("entropy {}", pair.name()), &t, &e, tol)
    })
}

fn check_pair(a: &RingState, b: &RingState) -> Result<()> {
    if a.len() != b.len() {
        return Err(FtlError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if (a.ell() - b.ell()).abs() > 1e-12 * a.ell().max(b.ell()) {
        return Err(FtlError::InvalidState(format!(
            "solutions have different vehicle lengths {} and {}",
            a.ell(),
            b.ell()
        )));
    }
    Ok(())
}

/// `ell * sum_i |y_i - z_i|`.
pub fn y_l1_distance(a: &RingState, b: &RingState) -> Result<f64> {
    check_pair(a, b)?;
    let terms: Vec<f64> = a
        .spacings()
        .values()
        .iter()
        .zip(b.spacings().values())
        .map(|(y, z)| (y - z).abs())
        .collect();
    Ok(a.ell() * stable_sum(&terms))
}

/// `sum_i |rho_i - rho~_i|`, the index-matched density distance.
pub fn index_density_distance(a: &RingState, b: &RingState) -> Result<f64> {
    check_pair(a, b)?;
    let terms: Vec<f64> = a
        .densities()
        .values()
        .iter()
        .zip(b.densities().values())
        .map(|(r, s)| (r - s).abs())
        .collect();
    Ok(stable_sum(&terms))
}

/// `int |rho_ell(a) - rho_ell(b)| dx` between two snapshots.
pub fn eulerian_distance(a: &RingState, b: &RingState) -> Result<f64> {
    l1_distance_fields(&density_field(a), &density_field(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, uniform_samples, Rk4, Run, StepBound};
    use crate::velocity::greenshields;

    fn three_car() -> RingState {
        RingState::from_gaps(0.5, &[0.5, 1.0, 1.5], 0.0, 0.0).unwrap()
    }

    fn run_traj(init: &RingState, w: &WeightProfile, horizon: f64) -> Trajectory {
        let g = greenshields();
        let run = Run {
            weights: w,
            model: &*g,
            stepper: &Rk4,
            dt: init.ell() / 10.0,
            bound: StepBound::Strict,
        };
        simulate(run, init, horizon, &uniform_samples(0.0, horizon, 21)).unwrap()
    }

    #[test]
    fn uniform_record() {
        let g = greenshields();
        let s = RingState::uniform(8, 0.1, 2.0).unwrap();
        let battery = default_entropy_battery(&g);
        let r = record(&s, &WeightProfile::uniform(2, 0.0).unwrap(), &*g, &battery, None).unwrap();
        assert_eq!(r.tv_rho, 0.0);
        assert_eq!(r.tv_y, 0.0);
        let y: f64 = 2.5;
        assert!((r.entropy[0] - 8.0 * 0.1 * y * y).abs() < 1e-12);
        assert!((r.entropy[1] - 0.8 * (y - 1.25)).abs() < 1e-12);
        assert!((r.gap_min_over_ell - 2.5).abs() < 1e-12);
        assert!(r.l1_vs_ref.is_none());
    }

    #[test]
    fn three_car_record() {
        let g = greenshields();
        let s = three_car();
        let w = WeightProfile::classical(0.0).unwrap();
        let r = record(&s, &w, &*g, &[], None).unwrap();
        assert!((r.tv_rho - 4.0 / 3.0).abs() < 1e-15);
        assert!((r.tv_y - 4.0).abs() < 1e-15);
        assert_eq!(r.gap_min_over_ell, 1.0);
        assert_eq!((r.rho_min, r.rho_max), (1.0 / 3.0, 1.0));
        assert_eq!(r.speed_min, 0.0);
        assert!(r.entropy.is_empty());
    }

    #[test]
    fn record_is_reproducible() {
        let g = greenshields();
        let s = three_car();
        let w = WeightProfile::classical(0.5).unwrap();
        let battery = default_entropy_battery(&g);
        let grid = UniformGrid::constant(3.0, 12, 0.5).unwrap();
        let a = record(&s, &w, &*g, &battery, Some(&grid)).unwrap();
        let b = record(&s.clone(), &w, &*g, &battery, Some(&grid)).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert!(a.l1_vs_ref.unwrap() > 0.0);
    }

    #[test]
    fn tvd_guard_and_constant_case() {
        let s = RingState::uniform(8, 0.1, 2.0).unwrap();
        let traj = run_traj(&s, &WeightProfile::classical(0.5).unwrap(), 0.5);
        assert_eq!(tvd_check_n1(&traj, 1e-6).unwrap(), None);
        let b = tv_blowup_check(&traj);
        assert!(b.max < 1e-12 && !b.exceeds_initial);
        let traj = run_traj(&s, &WeightProfile::uniform(3, 0.0).unwrap(), 0.1);
        assert!(matches!(tvd_check_n1(&traj, 1e-6), Err(FtlError::Usage(_))));
    }

    #[test]
    fn tvd_holds_for_n1() {
        let gaps: Vec<f64> = (0..24).map(|i| 1.0 + (i * 7 % 5) as f64 * 0.4).collect();
        let s = RingState::from_gaps(0.1, &gaps.iter().map(|g| g * 0.1).collect::<Vec<_>>(), 0.0, 0.0).unwrap();
        for kappa in [0.0, 0.5] {
            let traj = run_traj(&s, &WeightProfile::classical(kappa).unwrap(), 2.0);
            assert_eq!(tvd_check_n1(&traj, 1e-6).unwrap(), None);
            assert!(!tv_blowup_check(&traj).exceeds_initial);
        }
    }

    #[test]
    fn entropy_decays() {
        let g = greenshields();
        let gaps: Vec<f64> = (0..30).map(|i| 0.1 * (1.0 + (i * 11 % 7) as f64 * 0.5)).collect();
        let s = RingState::from_gaps(0.1, &gaps, 0.0, 0.0).unwrap();
        let traj = run_traj(&s, &WeightProfile::uniform(3, 0.3).unwrap(), 1.0);
        assert_eq!(entropy_decay_check(&traj, &default_entropy_battery(&g), 1e-6), None);
    }

    #[test]
    fn violations_are_located() {
        let v = first_increase("x", &[0.0, 1.0, 2.0], &[1.0, 0.5, 0.75], 1e-6).unwrap();
        assert_eq!((v.index, v.t), (2, 2.0));
        assert!((v.magnitude - 0.25).abs() < 1e-15);
        assert!(v.to_string().contains("t = 2"));
        assert_eq!(first_increase("x", &[0.0, 1.0], &[1.0, 1.0 + 1e-9], 1e-6), None);
    }

    #[test]
    fn pair_distances() {
        let a = three_car();
        let b = RingState::from_gaps(0.5, &[1.0, 1.0, 1.0], 0.0, 0.0).unwrap();
        assert!((y_l1_distance(&a, &b).unwrap() - 0.5 * 2.0).abs() < 1e-15);
        assert!((index_density_distance(&a, &b).unwrap() - (0.5 + 0.0 + 1.0 / 6.0)).abs() < 1e-15);
        assert_eq!(eulerian_distance(&a, &a).unwrap(), 0.0);
        let c = RingState::uniform(4, 0.5, 3.0).unwrap();
        assert!(y_l1_distance(&a, &c).is_err());
    }
}
