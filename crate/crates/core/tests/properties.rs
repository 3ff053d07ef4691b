//! Property tests of the ring dynamics and its Eulerian reconstruction.

use std::sync::Arc;

use proptest::prelude::*;

use ftl_core::diagnostics::{entropy_functional, eulerian_distance, index_density_distance, y_l1_distance};
use ftl_core::dynamics::{rhs_y, simulate, simulate_observed, step_limit, uniform_samples, Euler, RingState, Rk4, Run, StepBound};
use ftl_core::eulerian::{density_field, equal_mass_partition, lattice_y, InitialProfile};
use ftl_core::ring_ops::{stable_sum, tv_periodic};
use ftl_core::velocity::{greenshields, kruzkov_pair, power_law, EntropyPair, Quadratic, VelocityModel, WeightProfile};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

fn weights_strategy() -> impl Strategy<Value = WeightProfile> {
    (prop::collection::vec(0.01..1.0f64, 1..5), 0.0..1.0f64).prop_map(|(mut raw, kappa)| {
        raw.sort_by(|a, b| b.total_cmp(a));
        let n = raw.len();
        WeightProfile::renormalized(&raw, n, kappa).unwrap()
    })
}

fn model_strategy() -> impl Strategy<Value = VelocityModel> {
    prop_oneof![Just(greenshields()), (1.0..3.0f64).prop_map(|p| power_law(p).unwrap())]
}

/// Ring with `ell = 1/M` and spacings in `[1, 5)`.
fn ring_strategy() -> impl Strategy<Value = RingState> {
    prop::collection::vec(1.0..5.0f64, 8..48).prop_map(|y| {
        let ell = 1.0 / y.len() as f64;
        let gaps: Vec<f64> = y.iter().map(|v| v * ell).collect();
        RingState::from_gaps(ell, &gaps, 0.0, 0.0).unwrap()
    })
}

fn profile_strategy() -> impl Strategy<Value = InitialProfile> {
    prop::collection::vec((0.0..4.0f64, 0.2..=1.0f64), 1..6).prop_map(|pieces| {
        let mut breaks: Vec<f64> = pieces.iter().skip(1).map(|p| p.0).collect();
        breaks.push(0.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let values = pieces.iter().take(breaks.len()).map(|p| p.1).collect();
        InitialProfile::piecewise(4.0, breaks, values).unwrap()
    })
}

fn entropies(model: &VelocityModel) -> Vec<EntropyPair> {
    let mut e = vec![EntropyPair::new(Arc::new(Quadratic), model.clone())];
    e.extend([1.5, 2.0, 3.0].map(|k| kruzkov_pair(model, k)));
    e
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn euler_at_guard_is_collision_free(init in ring_strategy(), w in weights_strategy(), model in model_strategy()) {
        prop_assume!(init.len() >= w.n() + 2);
        let ell = init.ell();
        let period = init.period();
        let run = Run { weights: &w, model: &*model, stepper: &Euler, dt: step_limit(ell, &w, &*model, StepBound::Strict), bound: StepBound::Strict };
        let mut worst = f64::INFINITY;
        let mut sum_err: f64 = 0.0;
        simulate_observed(run, &init, 2.0, &[], |s| {
            worst = worst.min(s.min_gap_over_ell());
            sum_err = sum_err.max((stable_sum(&s.gaps()) - period).abs());
        }).unwrap();
        prop_assert!(worst >= 1.0, "min gap/ell {worst}");
        prop_assert!(sum_err <= 1e-10);
    }

    #[test]
    fn rk4_keeps_spacings_in_range(init in ring_strategy(), w in weights_strategy(), model in model_strategy()) {
        prop_assume!(init.len() >= w.n() + 2);
        let y0 = init.spacings();
        let run = Run { weights: &w, model: &*model, stepper: &Rk4, dt: init.ell() / 10.0, bound: StepBound::Strict };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        simulate_observed(run, &init, 5.0, &[], |s| {
            let y = s.spacings();
            lo = lo.min(y.min());
            hi = hi.max(y.max());
        }).unwrap();
        prop_assert!(lo >= y0.min() - 1e-6 && hi <= y0.max() + 1e-6);
    }

    #[test]
    fn contraction_variation_and_entropy(a in ring_strategy(), perm_seed in any::<u64>(), w in weights_strategy()) {
        prop_assume!(a.len() >= w.n() + 2);
        let model = greenshields();
        let mut gaps = a.gaps();
        // Deterministic permutation of the spacings: same ring, same ell.
        let n = gaps.len();
        for i in (1..n).rev() {
            let j = (perm_seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) >> 33) as usize % (i + 1);
            gaps.swap(i, j);
        }
        let b = RingState::from_gaps(a.ell(), &gaps, 0.0, 0.0).unwrap();
        let run = Run { weights: &w, model: &*model, stepper: &Rk4, dt: a.ell() / 10.0, bound: StepBound::Strict };
        let times = [0.5, 1.0, 2.0];
        let ta = simulate(run, &a, 2.0, &times).unwrap();
        let tb = simulate(run, &b, 2.0, &times).unwrap();
        let d0 = y_l1_distance(&a, &b).unwrap();
        for (sa, sb) in ta.snapshots.iter().zip(&tb.snapshots) {
            prop_assert!(y_l1_distance(sa, sb).unwrap() <= d0 + 1e-6);
            prop_assert!(tv_periodic(&sa.spacings()) <= tv_periodic(&a.spacings()) + 1e-6);
            prop_assert!(lattice_y(sa).tv() <= lattice_y(&a).tv() + 1e-6);
        }
        for e in entropies(&model) {
            let mut prev = entropy_functional(&a, &e);
            for s in &ta.snapshots {
                let now = entropy_functional(s, &e);
                prop_assert!(now <= prev + 1e-6, "{} rose from {prev} to {now}", e.name());
                prev = now;
            }
        }
    }

    #[test]
    fn eulerian_bounds_hold(profile in profile_strategy(), other in profile_strategy(), m in 20usize..80, w in weights_strategy()) {
        prop_assume!(m >= w.n() + 2);
        let model = greenshields();
        let (a, ell) = equal_mass_partition(&profile, m).unwrap();
        let run = Run { weights: &w, model: &*model, stepper: &Rk4, dt: ell / 10.0, bound: StepBound::Strict };
        let times = uniform_samples(0.0, 1.0, 11);
        let ta = simulate(run, &a, 1.0, &times).unwrap();
        let nu = profile.inf();
        let tv0 = tv_periodic(&a.densities());
        let lip = 2.0 * (1.0 + 2.0 * w.kappa()) * model.lip();
        for s in &ta.snapshots {
            let rho = s.densities();
            prop_assert!(rho.min() >= profile.inf() - 1e-6 && rho.max() <= profile.sup() + 1e-6);
            prop_assert!(tv_periodic(&rho) <= tv0 / (nu * nu) + 1e-6);
            prop_assert!((density_field(s).mass() - m as f64 * ell).abs() <= 1e-12 * m as f64 * ell);
            prop_assert!(eulerian_distance(&a, s).unwrap() <= lip * s.t() + 1e-6);
        }
        // A second solution with the same mass, hence the same ell.
        let scale = profile.mass() / other.mass();
        let shape = other.shape().clone();
        if let ftl_core::eulerian::ProfileShape::PiecewiseConstant { breaks, values } = shape {
            let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
            prop_assume!(scaled.iter().all(|&v| v > 0.05 && v <= 1.0));
            let other = InitialProfile::piecewise(4.0, breaks, scaled).unwrap();
            let (b, _) = equal_mass_partition(&other, m).unwrap();
            let tb = simulate(run, &b, 1.0, &times).unwrap();
            let nu = nu.min(other.inf());
            let d0 = index_density_distance(&a, &b).unwrap();
            for (sa, sb) in ta.snapshots.iter().zip(&tb.snapshots) {
                prop_assert!(index_density_distance(sa, sb).unwrap() <= d0 / (nu * nu) + 1e-6);
            }
        }
    }

    #[test]
    fn spacing_and_position_views_agree(init in ring_strategy(), w in weights_strategy()) {
        prop_assume!(init.len() >= w.n() + 2);
        let model = greenshields();
        let ell = init.ell();
        let dt = ell / 10.0;
        let run = Run { weights: &w, model: &*model, stepper: &Rk4, dt, bound: StepBound::Strict };
        let steps = 40;
        let from_x = simulate(run, &init, dt * steps as f64, &[]).unwrap().final_state.spacings();

        // RK4 applied directly to the spacing ODE.
        let rhs = |y: &[f64]| -> Vec<f64> {
            let gaps: Vec<f64> = y.iter().map(|v| v * ell).collect();
            rhs_y(&RingState::from_gaps(ell, &gaps, 0.0, 0.0).unwrap(), &w, &*model).unwrap().into_vec()
        };
        let axpy = |y: &[f64], k: &[f64], h: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + h * b).collect() };
        let mut y = init.spacings().into_vec();
        for _ in 0..steps {
            let k1 = rhs(&y);
            let k2 = rhs(&axpy(&y, &k1, 0.5 * dt));
            let k3 = rhs(&axpy(&y, &k2, 0.5 * dt));
            let k4 = rhs(&axpy(&y, &k3, dt));
            for i in 0..y.len() {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let err = y.iter().zip(from_x.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-8, "views differ by {err}");
    }
}

#[test]
fn uniform_ring_snapshots_share_gaps() {
    let model = greenshields();
    let w = WeightProfile::uniform(3, 0.5).unwrap();
    let init = RingState::uniform(40, 0.05, 4.0).unwrap();
    let run = Run { weights: &w, model: &*model, stepper: &Rk4, dt: 0.005, bound: StepBound::Strict };
    let traj = simulate(run, &init, 3.0, &uniform_samples(0.0, 3.0, 7)).unwrap();
    for s in &traj.snapshots {
        for (g, g0) in s.gaps().iter().zip(init.gaps()) {
            assert!((g - g0).abs() < 1e-12);
        }
    }
}
