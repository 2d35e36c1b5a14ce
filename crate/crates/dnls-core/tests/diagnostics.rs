use std::f64::consts::{LN_2, PI};

use dnls_core::diagnostics::*;
use dnls_core::grid::{ChebGrid, DerivativeBackend};
use dnls_core::integrator::{simulate, uniform_schedule, IntegratorConfig, NormSample, RunStatus, SolverOptions, StepStats, Trajectory};
use dnls_core::model::*;
use dnls_core::weights::{SpatialWeight, TimeWeight};
use num_complex::Complex64;
use proptest::prelude::*;

fn sech(x: f64) -> Complex64 {
    Complex64::new(1.0 / x.cosh(), 0.0)
}

fn sech_state(grid: &ChebGrid) -> FieldState {
    FieldState::from_fn(grid, 0.0, sech)
}

#[test]
fn mass_of_sech() {
    let grid = ChebGrid::new(512, 40.0).unwrap();
    let m = mass(&grid, &sech_state(&grid)).unwrap();
    assert!((m - 2.0).abs() < 1e-10, "{m}");
}

#[test]
fn weighted_l2_with_kinked_weight() {
    let grid = ChebGrid::new(512, 40.0).unwrap();
    let w = SpatialWeight::LinearAbs { x0: 1.0 };
    let v = weighted_l2(&grid, &sech_state(&grid), &w).unwrap();
    let exact = 2.0 + 4.0 * LN_2 + PI * PI / 6.0;
    assert!((v - exact).abs() < 1e-8, "{v} vs {exact}");
}

#[test]
fn weighted_h1_adds_gradient() {
    let grid = ChebGrid::new(512, 40.0).unwrap();
    let h1 = weighted_h1(&grid, &sech_state(&grid), &SpatialWeight::Unit).unwrap();
    // ∫sech² + ∫sech²tanh² = 2 + 2/3
    assert!((h1 - 8.0 / 3.0).abs() < 1e-10, "{h1}");
}

#[test]
fn zero_field_norms_vanish() {
    let grid = ChebGrid::new(64, 10.0).unwrap();
    let z = FieldState::zeros(&grid, 0.0);
    let w = SpatialWeight::LinearAbs { x0: 2.0 };
    assert_eq!(mass(&grid, &z).unwrap(), 0.0);
    assert_eq!(weighted_l2(&grid, &z, &w).unwrap(), 0.0);
    assert_eq!(weighted_h1(&grid, &z, &w).unwrap(), 0.0);
    let driver = DriverSpec::Gaussian(GaussianDriver { amplitude: 1.0, sigma_x: 2.0, sigma_t: 1.0, phase: 0.0, t_center: 0.0 });
    assert_eq!(functional_j(&grid, &z, &w, &driver, 0.3).unwrap(), 0.0);
    let a = agmon_check(&grid, &z, &w).unwrap();
    assert_eq!(a.ratio, 0.0);
    assert!(!a.inconsistent);
}

#[test]
fn mismatched_state_rejected() {
    let grid = ChebGrid::new(64, 10.0).unwrap();
    let bad = FieldState { t: 0.0, values: vec![Complex64::new(0.0, 0.0); 10] };
    assert!(mass(&grid, &bad).is_err());
}

#[test]
fn functional_of_sech() {
    let grid = ChebGrid::new(512, 40.0).unwrap();
    let j = functional_j(&grid, &sech_state(&grid), &SpatialWeight::Unit, &DriverSpec::None, 0.0).unwrap();
    assert!((j + 1.0 / 6.0).abs() < 1e-10, "{j}");
}

#[test]
fn functional_scales_by_term() {
    let grid = ChebGrid::new(256, 30.0).unwrap();
    let w = SpatialWeight::LinearAbs { x0: 5.0 };
    let u = sech_state(&grid);
    let u2 = FieldState::from_fn(&grid, 0.0, |x| sech(x) * 2.0);
    let j1 = functional_j(&grid, &u, &w, &DriverSpec::None, 0.0).unwrap();
    let j2 = functional_j(&grid, &u2, &w, &DriverSpec::None, 0.0).unwrap();
    let grad = weighted_h1(&grid, &u, &w).unwrap() - weighted_l2(&grid, &u, &w).unwrap();
    let quartic = 0.25 * grad - j1;
    assert!((j2 - (4.0 * 0.25 * grad - 16.0 * quartic)).abs() < 1e-10 * j2.abs().max(1.0));
}

#[test]
fn agmon_ratio_of_sech() {
    let grid = ChebGrid::new(512, 40.0).unwrap();
    let a = agmon_check(&grid, &sech_state(&grid), &SpatialWeight::Unit).unwrap();
    assert!((a.lhs - 1.0).abs() < 1e-14);
    assert!((a.rhs - 2.0 / 3f64.sqrt()).abs() < 1e-10, "{}", a.rhs);
    assert!((a.ratio - 3f64.sqrt() / 2.0).abs() < 1e-10);
}

#[test]
fn agmon_holds_with_linear_weight() {
    let grid = ChebGrid::new(256, 30.0).unwrap();
    let w = SpatialWeight::LinearAbs { x0: 3.0 };
    for shape in [0.5, 1.0, 2.0] {
        let u = FieldState::from_fn(&grid, 0.0, |x| Complex64::from_polar((-(x / (3.0 * shape)).powi(2)).exp(), 0.2 * x));
        let a = agmon_check(&grid, &u, &w).unwrap();
        assert!(a.ratio <= 1.0 + 1e-6, "{a:?}");
    }
}

fn run_undriven(gamma: f64) -> (ChebGrid, ModelParams, Trajectory) {
    let grid = ChebGrid::new(128, 20.0).unwrap();
    let params = ModelParams::undriven(gamma).unwrap();
    let init = initial_state(&ICSpec::Sech, &grid).unwrap();
    let cfg = IntegratorConfig { rel_tol: 1e-9, abs_tol: 1e-9, snapshot_times: uniform_schedule(0.0, 2.0, 0.5), ..Default::default() };
    let options = SolverOptions { backend: DerivativeBackend::Transform, ..Default::default() };
    let traj = simulate(&grid, &params, &init, &cfg, &options).unwrap();
    (grid, params, traj)
}

#[test]
fn damped_mass_balance_closes() {
    let (_, params, traj) = run_undriven(0.01);
    let res = mass_balance_residual(&traj, &params).unwrap();
    let worst = res.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst:e}");
    let m0 = traj.norm_series[0].mass;
    for s in &traj.norm_series {
        assert!((s.mass / m0 - (-0.02 * s.t).exp()).abs() < 1e-6);
    }

    let phi1 = TimeWeight::theory(1.0, 1.0, 0.01).unwrap();
    let weighted = weighted_time_balance_residual(&traj, &phi1, &params).unwrap();
    let worst = weighted.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    assert!(worst < 1e-5, "{worst:e}");

    let half = weighted_time_balance_residual(&traj, &TimeWeight::unit(), &params).unwrap();
    for (a, b) in half.iter().zip(&res) {
        assert_eq!(a.0, b.0);
        assert!((a.1 - 0.5 * b.1).abs() <= 1e-12 * b.1.abs().max(1e-6));
    }
}

#[test]
fn conservative_mass_balance_closes() {
    let (_, params, traj) = run_undriven(0.0);
    let res = mass_balance_residual(&traj, &params).unwrap();
    let worst = res.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn balance_needs_three_samples() {
    let (_, params, mut traj) = run_undriven(0.0);
    traj.norm_series.truncate(2);
    assert!(mass_balance_residual(&traj, &params).is_err());
}

fn sample(t: f64, mass: f64, power: f64) -> NormSample {
    NormSample { t, mass, sup_density: 0.0, drive_power: power }
}

#[test]
fn balance_on_irregular_samples() {
    // N(t) = 1 + sin t with drive power chosen to close the balance for γ = 0.1.
    let gamma = 0.1;
    let mut ts = vec![0.0];
    let mut t = 0.0;
    let mut k = 0;
    while t < 3.0 {
        t = (t + 0.004 + 0.003 * ((k % 3) as f64)).min(3.0);
        ts.push(t);
        k += 1;
    }
    let series = ts.iter().map(|&t| sample(t, 1.0 + t.sin(), 0.5 * (t.cos() + 2.0 * gamma * (1.0 + t.sin())))).collect();
    let traj = Trajectory {
        snapshots: vec![],
        center_series: vec![],
        norm_series: series,
        status: RunStatus::Completed,
        stats: StepStats::default(),
    };
    let params = ModelParams::undriven(gamma).unwrap();
    for (_, r) in mass_balance_residual(&traj, &params).unwrap() {
        assert!(r.abs() < 1e-8, "{r:e}");
    }
}

fn prw_trajectory(grid: &ChebGrid, p: &PRWParams) -> Trajectory {
    let times = uniform_schedule(p.t0 - 5.0, p.t0 + 5.0, 0.25);
    let snapshots: Vec<FieldState> =
        times.iter().map(|&t| FieldState::from_fn(grid, t, |x| eval_prw(x, t, p))).collect();
    let norm_series = snapshots.iter().map(|s| NormSample { t: s.t, mass: 0.0, sup_density: s.sup_density(), drive_power: 0.0 }).collect();
    Trajectory { snapshots, center_series: vec![], norm_series, status: RunStatus::Completed, stats: StepStats::default() }
}

#[test]
fn prw_lattice_bound_constants() {
    let grid = ChebGrid::new(200, 25.0).unwrap();
    let p = PRWParams::new(5.0, 1.0).unwrap();
    let traj = prw_trajectory(&grid, &p);
    let w_time = TimeWeight::fitted(5.0, 2.0, -4.0).unwrap();
    let rep = bound_constants(&traj, &SpatialWeight::LinearAbs { x0: 1.0 }, &w_time, &grid).unwrap();
    assert!(rep.k1_emp.is_finite());
    assert!(rep.k1_emp >= 9.0 * p.p0 - 1e-9, "{}", rep.k1_emp);
    assert!(rep.k2_emp >= 9.0 * w_time.eval(5.0) - 1e-9);
    assert_eq!(rep.times_of_sup.k2_t, 5.0);
    assert!(rep.r_emp > 0.0 && rep.r0_emp > 0.0 && rep.r1_emp >= rep.r0_emp);
    assert!(rep.certifying);
}

#[test]
fn zero_trajectory_bounds_vanish() {
    let grid = ChebGrid::new(64, 10.0).unwrap();
    let snaps = vec![FieldState::zeros(&grid, 0.0), FieldState::zeros(&grid, 1.0)];
    let traj = Trajectory {
        snapshots: snaps,
        center_series: vec![],
        norm_series: vec![sample(0.0, 0.0, 0.0), sample(1.0, 0.0, 0.0)],
        status: RunStatus::Completed,
        stats: StepStats::default(),
    };
    let w_time = TimeWeight::theory(2.0, 2.0, 0.01).unwrap();
    let rep = bound_constants(&traj, &SpatialWeight::LinearAbs { x0: 100.0 }, &w_time, &grid).unwrap();
    assert_eq!((rep.k1_emp, rep.k2_emp, rep.r_emp, rep.r0_emp, rep.r1_emp), (0.0, 0.0, 0.0, 0.0, 0.0));
}

#[test]
fn blowup_is_not_certifying() {
    let grid = ChebGrid::new(200, 25.0).unwrap();
    let mut traj = prw_trajectory(&grid, &PRWParams::new(5.0, 1.0).unwrap());
    traj.status = RunStatus::Blowup { t: 3.0 };
    let rep = bound_constants(&traj, &SpatialWeight::LinearAbs { x0: 1.0 }, &TimeWeight::unit(), &grid).unwrap();
    assert!(!rep.certifying);
    traj.status = RunStatus::Completed;
    let rep = bound_constants(&traj, &SpatialWeight::QuadraticAbs { x0: 1.0 }, &TimeWeight::unit(), &grid).unwrap();
    assert!(!rep.certifying);
}

fn gaussian_driver() -> DriverSpec {
    DriverSpec::Gaussian(GaussianDriver { amplitude: 1.0, sigma_x: 100.0, sigma_t: 0.5, phase: 0.0, t_center: 0.0 })
}

fn algebraic_driver(time_quadratic: f64) -> DriverSpec {
    DriverSpec::Algebraic(AlgebraicDriver {
        amplitude: 1.5,
        delta_x: 100.0,
        delta_t: 0.5,
        space_quadratic: 0.0,
        time_quadratic,
        phase: 0.0,
    })
}

#[test]
fn admissibility_classification() {
    let grid = ChebGrid::new(256, 500.0).unwrap();
    let w = SpatialWeight::LinearAbs { x0: 100.0 };
    let horizon = 1e7;
    let gamma = 0.01;
    for kappa in [1.0, 2.0, 3.0, 4.0] {
        let phi = TimeWeight::theory(kappa, kappa, gamma).unwrap();
        let rep = driver_admissibility(&gaussian_driver(), &w, &phi, horizon, &grid).unwrap();
        assert!(!rep.divergence_flag, "kappa={kappa} {rep:?}");
        assert!(rep.fd_integral.is_finite() && rep.fd_integral > 0.0);
    }
    let cases = [(0.0, 1.0, false), (0.0, 2.0, true), (1.0, 2.0, false)];
    for (omega, kappa, diverges) in cases {
        let phi = TimeWeight::theory(kappa, kappa, gamma).unwrap();
        let rep = driver_admissibility(&algebraic_driver(omega), &w, &phi, horizon, &grid).unwrap();
        assert_eq!(rep.divergence_flag, diverges, "omega={omega} kappa={kappa} {rep:?}");
    }
}

#[test]
fn admissibility_sup_norms() {
    let grid = ChebGrid::new(256, 500.0).unwrap();
    let rep = driver_admissibility(&gaussian_driver(), &SpatialWeight::Unit, &TimeWeight::unit(), 10.0, &grid).unwrap();
    // ∫ 2 e^{-x²/σ²} dx = 2σ√π, attained at t = t_center = 0
    let expected = 2.0 * 100.0 * PI.sqrt();
    assert!((rep.sup_weighted_f / expected - 1.0).abs() < 1e-8, "{}", rep.sup_weighted_f);
    // |g'|² = s² e^{-s²}/σ_t², maximal at s = 1
    let gt = (-1.0f64).exp() / 0.25;
    assert!((rep.sup_weighted_ft / (expected * gt) - 1.0).abs() < 1e-6);
    // ∫₀^∞ e^{-t²/σ_t²} dt = σ_t √π / 2
    assert!((rep.fd_integral / (expected * 0.25 * PI.sqrt()) - 1.0).abs() < 1e-8, "{}", rep.fd_integral);
    assert!(driver_admissibility(&gaussian_driver(), &SpatialWeight::Unit, &TimeWeight::unit(), 0.0, &grid).is_err());
}

#[test]
fn gronwall_envelope_on_driven_run() {
    let grid = ChebGrid::new(160, 40.0).unwrap();
    let driver = DriverSpec::Gaussian(GaussianDriver { amplitude: 0.5, sigma_x: 8.0, sigma_t: 0.5, phase: 0.0, t_center: 0.0 });
    let params = ModelParams::new(0.05, driver).unwrap();
    let init = initial_state(&ICSpec::Algebraic, &grid).unwrap();
    let cfg = IntegratorConfig { snapshot_times: uniform_schedule(0.0, 3.0, 0.25), ..Default::default() };
    let traj = simulate(&grid, &params, &init, &cfg, &SolverOptions { backend: DerivativeBackend::Transform, ..Default::default() }).unwrap();
    let w = SpatialWeight::LinearAbs { x0: 10.0 };
    let check = gronwall_envelope_check(&traj, &params, &w, &grid).unwrap();
    assert!(check.passed, "{check:?}");
    assert_eq!(check.samples.len(), traj.snapshots.len());
    assert!(gronwall_envelope_check(&traj, &params, &SpatialWeight::QuadraticAbs { x0: 10.0 }, &grid).is_err());
    let undamped = ModelParams::undriven(0.0).unwrap();
    assert!(gronwall_envelope_check(&traj, &undamped, &w, &grid).is_err());

    for snap in &traj.snapshots {
        assert!(agmon_check(&grid, snap, &w).unwrap().ratio <= 1.0 + 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn agmon_ratio_scale_invariant(c in 0.01f64..50.0, phase in 0.0f64..6.0, width in 0.5f64..3.0) {
        let grid = ChebGrid::new(128, 20.0).unwrap();
        let w = SpatialWeight::LinearAbs { x0: 4.0 };
        let u = FieldState::from_fn(&grid, 0.0, |x| sech(x / width));
        let v = FieldState::from_fn(&grid, 0.0, |x| sech(x / width) * Complex64::from_polar(c, phase));
        let a = agmon_check(&grid, &u, &w).unwrap();
        let b = agmon_check(&grid, &v, &w).unwrap();
        prop_assert!((a.ratio - b.ratio).abs() < 1e-12 * a.ratio);
        prop_assert!(a.ratio <= 1.0 + 1e-6);
    }

    #[test]
    fn weighted_norm_dominates_mass(x0 in 0.5f64..50.0, width in 0.5f64..4.0) {
        let grid = ChebGrid::new(128, 20.0).unwrap();
        let u = FieldState::from_fn(&grid, 0.0, |x| sech(x / width));
        let m = mass(&grid, &u).unwrap();
        for w in [SpatialWeight::LinearAbs { x0 }, SpatialWeight::QuadraticAbs { x0 }] {
            prop_assert!(weighted_l2(&grid, &u, &w).unwrap() >= m);
        }
    }
}
