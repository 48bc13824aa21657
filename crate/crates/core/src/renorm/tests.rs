use super::*;
use crate::grid::GridSpec;
use crate::kernel::sample_gauss_deriv;
use crate::oracle;
use crate::profiles::zeta;
use crate::solver::{solve_original, solve_rescaled, InitialPerturbation, SolverConfig, TimeStepper};

fn linear() -> ProblemParams<f64> {
    ProblemParams::new(1.0, 0.0, 1.0, 1).unwrap()
}

fn adaptive(grid: GridSpec<f64>, rel: f64, snaps: Vec<f64>) -> SolverConfig<f64> {
    SolverConfig::new(grid, TimeStepper::Adaptive { max_relative_step: rel }, 1e-3, snaps).unwrap()
}

fn geometric(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n).map(|i| lo * 10f64.powf(i as f64 / per_decade as f64)).collect()
}

fn max_abs(f: &GridField<f64>) -> f64 {
    lq_norm(f, f64::INFINITY)
}

#[test]
fn renormalize_examples() {
    let params = ProblemParams::new(2.0, 0.5, 1.5, 1).unwrap();
    let spec = GridSpec::new(1, 5.0, 10).unwrap();
    let t = 3.0;
    let z = params.zeta_lambda(t);
    let flat = GridField::from_fn(spec, |_| z);
    assert!(max_abs(&renormalize(&params, &flat, t).unwrap()) < 1e-15);

    let u = GridField::from_fn(spec, |x| 2.0 + 0.1 * x[0]);
    let lin = renormalize(&linear(), &u, t).unwrap();
    for (a, b) in lin.values.iter().zip(&u.values) {
        assert!((a - (b - (1.0 + t))).abs() < 1e-15);
    }

    let big_u = renormalize(&params, &u, t).unwrap();
    let back = denormalize(&params, &big_u, t);
    for (a, b) in back.values.iter().zip(&u.values) {
        assert!((a - b).abs() <= 1e-14 * b.abs());
    }
    let negative = GridField::from_fn(spec, |x| x[0]);
    assert!(matches!(
        renormalize(&params, &negative, t),
        Err(Error::Positivity { .. })
    ));
}

#[test]
fn w_of_endpoints_and_identity_clock() {
    let phi = InitialPerturbation::gaussian(vec![0.0], 1.0, 0.5);
    let grid = GridSpec::new(1, 20.0, 320).unwrap();
    let params = linear();
    let traj = solve_original(&params, &phi, &adaptive(grid, 0.02, vec![0.5, 1.0, 2.0, 4.0])).unwrap();
    assert_eq!(w_of(&params, &traj, 0.0).unwrap(), phi.sample(grid).unwrap());
    let at = w_of(&params, &traj, 2.0).unwrap();
    let direct = renormalize(&params, &traj.fields[3], 2.0).unwrap();
    assert!(max_abs(&at.sub(&direct).unwrap()) < 1e-13);
    assert!(matches!(w_of(&params, &traj, 5.0), Err(Error::TrajectoryRange { .. })));
}

#[test]
fn w_of_interpolation_against_half_spacing_snapshots() {
    let params = ProblemParams::new(2.0, 0.5, 1.0, 1).unwrap();
    let phi = InitialPerturbation::smooth_bump(vec![0.0], 2.0, 0.3);
    let grid = GridSpec::new(1, 30.0, 240).unwrap();
    let mut fine_times = geometric(0.1, 3.0, 48);
    if fine_times.len().is_multiple_of(2) {
        fine_times.pop();
    }
    let coarse_times: Vec<f64> = fine_times.iter().step_by(2).copied().collect();
    let coarse = solve_original(&params, &phi, &adaptive(grid, 0.002, coarse_times)).unwrap();
    let fine = solve_original(&params, &phi, &adaptive(grid, 0.002, fine_times.clone())).unwrap();
    let mut worst: f64 = 0.0;
    for (i, &t) in fine_times.iter().enumerate().skip(1).step_by(2) {
        let tau = sigma(&params, t).unwrap();
        let interpolated = w_of(&params, &coarse, tau).unwrap();
        let reference = renormalized_snapshot(&fine, i + 1);
        worst = worst.max(max_abs(&interpolated.sub(&reference).unwrap()) / max_abs(&reference));
    }
    assert!(worst <= 1e-4, "relative interpolation error {worst}");
}

#[test]
fn thm11_error_examples() {
    let params = ProblemParams::new(2.0, 0.5, 1.0, 1).unwrap();
    let spec = GridSpec::new(1, 30.0, 300).unwrap();
    let phi = InitialPerturbation::gaussian(vec![0.0], 1.0, 0.3).sample(spec).unwrap();
    let t = 2.0;
    let s = sigma(&params, t).unwrap();
    let heat = heat_semigroup(&phi, s).unwrap();
    assert!(thm11_error(&params, &heat, &phi, t, f64::INFINITY, 2.0).unwrap() < 1e-15);
    let perturbed = heat.map(|v| v + 1e-3);
    let plain = lq_norm(&perturbed.sub(&heat).unwrap(), 2.0);
    assert!((thm11_error(&params, &perturbed, &phi, t, 2.0, 2.0).unwrap() - plain).abs() < 1e-15);
    assert!(thm11_error(&params, &heat, &phi, t, 1.5, 2.0).is_err());
    assert!(thm11_error(&params, &heat, &phi, t, 2.0, 1.0).is_err());
}

#[test]
fn thm11_error_of_exact_linear_run_is_small() {
    let params = linear();
    let phi = InitialPerturbation::gaussian(vec![0.0], 1.0, 0.5);
    let grid = GridSpec::new(1, 25.0, 1000).unwrap();
    let traj = solve_original(&params, &phi, &adaptive(grid, 0.01, vec![1.0, 5.0, 10.0])).unwrap();
    let phi_field = phi.sample(grid).unwrap();
    for i in 1..traj.len() {
        let big_u = renormalized_snapshot(&traj, i);
        let e = thm11_error(&params, &big_u, &phi_field, traj.times[i], f64::INFINITY, 2.0).unwrap();
        assert!(e < 1e-3, "t {}: {e}", traj.times[i]);
    }
}

#[test]
fn thm12_error_vanishes_on_synthetic_profile() {
    let params = ProblemParams::new(2.0, 0.5, 1.0, 1).unwrap();
    let spec = GridSpec::new(1, 40.0, 800).unwrap();
    let t = 5.0;
    let s = sigma(&params, t).unwrap();
    let constants = vec![(MultiIndex::new(vec![0]), 0.7), (MultiIndex::new(vec![1]), -0.2)];
    let mut big_u = GridField::zeros(spec);
    for (nu, m) in &constants {
        big_u.axpy(*m, &sample_gauss_deriv(spec, nu, s).unwrap()).unwrap();
    }
    let report = ExpansionReport {
        k: 1.0,
        at_time: s,
        coefficients: Vec::new(),
        residual_moments: Vec::new(),
        m_constants: Some(constants),
        tolerance: 0.0,
        valid: true,
    };
    let e = thm12_error(&params, &big_u, &report, t, 1.0, 1.0).unwrap();
    assert!(e.raw < 1e-15 && e.compensated < 1e-14);
    let missing = ExpansionReport {
        m_constants: None,
        ..report
    };
    assert!(thm12_error(&params, &big_u, &missing, t, 1.0, 1.0).is_err());
}

#[test]
fn linear_heat_flow_mass_and_k0_rate() {
    let params = linear();
    let phi = InitialPerturbation::gaussian(vec![0.7], 1.0, 0.5);
    let grid = GridSpec::new(1, 120.0, 1920).unwrap();
    let times = geometric(1.0, 100.0, 8);
    let traj = solve_rescaled(&params, &phi, &adaptive(grid, 0.01, times)).unwrap();
    let estimate = estimate_m_detailed(&params, &traj, 0).unwrap();
    let exact_mass = oracle::adaptive_simpson(&|x: f64| 0.5 * (-(x - 0.7) * (x - 0.7) / 2.0).exp(), -40.0, 40.0, 1e-13);
    let m0 = estimate.report.constant(&MultiIndex::zero(1)).unwrap();
    assert!((m0 - exact_mass).abs() < 1e-8 * exact_mass, "{m0} vs {exact_mass}");
    assert!(estimate.stabilized);

    let late: Vec<usize> = (0..traj.len()).filter(|&i| traj.times[i] >= 10.0).collect();
    let mut previous = f64::INFINITY;
    for &i in &late {
        let field = renormalized_snapshot(&traj, i);
        let one = thm12_error(&params, &field, &estimate.report, traj.times[i], 1.0, 0.0).unwrap();
        let inf = thm12_error(&params, &field, &estimate.report, traj.times[i], f64::INFINITY, 0.0).unwrap();
        // same residual field, different norm
        let residual = field
            .sub(&asymptotic_profile(&field, &estimate.report, 0.0, traj.times[i]).unwrap())
            .unwrap();
        assert!((inf.raw - lq_norm(&residual, f64::INFINITY)).abs() < 1e-15);
        assert!((one.raw - lq_norm(&residual, 1.0)).abs() < 1e-15);
        assert!(one.compensated < previous);
        previous = one.compensated;
    }
}

#[test]
fn k0_error_is_bounded_by_thm11_style_error_plus_lemma_term() {
    let params = ProblemParams::new(2.0, 0.5, 1.0, 1).unwrap();
    let phi = InitialPerturbation::smooth_bump(vec![0.0], 2.0, 0.3);
    let grid = GridSpec::new(1, 60.0, 480).unwrap();
    let traj = solve_rescaled(&params, &phi, &adaptive(grid, 0.02, geometric(1.0, 100.0, 4))).unwrap();
    let report = estimate_m(&params, &traj, 0).unwrap();
    let phi_field = phi.sample(grid).unwrap();
    let m0 = report.constant(&MultiIndex::zero(1)).unwrap();
    for i in 1..traj.len() {
        let t = traj.original_time(i);
        let s = traj.times[i];
        let field = renormalized_snapshot(&traj, i);
        let heat = heat_semigroup(&phi_field, s).unwrap();
        let k0 = thm12_error(&params, &field, &report, t, 1.0, 0.0).unwrap().raw;
        let semigroup_gap = lq_norm(&field.sub(&heat).unwrap(), 1.0);
        let lemma = lq_norm(
            &heat
                .sub(&sample_gauss_deriv(grid, &MultiIndex::zero(1), s).unwrap().scaled(m0))
                .unwrap(),
            1.0,
        );
        assert!(k0 <= semigroup_gap + lemma + 1e-12, "tau {s}");
    }
}

#[test]
fn even_data_has_vanishing_odd_constants_and_mirrors() {
    let params = ProblemParams::new(2.0, 0.5, 1.0, 1).unwrap();
    let grid = GridSpec::new(1, 40.0, 320).unwrap();
    let times = geometric(1.0, 30.0, 4);
    let even = InitialPerturbation::smooth_bump(vec![0.0], 2.0, 0.3);
    let traj = solve_rescaled(&params, &even, &adaptive(grid, 0.02, times.clone())).unwrap();
    let report = estimate_m(&params, &traj, 1).unwrap();
    assert!(report.constant(&MultiIndex::new(vec![1])).unwrap().abs() < 1e-10);

    let shifted = InitialPerturbation::smooth_bump(vec![0.75], 2.0, 0.3);
    let mirrored = InitialPerturbation::smooth_bump(vec![-0.75], 2.0, 0.3);
    let a = estimate_m(
        &params,
        &solve_rescaled(&params, &shifted, &adaptive(grid, 0.02, times.clone())).unwrap(),
        1,
    )
    .unwrap();
    let b = estimate_m(
        &params,
        &solve_rescaled(&params, &mirrored, &adaptive(grid, 0.02, times)).unwrap(),
        1,
    )
    .unwrap();
    let nu0 = MultiIndex::zero(1);
    let nu1 = MultiIndex::new(vec![1]);
    assert!((a.constant(&nu0).unwrap() - b.constant(&nu0).unwrap()).abs() < 1e-12);
    assert!((a.constant(&nu1).unwrap() + b.constant(&nu1).unwrap()).abs() < 1e-12);
    assert!(a.constant(&nu1).unwrap().abs() > 1e-3);
}

#[test]
fn zero_data_gives_zero_constants_and_errors() {
    let params = ProblemParams::new(2.0, 0.5, 1.0, 1).unwrap();
    let grid = GridSpec::new(1, 10.0, 64).unwrap();
    let traj = solve_original(
        &params,
        &InitialPerturbation::zero(1),
        &adaptive(grid, 0.05, vec![1.0, 2.0, 4.0]),
    )
    .unwrap();
    let report = estimate_m(&params, &traj, 2).unwrap();
    assert!(report.m_constants.as_ref().unwrap().iter().all(|(_, m)| *m == 0.0));
    for i in 0..traj.len() {
        assert_eq!(ode_convergence_error(&params, &traj.fields[i], traj.times[i]), 0.0);
    }
}

#[test]
fn ode_convergence_of_uniform_upper_profile() {
    let params = ProblemParams::new(2.0, 0.5, 1.0, 1).unwrap();
    let spec = GridSpec::new(1, 5.0, 8).unwrap();
    let t = 7.0;
    let upper: f64 = zeta(&params, 1.4, t).unwrap();
    let field = GridField::from_fn(spec, |_| upper);
    let expected = upper / params.zeta_lambda(t) - 1.0;
    assert!((ode_convergence_error(&params, &field, t) - expected).abs() < 1e-15);
}

#[test]
fn finite_horizon_requires_m_below_alpha() {
    let params = ProblemParams::new(2.0, 0.5, 1.0, 1).unwrap();
    let grid = GridSpec::new(1, 10.0, 64).unwrap();
    let traj = solve_original(&params, &InitialPerturbation::zero(1), &adaptive(grid, 0.05, vec![1.0])).unwrap();
    assert!(matches!(
        finite_horizon_check(&params, &traj),
        Err(Error::UnsupportedRegime { .. })
    ));
}

#[test]
fn finite_horizon_zero_data() {
    let params = ProblemParams::new(0.5, 0.75, 1.0, 1).unwrap();
    let grid = GridSpec::new(1, 10.0, 64).unwrap();
    let traj = solve_original(
        &params,
        &InitialPerturbation::zero(1),
        &adaptive(grid, 0.05, vec![10.0, 1e3, 1e5]),
    )
    .unwrap();
    let report = finite_horizon_check(&params, &traj).unwrap();
    assert!(report.limit_profile.values.iter().all(|&v| v == 0.0));
    assert_eq!(report.final_distance(), 0.0);
}
