//! Property suite run by the self-test: fast module invariants, each reported
//! as a single pass/fail line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{GridField, GridSpec};
use crate::kernel::{gauss_deriv_with, heat_semigroup, hermite_factor, lq_norm, sample_g_kernel, sample_gauss};
use crate::moments::MomentSolver;
use crate::multi_index::MultiIndex;
use crate::oracle;
use crate::profiles::{sigma, tau_star, time_of_tau, zeta, ProblemParams};
use crate::rate::{fit_rate, FitWindow};
use crate::solver::{solve_rescaled, InitialPerturbation, SolverConfig, TimeStepper};

/// One-dimensional derivative factor used by the kernel derivative check.
pub type HermiteFactor = fn(u32, f64, f64) -> f64;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "{} {:<40} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Deliberate faults for checking that the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Drop the `(-1)^n` sign of the Hermite factor in the kernel derivatives.
    FlipHermiteSign,
}

fn flipped_hermite(n: u32, x: f64, t: f64) -> f64 {
    if n % 2 == 1 {
        -hermite_factor(n, x, t)
    } else {
        hermite_factor(n, x, t)
    }
}

impl Fault {
    pub fn hermite(self) -> HermiteFactor {
        match self {
            Fault::None => hermite_factor,
            Fault::FlipHermiteSign => flipped_hermite,
        }
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn sample_params() -> Vec<ProblemParams<f64>> {
    [
        (2.0, 0.5, 1.0),
        (0.8, 0.2, 1.0),
        (0.5, 0.5, 2.0),
        (0.5, 0.75, 1.0),
        (1.0, 0.0, 0.5),
        (3.0, -1.0, 1.5),
    ]
    .into_iter()
    .map(|(m, a, l)| ProblemParams::new(m, a, l, 1).expect("valid parameters"))
    .collect()
}

pub fn ode_residual() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for params in sample_params() {
        let z = |s: f64| params.zeta_lambda(s);
        for i in 0..100 {
            let t = 10f64.powf(-3.0 + 6.0 * i as f64 / 99.0);
            let d = oracle::richardson(|h| oracle::central_difference(&z, t, 1, h), 0.05 * t, 4);
            let rate = z(t).powf(params.alpha);
            worst = worst.max((d - rate).abs() / rate);
        }
    }
    check(
        "profile ODE residual",
        worst < 1e-10,
        format!("max relative residual {worst:.2e}"),
    )
}

pub fn sigma_monotone_and_inverse() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for params in sample_params() {
        let mut prev = 0.0;
        for i in 0..60 {
            let t = 10f64.powf(-3.0 + 8.0 * i as f64 / 59.0);
            let Ok(s) = sigma(&params, t) else {
                return check("sigma monotone and invertible", false, format!("sigma failed at t={t}"));
            };
            monotone &= s > prev;
            prev = s;
            if let Ok(back) = time_of_tau(&params, s) {
                worst = worst.max((back - t).abs() / t);
            }
        }
    }
    check(
        "sigma monotone and invertible",
        monotone && worst < 1e-12,
        format!("monotone {monotone}, max roundtrip error {worst:.2e}"),
    )
}

pub fn finite_horizon_limit() -> CheckOutcome {
    let params = ProblemParams::new(0.5, 0.75, 1.0, 1).expect("valid parameters");
    let (Ok(star), Ok(s)) = (tau_star(&params), sigma(&params, 1e8)) else {
        return check("sigma approaches tau*", false, "evaluation failed".into());
    };
    let rel = (star - s) / star;
    check(
        "sigma approaches tau*",
        rel > 0.0 && rel < 1e-4,
        format!("tau* - sigma(1e8) = {:.2e} relative", rel),
    )
}

pub fn comparison_monotonicity() -> CheckOutcome {
    let mut ordered = true;
    for params in sample_params() {
        for t in [0.0, 0.1, 1.0, 10.0, 1e3, 1e6] {
            let a = zeta(&params, 0.7, t);
            let b = zeta(&params, 1.3, t);
            ordered &= matches!((a, b), (Ok(a), Ok(b)) if a < b);
        }
    }
    check("profile ordering in mu", ordered, String::new())
}

pub fn semigroup_law() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for spec in [
        GridSpec::new(1, 40.0, 2048),
        GridSpec::new(1, 250.0, 4000),
        GridSpec::new(2, 20.0, 120),
    ] {
        let spec = spec.expect("valid grid");
        let f = sample_gauss(spec, 1.0).expect("positive time");
        let (Ok(a), Ok(b)) = (heat_semigroup(&f, 2.0), heat_semigroup(&f, 1.5)) else {
            return check("heat semigroup law", false, "evaluation failed".into());
        };
        let ab = heat_semigroup(&b, 0.5).expect("positive time");
        let exact = sample_gauss(spec, 3.0).expect("positive time");
        let scale = lq_norm(&exact, f64::INFINITY);
        worst = worst.max(lq_norm(&a.sub(&exact).expect("same grid"), f64::INFINITY) / scale);
        worst = worst.max(lq_norm(&ab.sub(&a).expect("same grid"), f64::INFINITY) / scale);
    }
    check(
        "heat semigroup law",
        worst < 1e-8,
        format!("max relative deviation {worst:.2e}"),
    )
}

/// `d^nu G` against Richardson-extrapolated finite differences of `G`.
pub fn gauss_derivatives(seed: u64, factor: HermiteFactor) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t: f64 = rng.gen_range(0.2..5.0);
        let x = [rng.gen_range(-3.0..3.0) * t.sqrt(), rng.gen_range(-3.0..3.0) * t.sqrt()];
        for nu in MultiIndex::all_up_to(2, 4) {
            let Ok(value) = gauss_deriv_with(factor, &nu, &x, t) else {
                return check("kernel derivatives vs differences", false, "evaluation failed".into());
            };
            let g = |p: &[f64]| oracle::heat_kernel_reference(p, t);
            let fd = oracle::mixed_partial(&g, &x, nu.entries(), 0.3 * t.sqrt(), 4);
            // derivative magnitude scale, guards against zeros of the Hermite factors
            let scale = oracle::heat_kernel_reference(&[0.0, 0.0], t) * t.powf(-0.5 * nu.order() as f64);
            worst = worst.max((value - fd).abs() / value.abs().max(1e-2 * scale));
        }
    }
    check(
        "kernel derivatives vs differences",
        worst < 1e-6,
        format!("max relative error {worst:.2e}"),
    )
}

pub fn kernel_decay() -> CheckOutcome {
    let spec = GridSpec::new(1, 300.0, 6000).expect("valid grid");
    let mut ratio: f64 = 1.0;
    for nu in MultiIndex::all_up_to(1, 3) {
        for q in [1.0, f64::INFINITY] {
            let inv_q = if q == 1.0 { 1.0 } else { 0.0 };
            let values: Vec<f64> = [0.0, 1.0, 10.0, 100.0, 1000.0]
                .iter()
                .map(|&t: &f64| {
                    let g = sample_g_kernel(spec, &nu, t).expect("non-negative time");
                    lq_norm(&g, q) * (1.0 + t).powf(0.5 * (1.0 - inv_q) + 0.5 * nu.order() as f64)
                })
                .collect();
            let max = values.iter().copied().fold(0.0, f64::max);
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            ratio = ratio.max(max / min);
        }
    }
    check(
        "compensated kernel norms bounded",
        ratio < 2.0,
        format!("max/min over t = {ratio:.3}"),
    )
}

pub fn moment_order_independence() -> CheckOutcome {
    let spec = GridSpec::new(2, 30.0, 150).expect("valid grid");
    let f = GridField::from_fn(spec, |x: &[f64]| {
        (-(x[0] - 0.5).powi(2) - (x[1] + 0.3).powi(2) / 2.0).exp() - 0.4 * (-(x[0] + 1.0).powi(2) - x[1].powi(2)).exp()
    });
    let indices = MultiIndex::all_up_to(2, 3);
    let forward: Result<Vec<f64>, _> = MomentSolver::new(&f, 1.0).and_then(|mut s| {
        indices
            .iter()
            .map(|nu| s.coefficient(nu))
            .collect::<Result<Vec<_>, _>>()
    });
    let backward = MomentSolver::new(&f, 1.0).and_then(|mut s| {
        let mut v = indices
            .iter()
            .rev()
            .map(|nu| s.coefficient(nu))
            .collect::<Result<Vec<_>, _>>()?;
        v.reverse();
        Ok(v)
    });
    match (forward, backward) {
        (Ok(a), Ok(b)) => {
            let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            check(
                "moment coefficients order independent",
                diff == 0.0,
                format!("max difference {diff:e}"),
            )
        }
        _ => check(
            "moment coefficients order independent",
            false,
            "evaluation failed".into(),
        ),
    }
}

pub fn slope_scale_invariance() -> CheckOutcome {
    let series: Vec<(f64, f64)> = (0..40)
        .map(|i| {
            let t = 10f64.powf(1.0 + i as f64 / 20.0);
            (t, t.powf(-0.75) * (1.0 + 1.0 / t))
        })
        .collect();
    let scaled: Vec<(f64, f64)> = series.iter().map(|&(t, v)| (t, 37.5 * v)).collect();
    match (
        fit_rate(&series, FitWindow::FinalDecades(1.0)),
        fit_rate(&scaled, FitWindow::FinalDecades(1.0)),
    ) {
        (Ok((a, _)), Ok((b, _))) => check(
            "fitted slope scale invariant",
            (a - b).abs() < 1e-12,
            format!("slopes {a:.6} and {b:.6}"),
        ),
        _ => check("fitted slope scale invariant", false, "fit failed".into()),
    }
}

pub fn sign_preservation() -> CheckOutcome {
    let params = ProblemParams::new(2.0, 0.5, 1.0, 1).expect("valid parameters");
    let phi = InitialPerturbation::smooth_bump(vec![0.5], 1.5, 0.4);
    let config = GridSpec::new(1, 60.0, 600).and_then(|grid| {
        SolverConfig::new(
            grid,
            TimeStepper::Adaptive {
                max_relative_step: 0.02,
            },
            1e-3,
            vec![0.5, 1.0, 5.0, 20.0, 100.0],
        )
    });
    match config.and_then(|c| solve_rescaled(&params, &phi, &c)) {
        Ok(traj) => {
            let min = traj.fields.iter().map(GridField::min).fold(f64::INFINITY, f64::min);
            check(
                "nonnegative data stay nonnegative",
                min >= 0.0,
                format!("min w over snapshots {min:.2e}"),
            )
        }
        Err(e) => check("nonnegative data stay nonnegative", false, e.to_string()),
    }
}

/// All property checks, with an optional injected fault.
pub fn property_suite(seed: u64, fault: Fault) -> Vec<CheckOutcome> {
    vec![
        ode_residual(),
        sigma_monotone_and_inverse(),
        finite_horizon_limit(),
        comparison_monotonicity(),
        semigroup_law(),
        gauss_derivatives(seed, fault.hermite()),
        kernel_decay(),
        moment_order_independence(),
        slope_scale_invariance(),
        sign_preservation(),
    ]
}
