use odetype::grid::{GridField, GridSpec};
use odetype::kernel::{heat_semigroup, lq_norm};
use odetype::moments::{expand, ExpansionReport};
use odetype::profiles::{sigma, time_of_tau, zeta, ProblemParams};
use odetype::rate::{fit_rate, is_decreasing, FitWindow};
use odetype::renorm::{denormalize, renormalize};
use odetype::solver::{power_remainder, power_secant};
use odetype::MultiIndex;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ProblemParams<f64>> {
    (0.1f64..3.0, -1.0f64..0.95, 0.2f64..5.0)
        .prop_map(|(m, alpha, lambda)| ProblemParams::new(m, alpha, lambda, 1).unwrap())
}

fn mixture() -> impl Strategy<Value = GridField<f64>> {
    prop::collection::vec((-2.0f64..2.0, 0.5f64..1.5, -1.0f64..1.0), 1..4).prop_map(|parts| {
        let spec = GridSpec::new(1, 40.0, 800).unwrap();
        GridField::from_fn(spec, |x| {
            parts
                .iter()
                .map(|(c, w, a)| a * (-(x[0] - c) * (x[0] - c) / (2.0 * w * w)).exp())
                .sum()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profiles_ordered_in_mu_and_t(p in params(), t in 0.0f64..100.0, dt in 0.01f64..10.0) {
        let lo = zeta(&p, 0.5 * p.lambda, t).unwrap();
        let hi = zeta(&p, 1.5 * p.lambda, t).unwrap();
        prop_assert!(lo < hi);
        prop_assert!(p.zeta_lambda(t) < p.zeta_lambda(t + dt));
    }

    #[test]
    fn sigma_roundtrip(p in params(), log_t in -3.0f64..2.0) {
        let t = 10f64.powf(log_t);
        let s = sigma(&p, t).unwrap();
        prop_assert!(s > 0.0);
        let back = time_of_tau(&p, s).unwrap();
        prop_assert!((back - t).abs() <= 1e-10 * t, "t={t} back={back}");
    }

    #[test]
    fn power_secant_between_endpoint_slopes(m in 0.2f64..3.0, a in 0.5f64..2.0, b in 0.5f64..2.0) {
        let s = power_secant(m, a, b);
        let (da, db) = (m * a.powf(m - 1.0), m * b.powf(m - 1.0));
        let tol = 1e-12 * da.abs().max(db.abs());
        prop_assert!(s >= da.min(db) - tol && s <= da.max(db) + tol);
        prop_assert!((s - power_secant(m, b, a)).abs() <= tol);
    }

    #[test]
    fn power_remainder_matches_closed_form(a in -1.0f64..1.0, x in -0.5f64..2.0) {
        let exact = (1.0 + x).powf(a) - 1.0 - a * x;
        prop_assert!((power_remainder(a, x) - exact).abs() <= 1e-13 + 1e-10 * exact.abs());
    }

    #[test]
    fn expansion_residual_moments_vanish(f in mixture(), k in 0u32..4, t in prop::sample::select(vec![0.0, 1.0, 10.0])) {
        let report = expand(&f, k as f64, t).unwrap();
        prop_assert!(report.valid, "{:?}", report.residual_moments);
    }

    #[test]
    fn expansion_record_roundtrip(f in mixture(), k in 0u32..3) {
        let report = expand(&f, k as f64, 1.0).unwrap().with_constants_from_coefficients();
        let back = ExpansionReport::<f64>::from_record(&report.to_record()).unwrap();
        prop_assert_eq!(back, report);
    }

    #[test]
    fn heat_flow_conserves_mass_and_contracts(f in mixture(), t in 0.1f64..20.0) {
        let g = heat_semigroup(&f, t).unwrap();
        prop_assert!((g.integral() - f.integral()).abs() <= 1e-9 * lq_norm(&f, 1.0));
        prop_assert!(lq_norm(&g, f64::INFINITY) <= lq_norm(&f, f64::INFINITY) * (1.0 + 1e-12));
        prop_assert!(lq_norm(&g, 1.0) <= lq_norm(&f, 1.0) * (1.0 + 1e-9));
    }

    #[test]
    fn renormalization_inverts(p in params(), f in mixture(), t in 0.0f64..50.0) {
        let z = p.zeta_lambda(t);
        let u = f.map(|v| z * (1.0 + 0.1 * v));
        let back = denormalize(&p, &renormalize(&p, &u, t).unwrap(), t);
        let err = lq_norm(&back.sub(&u).unwrap(), f64::INFINITY);
        prop_assert!(err <= 1e-12 * z);
    }

    #[test]
    fn fitted_slope_ignores_scale(slope in -2.0f64..0.0, c in 0.01f64..100.0) {
        let series: Vec<(f64, f64)> = (0..30).map(|i| {
            let t = 10f64.powf(1.0 + i as f64 / 15.0);
            (t, t.powf(slope))
        }).collect();
        let scaled: Vec<(f64, f64)> = series.iter().map(|&(t, v)| (t, c * v)).collect();
        let (a, _) = fit_rate(&series, FitWindow::FinalDecades(1.0)).unwrap();
        let (b, _) = fit_rate(&scaled, FitWindow::FinalDecades(1.0)).unwrap();
        prop_assert!((a - slope).abs() < 1e-10 && (a - b).abs() < 1e-10);
        let values: Vec<f64> = series.iter().map(|p| p.1).collect();
        prop_assert_eq!(is_decreasing(&values, 0.0), slope < 0.0);
    }

    #[test]
    fn multi_index_text_roundtrip(entries in prop::collection::vec(0u32..6, 1..3)) {
        let nu = MultiIndex::new(entries);
        let back: MultiIndex = nu.to_string().parse().unwrap();
        prop_assert_eq!(back, nu);
    }
}
