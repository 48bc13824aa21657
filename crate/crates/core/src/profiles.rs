//! Closed-form time profiles of the source ODE `zeta' = zeta^alpha` and of the
//! diffusive clock `sigma(t) = int_0^t m zeta_lambda(s)^(m-1) ds`.
//!
//! With `delta = m - alpha` and `ell(t) = ln(zeta_lambda(t) / lambda)` the clock is
//!
//! ```text
//! sigma = m lambda^delta expm1(delta ell) / delta
//! ```
//!
//! which reduces to `m ell` when `delta = 0`. Evaluating through `expm1`/`ln_1p`
//! keeps both the algebraic and the logarithmic branch accurate as `m -> alpha`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Large-time behaviour of the rescaled clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `m > alpha`: `sigma ~ t^((m-alpha)/(1-alpha))`.
    Algebraic,
    /// `m = alpha`: `sigma` grows logarithmically.
    Exponential,
    /// `m < alpha`: `sigma` converges to a finite horizon.
    FiniteHorizon,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Algebraic => "algebraic",
            Regime::Exponential => "exponential",
            Regime::FiniteHorizon => "finite-horizon",
        }
    }
}

/// Parameters of `u_t = Laplace(u^m) + u^alpha`, `u(0) = lambda + phi`, in `dim` dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams<T> {
    pub m: T,
    pub alpha: T,
    pub lambda: T,
    pub dim: usize,
}

impl<T: Real> ProblemParams<T> {
    pub fn new(m: T, alpha: T, lambda: T, dim: usize) -> Result<Self> {
        let params = Self { m, alpha, lambda, dim };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > T::zero()) {
            return Err(Error::domain("m", format!("must be finite and > 0, got {}", self.m)));
        }
        if !(self.alpha.is_finite() && self.alpha < T::one()) {
            return Err(Error::domain(
                "alpha",
                format!("must be finite and < 1, got {}", self.alpha),
            ));
        }
        if !(self.lambda.is_finite() && self.lambda > T::zero()) {
            return Err(Error::domain(
                "lambda",
                format!("must be finite and > 0, got {}", self.lambda),
            ));
        }
        if self.dim == 0 {
            return Err(Error::domain("dim", "must be >= 1"));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        if self.m > self.alpha {
            Regime::Algebraic
        } else if self.m == self.alpha {
            Regime::Exponential
        } else {
            Regime::FiniteHorizon
        }
    }

    #[inline]
    fn one_minus_alpha(&self) -> T {
        T::one() - self.alpha
    }

    #[inline]
    fn delta(&self) -> T {
        self.m - self.alpha
    }

    /// `zeta_lambda(t)`, the spatially homogeneous solution.
    pub fn zeta_lambda(&self, t: T) -> T {
        zeta_unchecked(self.alpha, self.lambda, t)
    }

    /// `ell(t) = ln(zeta_lambda(t) / lambda)`.
    fn log_growth(&self, t: T) -> T {
        let oma = self.one_minus_alpha();
        let base = self.lambda.powf(oma);
        (oma * t / base).ln_1p() / oma
    }

    /// Inverse of `sigma` expressed through `ell`; `None` when `tau` is past the horizon.
    fn log_growth_of_tau(&self, tau: T) -> Option<T> {
        let delta = self.delta();
        if delta == T::zero() {
            return Some(tau / self.m);
        }
        let arg = tau * delta / (self.m * self.lambda.powf(delta));
        if arg <= -T::one() {
            return None;
        }
        Some(arg.ln_1p() / delta)
    }
}

#[inline]
fn zeta_unchecked<T: Real>(alpha: T, mu: T, t: T) -> T {
    let oma = T::one() - alpha;
    (mu.powf(oma) + oma * t).powf(oma.recip())
}

/// Time coordinate attached to a profile value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "clock", content = "value", rename_all = "snake_case")]
pub enum TimeCoord<T> {
    /// Original time `t`.
    Original(T),
    /// Rescaled time `tau = sigma(t)`.
    Rescaled(T),
}

/// A profile value together with the time at which it was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileValue<T> {
    pub value: T,
    pub at: TimeCoord<T>,
}

/// `zeta_mu(t) = (mu^(1-alpha) + (1-alpha) t)^(1/(1-alpha))`.
pub fn zeta<T: Real>(params: &ProblemParams<T>, mu: T, t: T) -> Result<T> {
    if !(params.alpha < T::one()) {
        return Err(Error::domain("alpha", "must be < 1"));
    }
    if !(mu > T::zero()) || !mu.is_finite() {
        return Err(Error::domain("mu", format!("must be > 0, got {mu}")));
    }
    if !(t >= T::zero()) {
        return Err(Error::domain("t", format!("must be >= 0, got {t}")));
    }
    Ok(zeta_unchecked(params.alpha, mu, t))
}

/// Rescaled time `sigma(t)`.
pub fn sigma<T: Real>(params: &ProblemParams<T>, t: T) -> Result<T> {
    params.validate()?;
    if !(t >= T::zero()) {
        return Err(Error::domain("t", format!("must be >= 0, got {t}")));
    }
    let ell = params.log_growth(t);
    let delta = params.delta();
    if delta == T::zero() {
        return Ok(params.m * ell);
    }
    Ok(params.m * params.lambda.powf(delta) * (delta * ell).exp_m1() / delta)
}

/// Inverse `t(tau)` of the rescaled clock.
pub fn time_of_tau<T: Real>(params: &ProblemParams<T>, tau: T) -> Result<T> {
    params.validate()?;
    if !(tau >= T::zero()) {
        return Err(Error::domain("tau", format!("must be >= 0, got {tau}")));
    }
    let ell = params.log_growth_of_tau(tau).ok_or_else(|| out_of_range(params, tau))?;
    let oma = params.one_minus_alpha();
    let t = params.lambda.powf(oma) * (oma * ell).exp_m1() / oma;
    if !t.is_finite() {
        return Err(out_of_range(params, tau));
    }
    Ok(t)
}

fn out_of_range<T: Real>(params: &ProblemParams<T>, tau: T) -> Error {
    let tau_star = tau_star(params).map(|v| v.as_f64()).unwrap_or(f64::INFINITY);
    Error::OutOfRange {
        tau: tau.as_f64(),
        tau_star,
    }
}

/// `eta(tau) = zeta_lambda(t(tau))`.
pub fn eta<T: Real>(params: &ProblemParams<T>, tau: T) -> Result<T> {
    params.validate()?;
    if !(tau >= T::zero()) {
        return Err(Error::domain("tau", format!("must be >= 0, got {tau}")));
    }
    let ell = params.log_growth_of_tau(tau).ok_or_else(|| out_of_range(params, tau))?;
    let value = params.lambda * ell.exp();
    if !value.is_finite() {
        return Err(out_of_range(params, tau));
    }
    Ok(value)
}

/// Measured asymptotic slope of `ln eta(tau)` against `tau`.
///
/// Only meaningful for `m = alpha`, where `ln eta` grows linearly; the slope is
/// measured between `tau = 100` and `tau = 200` rather than taken from a formula.
pub fn log_growth_rate<T: Real>(params: &ProblemParams<T>) -> Result<T> {
    let (t1, t2) = (T::lit(100.0), T::lit(200.0));
    let e1 = eta(params, t1)?;
    let e2 = eta(params, t2)?;
    Ok((e2.ln() - e1.ln()) / (t2 - t1))
}

/// Fitted prefactor `c` in `eta(tau) ~ c tau^(1/(m-alpha))`, reported as a diagnostic.
pub fn algebraic_prefactor<T: Real>(params: &ProblemParams<T>, tau: T) -> Result<T> {
    if params.regime() != Regime::Algebraic {
        return Err(Error::UnsupportedRegime {
            op: "algebraic_prefactor",
            regime: params.regime().name(),
        });
    }
    Ok(eta(params, tau)? / tau.powf(params.delta().recip()))
}

/// Decay rate `h(tau)` controlling the size of the source nonlinearity.
pub fn h_decay<T: Real>(params: &ProblemParams<T>, tau: T) -> Result<T> {
    params.validate()?;
    if !(tau >= T::zero()) {
        return Err(Error::domain("tau", format!("must be >= 0, got {tau}")));
    }
    let oma = params.one_minus_alpha();
    match params.regime() {
        Regime::Algebraic => Ok((T::one() + tau).powf(-T::one() - oma / params.delta())),
        Regime::Exponential => {
            let d_m = log_growth_rate(params)?;
            Ok((-d_m * oma * tau).exp())
        }
        Regime::FiniteHorizon => Err(Error::UnsupportedRegime {
            op: "h_decay",
            regime: Regime::FiniteHorizon.name(),
        }),
    }
}

/// Finite total rescaled time `tau* = int_0^inf m zeta_lambda^(m-1) ds` for `m < alpha`.
pub fn tau_star<T: Real>(params: &ProblemParams<T>) -> Result<T> {
    params.validate()?;
    if params.m >= params.alpha {
        return Err(Error::Divergent {
            m: params.m.as_f64(),
            alpha: params.alpha.as_f64(),
        });
    }
    Ok(params.m * params.lambda.powf(params.delta()) / (params.alpha - params.m))
}

/// One row of the profile table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow<T> {
    pub t: T,
    pub zeta: ProfileValue<T>,
    pub sigma: T,
    pub eta: ProfileValue<T>,
    pub h: Option<ProfileValue<T>>,
}

/// Tabulates the profiles at the given original times.
pub fn profile_table<T: Real>(params: &ProblemParams<T>, times: &[T]) -> Result<Vec<ProfileRow<T>>> {
    times
        .iter()
        .map(|&t| {
            let s = sigma(params, t)?;
            let z = zeta(params, params.lambda, t)?;
            // eta(sigma(t)) = zeta_lambda(t); evaluated through eta to exercise the inverse.
            let e = eta(params, s).unwrap_or(z);
            let h = h_decay(params, s).ok().map(|value| ProfileValue {
                value,
                at: TimeCoord::Rescaled(s),
            });
            Ok(ProfileRow {
                t,
                zeta: ProfileValue {
                    value: z,
                    at: TimeCoord::Original(t),
                },
                sigma: s,
                eta: ProfileValue {
                    value: e,
                    at: TimeCoord::Rescaled(s),
                },
                h,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn p(m: f64, alpha: f64, lambda: f64) -> ProblemParams<f64> {
        ProblemParams::new(m, alpha, lambda, 1).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn zeta_examples() {
        assert!((zeta(&p(1.0, 0.0, 1.0), 1.0, 2.0).unwrap() - 3.0).abs() < 1e-15);
        assert!((zeta(&p(1.0, 0.5, 1.0), 2.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        // RK4 oracle for zeta' = sqrt(zeta), zeta(0) = 1, step 1e-4.
        let rk = oracle::rk4(|z: f64| z.sqrt(), 1.0, 1.0, 1e-4);
        assert!((rk - 2.25).abs() < 1e-12);
        let v = zeta(&p(1.0, 0.5, 1.0), 1.0, 1.0).unwrap();
        assert!((v - rk).abs() < 1e-12);
        let rk = oracle::rk4(|z: f64| 1.0 / z, 1.0, 4.0, 1e-4);
        assert!((rk - 3.0).abs() < 1e-12);
        assert!((zeta(&p(1.0, -1.0, 1.0), 1.0, 4.0).unwrap() - rk).abs() < 1e-12);
    }

    #[test]
    fn zeta_rejects_bad_arguments() {
        let params = p(1.0, 0.0, 1.0);
        assert!(matches!(
            zeta(&params, 0.0, 1.0),
            Err(Error::Domain { field: "mu", .. })
        ));
        assert!(matches!(zeta(&params, -1.0, 1.0), Err(Error::Domain { .. })));
        let bad = ProblemParams {
            m: 1.0,
            alpha: 1.0,
            lambda: 1.0,
            dim: 1,
        };
        assert!(matches!(
            zeta(&bad, 1.0, 1.0),
            Err(Error::Domain { field: "alpha", .. })
        ));
        assert!(ProblemParams::new(1.0, 1.5, 1.0, 1).is_err());
        assert!(ProblemParams::new(0.0, 0.5, 1.0, 1).is_err());
        assert!(ProblemParams::new(1.0, 0.5, -1.0, 1).is_err());
        assert!(ProblemParams::new(1.0, 0.5, 1.0, 0).is_err());
    }

    #[test]
    fn sigma_examples() {
        assert!((sigma(&p(1.0, 0.3, 2.5), 5.0).unwrap() - 5.0).abs() < 1e-13);
        let oracle_val = oracle::adaptive_simpson(&|s| 2.0 * (1.0 + s), 0.0, 3.0, 1e-13);
        assert!((oracle_val - 15.0).abs() < 1e-12);
        assert!((sigma(&p(2.0, 0.0, 1.0), 3.0).unwrap() - oracle_val).abs() < 1e-12);
        let params = p(0.5, 0.5, 1.0);
        let q = oracle::adaptive_simpson(&|s| 0.5 * params.zeta_lambda(s).powf(-0.5), 0.0, 2.0, 1e-14);
        assert!((sigma(&params, 2.0).unwrap() - q).abs() < 1e-10);
        assert!((sigma(&params, 2.0).unwrap() - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn sigma_is_continuous_across_the_logarithmic_branch() {
        let exact = sigma(&p(0.5, 0.5, 1.3), 7.0).unwrap();
        for gap in [1e-4, 1e-7, 1e-10, -1e-10, -1e-7] {
            let near = sigma(&p(0.5 + gap, 0.5, 1.3), 7.0).unwrap();
            assert!(rel(near, exact) < 10.0 * gap.abs() + 1e-14, "gap {gap}");
        }
    }

    #[test]
    fn time_of_tau_examples() {
        assert!((time_of_tau(&p(1.0, 0.2, 3.0), 7.0).unwrap() - 7.0).abs() < 1e-12);
        let params = p(2.0, 0.0, 1.0);
        let t_bisect = oracle::bisect_increasing(|t| sigma(&params, t).unwrap(), 15.0, 0.0, 100.0, 1e-15);
        assert!((t_bisect - 3.0).abs() < 1e-12);
        assert!((time_of_tau(&params, 15.0).unwrap() - t_bisect).abs() < 1e-12);
        for t in [0.1, 1.0, 10.0, 100.0] {
            for params in [p(2.0, 0.5, 1.0), p(0.8, 0.2, 2.0), p(0.5, 0.5, 1.0), p(0.5, 0.75, 1.0)] {
                let back = time_of_tau(&params, sigma(&params, t).unwrap()).unwrap();
                assert!(rel(back, t) < 1e-12, "{params:?} t={t}");
            }
        }
    }

    #[test]
    fn time_of_tau_beyond_horizon_is_out_of_range() {
        let params = p(0.5, 0.75, 1.0);
        assert!(matches!(time_of_tau(&params, 2.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(time_of_tau(&params, 3.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(eta(&params, 2.5), Err(Error::OutOfRange { .. })));
        assert!(time_of_tau(&params, 1.999).is_ok());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(&p(2.0, 0.5, 1.7), 0.0).unwrap(), 1.7);
        assert!((eta(&p(1.0, 0.0, 1.0), 4.0).unwrap() - 5.0).abs() < 1e-13);
        let params = p(2.0, 0.0, 1.0);
        let (a, b) = (1e6, 2e6);
        let slope = (eta(&params, b).unwrap().ln() - eta(&params, a).unwrap().ln()) / (b / a).ln();
        assert!((slope - 0.5).abs() < 0.005);
    }

    #[test]
    fn exponential_regime_growth_rate_is_measured() {
        let params = p(0.5, 0.5, 1.0);
        let d_m = log_growth_rate(&params).unwrap();
        // ln eta = ln lambda + tau / m in this regime.
        assert!((d_m - 2.0).abs() < 1e-10);
    }

    #[test]
    fn h_decay_examples() {
        let params = p(2.0, 0.0, 1.0);
        assert_eq!(h_decay(&params, 0.0).unwrap(), 1.0);
        assert!((h_decay(&params, 3.0).unwrap() - 0.125).abs() < 1e-15);
        let params = p(0.5, 0.5, 1.0);
        let values: Vec<f64> = (0..20).map(|k| h_decay(&params, k as f64 * 0.5).unwrap()).collect();
        assert!(values.iter().all(|v| *v > 0.0));
        assert!(values.windows(2).all(|w| w[1] < w[0]));
        assert!(matches!(
            h_decay(&p(0.5, 0.75, 1.0), 1.0),
            Err(Error::UnsupportedRegime { .. })
        ));
    }

    #[test]
    fn tau_star_examples() {
        let q = oracle::geometric_quadrature(&|s| 0.5 * p(0.5, 0.75, 1.0).zeta_lambda(s).powf(-0.5), 0.0, 1e8, 1e-12);
        assert!((q - 2.0).abs() < 1e-4);
        assert!((tau_star(&p(0.5, 0.75, 1.0)).unwrap() - 2.0).abs() < 1e-15);
        let expected = 2.0 * 2f64.powf(-0.25);
        assert!((tau_star(&p(0.5, 0.75, 2.0)).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 1.681793).abs() < 1e-6);
        assert!(matches!(tau_star(&p(1.0, 0.0, 1.0)), Err(Error::Divergent { .. })));
    }

    #[test]
    fn finite_horizon_clock_approaches_tau_star_from_below() {
        let params = p(0.5, 0.75, 1.0);
        let ts = tau_star(&params).unwrap();
        let mut prev = 0.0;
        for k in 0..=8 {
            let s = sigma(&params, 10f64.powi(k)).unwrap();
            assert!(s < ts && s > prev);
            prev = s;
        }
        assert!(rel(sigma(&params, 1e8).unwrap(), ts) < 1e-4);
    }

    #[test]
    fn f32_profiles_agree_with_f64() {
        let p32 = ProblemParams::<f32>::new(2.0, 0.5, 1.0, 1).unwrap();
        let p64 = p(2.0, 0.5, 1.0);
        let a = sigma(&p32, 3.0).unwrap() as f64;
        let b = sigma(&p64, 3.0).unwrap();
        assert!(rel(a, b) < 1e-5);
    }

    #[test]
    fn profile_table_marks_clocks() {
        let rows = profile_table(&p(2.0, 0.5, 1.0), &[0.0, 1.0]).unwrap();
        assert_eq!(rows[1].zeta.at, TimeCoord::Original(1.0));
        assert!(matches!(rows[1].eta.at, TimeCoord::Rescaled(_)));
        assert!((rows[1].eta.value - rows[1].zeta.value).abs() < 1e-12);
        let rows = profile_table(&p(0.5, 0.75, 1.0), &[1.0]).unwrap();
        assert!(rows[0].h.is_none());
    }
}
