//! Coefficient `A`, source `F` and flux correction `H` of the rescaled problem
//!
//! ```text
//! w_tau = div(A(tau,w) grad w) + F(tau,w) = Laplace w + div H + F
//! ```
//!
//! All three are functions of `rho = 1 + lambda^-alpha eta(tau)^(alpha-1) w`,
//! which equals `u(x, t(tau)) / zeta_lambda(t(tau))` along solutions.

use crate::error::{Error, Result};
use crate::profiles::{eta, ProblemParams};
use crate::real::Real;

/// Quantities of the rescaled nonlinearities that depend on `tau` only.
#[derive(Debug, Clone, Copy)]
pub struct RescaledCoefficients<T> {
    pub tau: T,
    pub m: T,
    pub alpha: T,
    /// `kappa = lambda^-alpha eta^(alpha-1)`, so that `rho = 1 + kappa w`.
    pub kappa: T,
    /// `lambda^alpha eta^-(m-1) / m`.
    pub source_prefactor: T,
}

impl<T: Real> RescaledCoefficients<T> {
    pub fn at(params: &ProblemParams<T>, tau: T) -> Result<Self> {
        let eta = eta(params, tau)?;
        Ok(Self {
            tau,
            m: params.m,
            alpha: params.alpha,
            kappa: params.lambda.powf(-params.alpha) * eta.powf(params.alpha - T::one()),
            source_prefactor: params.lambda.powf(params.alpha) * eta.powf(T::one() - params.m) / params.m,
        })
    }

    /// `rho = 1 + kappa w`, required to be positive.
    #[inline]
    pub fn ratio(&self, w: T) -> Result<T> {
        let rho = T::one() + self.kappa * w;
        if !(rho > T::zero()) {
            return Err(Error::Positivity {
                time: self.tau.as_f64(),
                ratio: rho.as_f64(),
            });
        }
        Ok(rho)
    }

    /// `A = rho^(m-1)`.
    pub fn coeff_a(&self, w: T) -> Result<T> {
        let rho = self.ratio(w)?;
        Ok(if self.m == T::one() {
            T::one()
        } else {
            rho.powf(self.m - T::one())
        })
    }

    /// `F = lambda^alpha eta^-(m-1) / m * (rho^alpha - 1 - alpha kappa w)`.
    ///
    /// The prefactor is the one produced by substituting `u = zeta + lambda^-alpha zeta^alpha w`
    /// and `d tau = m zeta^(m-1) dt` into the original equation. The often quoted
    /// form with `m` in place of `1 / m` agrees with it only for `m = 1`.
    pub fn source_f(&self, w: T) -> Result<T> {
        self.ratio(w)?;
        Ok(self.source_prefactor * power_remainder(self.alpha, self.kappa * w))
    }

    /// `dF/dw`.
    pub fn source_slope(&self, w: T) -> Result<T> {
        let rho = self.ratio(w)?;
        Ok(self.source_prefactor * self.alpha * self.kappa * (rho.powf(self.alpha - T::one()) - T::one()))
    }
}

/// `(1 + x)^a - 1 - a x`, accurate for small `|x|`.
pub fn power_remainder<T: Real>(a: T, x: T) -> T {
    if a == T::zero() || a == T::one() || x == T::zero() {
        return T::zero();
    }
    if x.abs() < T::lit(1e-3) {
        // Binomial series from the quadratic term on.
        let mut term = a * (a - T::one()) / T::lit(2.0) * x * x;
        let mut sum = term;
        for k in 3..8 {
            term = term * (a - T::of_usize(k - 1)) / T::of_usize(k) * x;
            sum = sum + term;
        }
        return sum;
    }
    (a * x.ln_1p()).exp_m1() - a * x
}

/// Secant slope `(b^m - a^m) / (b - a)` of `r -> r^m`, equal to `m a^(m-1)` when `a = b`.
#[inline]
pub fn power_secant<T: Real>(m: T, a: T, b: T) -> T {
    if m == T::one() {
        return T::one();
    }
    let mid = T::lit(0.5) * (a + b);
    let rel = (b - a) / mid;
    if rel.abs() < T::lit(1e-4) {
        // m mid^(m-1) (1 + (m-1)(m-2) rel^2 / 24) + O(rel^4)
        let correction = T::one() + (m - T::one()) * (m - T::lit(2.0)) * rel * rel / T::lit(24.0);
        return m * mid.powf(m - T::one()) * correction;
    }
    (b.powf(m) - a.powf(m)) / (b - a)
}

/// `A(tau, w)`.
pub fn coeff_a<T: Real>(params: &ProblemParams<T>, tau: T, w: T) -> Result<T> {
    RescaledCoefficients::at(params, tau)?.coeff_a(w)
}

/// `F(tau, w)`.
pub fn source_f<T: Real>(params: &ProblemParams<T>, tau: T, w: T) -> Result<T> {
    RescaledCoefficients::at(params, tau)?.source_f(w)
}

/// `H(tau, w, grad w) = (A(tau, w) - 1) grad w`.
pub fn flux_h<T: Real>(params: &ProblemParams<T>, tau: T, w: T, grad_w: &[T]) -> Result<Vec<T>> {
    let a = coeff_a(params, tau, w)?;
    Ok(grad_w.iter().map(|&g| (a - T::one()) * g).collect())
}

/// `int_0^w [A(tau, xi) - 1] d xi`, the potential whose gradient is `H`.
pub fn flux_potential<T: Real>(params: &ProblemParams<T>, tau: T, w: T) -> Result<T> {
    let c = RescaledCoefficients::at(params, tau)?;
    let rho = c.ratio(w)?;
    if c.kappa == T::zero() {
        return Ok(T::zero());
    }
    // int_0^w rho(xi)^(m-1) d xi = (rho^m - 1) / (m kappa)
    Ok((rho.powf(c.m) - T::one()) / (c.m * c.kappa) - w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn p(m: f64, alpha: f64, lambda: f64) -> ProblemParams<f64> {
        ProblemParams::new(m, alpha, lambda, 1).unwrap()
    }

    #[test]
    fn coeff_a_examples() {
        for m in [0.5, 1.0, 2.0] {
            assert_eq!(coeff_a(&p(m, 0.3, 1.0), 2.0, 0.0).unwrap(), 1.0);
        }
        assert_eq!(coeff_a(&p(1.0, 0.3, 1.0), 2.0, 0.7).unwrap(), 1.0);
        assert!((coeff_a(&p(2.0, 0.0, 1.0), 0.0, 0.5).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(
            coeff_a(&p(2.0, 0.0, 1.0), 0.0, -1.5),
            Err(Error::Positivity { .. })
        ));
    }

    #[test]
    fn coeff_a_matches_u_over_zeta() {
        // rho = u / zeta_lambda: with lambda = 1, alpha = 0, tau = 0, w = 0.5 the state is u = 1.5.
        let params = p(2.0, 0.0, 1.0);
        let u: f64 = 1.5;
        let zeta = params.zeta_lambda(0.0);
        assert!(((u / zeta).powf(params.m - 1.0) - coeff_a(&params, 0.0, 0.5).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn coeff_a_tends_to_one() {
        let params = p(2.0, 0.5, 1.0);
        let late = coeff_a(&params, 1e6, 0.3).unwrap();
        assert!((late - 1.0).abs() < 1e-2);
    }

    #[test]
    fn source_examples() {
        assert_eq!(source_f(&p(2.0, 0.5, 1.0), 1.0, 0.0).unwrap(), 0.0);
        for w in [-0.5, 0.3, 2.0] {
            assert_eq!(source_f(&p(2.0, 0.0, 1.0), 1.0, w).unwrap(), 0.0);
        }
        let v = source_f(&p(1.0, 0.5, 1.0), 0.0, 1.0).unwrap();
        assert!((v - (2f64.sqrt() - 1.5)).abs() < 1e-15);
        assert!((v + 0.085786).abs() < 1e-6);
    }

    #[test]
    fn source_is_quadratic_near_zero() {
        let params = p(2.0, 0.5, 1.0);
        for tau in [0.0, 10.0, 1000.0] {
            let c = RescaledCoefficients::at(&params, tau).unwrap();
            let h = crate::profiles::h_decay(&params, tau).unwrap();
            for w in [1e-6, 1e-3, 0.1] {
                let ratio = c.source_f(w).unwrap() / (w * w);
                assert!(ratio.abs() <= 10.0 * h, "tau {tau} w {w}: {ratio} vs {h}");
            }
        }
    }

    #[test]
    fn source_slope_matches_finite_difference() {
        let params = p(0.8, 0.2, 1.3);
        let c = RescaledCoefficients::at(&params, 3.0).unwrap();
        for w in [-0.3, 0.01, 0.5] {
            let fd = oracle::richardson(
                |h| oracle::central_difference(&|x| c.source_f(x).unwrap(), w, 1, h),
                1e-3,
                3,
            );
            assert!((c.source_slope(w).unwrap() - fd).abs() < 1e-10);
        }
    }

    #[test]
    fn power_remainder_series_joins_closed_form() {
        for a in [-1.0f64, 0.25, 0.5, 0.75] {
            for x in [-0.999e-3, 0.999e-3] {
                let series = power_remainder(a, x);
                let closed = (1.0 + x).powf(a) - 1.0 - a * x;
                assert!((series - closed).abs() < 1e-9 * closed.abs(), "a {a} x {x}");
            }
            let below = power_remainder(a, 0.999e-3);
            let above = power_remainder(a, 1.001e-3);
            let slope = (above - below) / 2e-6;
            let exact = a * ((1.0f64 + 1e-3).powf(a - 1.0) - 1.0);
            assert!((slope - exact).abs() < 1e-6 * exact.abs());
        }
    }

    #[test]
    fn secant_of_power() {
        assert!((power_secant(2.0f64, 1.0, 3.0) - 4.0).abs() < 1e-15);
        assert!((power_secant(0.5f64, 4.0, 4.0) - 0.25).abs() < 1e-15);
        let near = power_secant(0.8, 1.0, 1.0 + 1e-5);
        let exact = ((1.0f64 + 1e-5).powf(0.8) - 1.0) / 1e-5;
        assert!((near - exact).abs() < 1e-10);
    }

    #[test]
    fn flux_h_examples() {
        assert_eq!(flux_h(&p(1.0, 0.3, 1.0), 1.0, 0.4, &[2.0]).unwrap(), vec![0.0]);
        assert_eq!(
            flux_h(&p(2.0, 0.3, 1.0), 1.0, 0.0, &[2.0, -1.0]).unwrap(),
            vec![0.0, 0.0]
        );
        let h = flux_h(&p(2.0, 0.0, 1.0), 0.0, 0.5, &[2.0]).unwrap();
        assert!((h[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flux_h_is_gradient_of_potential() {
        let params = p(2.5, 0.5, 1.2);
        let tau = 0.7;
        let w = |x: f64| 0.4 * (-x * x).exp();
        let dw = |x: f64| -0.8 * x * (-x * x).exp();
        for x in [-1.0, 0.3, 1.2] {
            let h = flux_h(&params, tau, w(x), &[dw(x)]).unwrap()[0];
            let fd = oracle::richardson(
                |step| oracle::central_difference(&|y| flux_potential(&params, tau, w(y)).unwrap(), x, 1, step),
                1e-2,
                3,
            );
            assert!((h - fd).abs() < 1e-10, "x {x}: {h} vs {fd}");
        }
    }
}
