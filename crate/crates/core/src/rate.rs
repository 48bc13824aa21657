//! Log-log rate fitting and rate reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Default one-sided slack on fitted exponents.
pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.2;
/// Relative increase tolerated between consecutive samples of a "decreasing" series.
pub const MONOTONE_SLACK: f64 = 1e-3;
pub const MIN_FIT_POINTS: usize = 8;

/// Which trailing part of a series enters a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum FitWindow<T> {
    /// The final fraction of the `log t` range, e.g. `0.5` for the upper half.
    FinalFraction(T),
    /// Points with `t >= t_max / 10^decades`.
    FinalDecades(T),
}

impl<T: Real> Default for FitWindow<T> {
    fn default() -> Self {
        FitWindow::FinalDecades(T::one())
    }
}

impl<T: Real> FitWindow<T> {
    /// Indices of `times` inside the window.
    pub fn select(&self, times: &[T]) -> Vec<usize> {
        let t_max = times
            .iter()
            .copied()
            .filter(|t| *t > T::zero())
            .fold(T::neg_infinity(), T::max);
        if !t_max.is_finite() {
            return Vec::new();
        }
        let threshold = match *self {
            FitWindow::FinalDecades(d) => t_max / T::lit(10.0).powf(d),
            FitWindow::FinalFraction(f) => {
                let t_min = times
                    .iter()
                    .copied()
                    .filter(|t| *t > T::zero())
                    .fold(T::infinity(), T::min);
                let (lo, hi) = (t_min.ln(), t_max.ln());
                (hi - f * (hi - lo)).exp()
            }
        };
        // tiny slack so that a window edge at a sample time includes it
        let threshold = threshold * (T::one() - T::lit(1e-12));
        (0..times.len())
            .filter(|&i| times[i] >= threshold && times[i] > T::zero())
            .collect()
    }
}

/// Least-squares slope of `ln value` against `ln time` over `window`, with its
/// standard error.
pub fn fit_rate<T: Real>(series: &[(T, T)], window: FitWindow<T>) -> Result<(T, T)> {
    let times: Vec<T> = series.iter().map(|p| p.0).collect();
    let chosen = window.select(&times);
    if chosen.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateWindow(format!(
            "{} points in the window, need at least {MIN_FIT_POINTS}",
            chosen.len()
        )));
    }
    let mut xs = Vec::with_capacity(chosen.len());
    let mut ys = Vec::with_capacity(chosen.len());
    for &i in &chosen {
        let (t, v) = series[i];
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::DegenerateWindow(format!("non-positive value {v} at time {t}")));
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    let n = T::of_usize(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxx = xs.iter().map(|&x| (x - mx) * (x - mx)).sum::<T>();
    if !(sxx > T::zero()) {
        return Err(Error::DegenerateWindow("all fit times coincide".into()));
    }
    let sxy = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum::<T>();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum::<T>();
    let stderr = (rss / (n - T::lit(2.0)) / sxx).sqrt();
    Ok((slope, stderr))
}

/// `true` when every consecutive pair satisfies `v[i+1] <= v[i] (1 + slack)`.
pub fn is_decreasing<T: Real>(values: &[T], slack: T) -> bool {
    values.windows(2).all(|p| p[1] <= p[0] * (T::one() + slack))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Observed decay of a compensated error functional against a predicted exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport<T> {
    pub experiment_id: String,
    /// Original times `t`.
    pub original_times: Vec<T>,
    /// Rescaled times `sigma(t)`; the fit variable.
    pub times: Vec<T>,
    pub raw_errors: Vec<T>,
    pub compensated_errors: Vec<T>,
    pub predicted_exponent: T,
    pub slope_tolerance: T,
    pub fitted_slope: T,
    pub stderr: T,
    /// Whether the compensated error decreases over the fit window.
    pub decreasing: bool,
    pub verdict: Verdict,
    pub note: String,
}

impl<T: Real> RateReport<T> {
    /// Fits the compensated series over `window` and assigns the verdict: pass iff
    /// `slope <= predicted + tolerance` and the compensated error decreases over
    /// the window. `inconclusive` when the fit is impossible or `trusted` is false.
    /// An identically zero error passes trivially.
    #[allow(clippy::too_many_arguments)]
    pub fn assess(
        experiment_id: impl Into<String>,
        original_times: Vec<T>,
        times: Vec<T>,
        raw_errors: Vec<T>,
        compensated_errors: Vec<T>,
        predicted_exponent: T,
        slope_tolerance: T,
        window: FitWindow<T>,
        trusted: bool,
    ) -> Self {
        let series: Vec<(T, T)> = times.iter().copied().zip(compensated_errors.iter().copied()).collect();
        let mut note = String::new();
        let (fitted_slope, stderr, decreasing, fitted) = match fit_rate(&series, window) {
            Ok((slope, stderr)) => {
                let chosen: Vec<T> = window
                    .select(&times)
                    .into_iter()
                    .map(|i| compensated_errors[i])
                    .collect();
                (slope, stderr, is_decreasing(&chosen, T::lit(MONOTONE_SLACK)), true)
            }
            Err(e) => {
                note = e.to_string();
                (T::nan(), T::nan(), false, false)
            }
        };
        let identically_zero = !compensated_errors.is_empty() && compensated_errors.iter().all(|&e| e == T::zero());
        let verdict = if identically_zero {
            note = "error identically zero".into();
            Verdict::Pass
        } else if !fitted {
            Verdict::Inconclusive
        } else if fitted_slope <= predicted_exponent + slope_tolerance && decreasing {
            if trusted {
                Verdict::Pass
            } else {
                note = "supporting estimate did not stabilize".into();
                Verdict::Inconclusive
            }
        } else {
            Verdict::Fail
        };
        Self {
            experiment_id: experiment_id.into(),
            original_times,
            times,
            raw_errors,
            compensated_errors,
            predicted_exponent,
            slope_tolerance,
            fitted_slope,
            stderr,
            decreasing,
            verdict,
            note,
        }
    }

    pub const CSV_HEADER: &'static str =
        "experiment_id,predicted_exponent,slope_tolerance,fitted_slope,stderr,decreasing,verdict";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{},{}",
            self.experiment_id,
            self.predicted_exponent,
            self.slope_tolerance,
            self.fitted_slope,
            self.stderr,
            self.decreasing,
            self.verdict.name()
        )
    }

    /// `t,sigma,raw_error,compensated_error` rows with a header line.
    pub fn series_csv(&self) -> String {
        let mut out = String::from("t,sigma,raw_error,compensated_error\n");
        for i in 0..self.times.len() {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e}",
                self.original_times[i], self.times[i], self.raw_errors[i], self.compensated_errors[i]
            );
        }
        out
    }

    /// Two columns `ln sigma`, `ln error` for positive samples.
    pub fn plot_data(&self) -> String {
        let mut out = String::new();
        for (t, e) in self.times.iter().zip(&self.compensated_errors) {
            if *t > T::zero() && *e > T::zero() {
                let _ = writeln!(out, "{:e} {:e}", t.ln(), e.ln());
            }
        }
        out
    }

    pub fn text_block(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[{}]", self.experiment_id);
        let _ = writeln!(out, "  predicted exponent : {:.4}", self.predicted_exponent);
        let _ = writeln!(out, "  slope tolerance    : {:.4}", self.slope_tolerance);
        let _ = writeln!(
            out,
            "  fitted slope       : {:.4} +/- {:.4}",
            self.fitted_slope, self.stderr
        );
        let _ = writeln!(out, "  decreasing         : {}", self.decreasing);
        let _ = writeln!(out, "  verdict            : {}", self.verdict.name());
        if !self.note.is_empty() {
            let _ = writeln!(out, "  note               : {}", self.note);
        }
        out
    }
}
