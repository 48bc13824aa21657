//! Inductive moment coefficients `m_nu(f, t)` and the expansion
//! `f ~ sum_{|nu| <= K} m_nu(f,t) g_nu(., t)`.
//!
//! The coefficients are defined recursively over the partial order of
//! multi-indices:
//!
//! ```text
//! m_0(f,t)  = int f
//! m_nu(f,t) = int x^nu f - sum_{omega <= nu, omega != nu} m_omega(f,t) int x^nu g_omega(x,t) dx
//! ```
//!
//! which makes every moment `int x^omega [f - sum m_nu g_nu]`, `|omega| <= K`, vanish.
//! All integrals, including `int x^nu g_omega`, are midpoint sums on the grid of `f`.

use std::collections::HashMap;
use std::fmt::Write as _;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::kernel::{self, boundary_negligible, heat_semigroup, lq_norm, weighted_norm, BOUNDARY_MASS_THRESHOLD};
use crate::multi_index::MultiIndex;
use crate::real::Real;

/// Default residual tolerance relative to `|||f|||_K`.
pub const DEFAULT_RELATIVE_TOLERANCE: f64 = 1e-7;

/// `[K]`: the integer with `K - 1 < [K] <= K`.
pub fn integer_part<T: Real>(k: T) -> u32 {
    k.floor().to_u32().unwrap_or(0)
}

/// `int x^nu f(x) dx` by the midpoint rule.
pub fn raw_moment<T: Real>(f: &GridField<T>, nu: &MultiIndex) -> Result<T> {
    if nu.dim() != f.spec.dim {
        return Err(Error::Shape(format!(
            "multi-index of dim {} on a grid of dim {}",
            nu.dim(),
            f.spec.dim
        )));
    }
    if !boundary_negligible(f, T::lit(BOUNDARY_MASS_THRESHOLD)) {
        warn!("raw_moment: field is not negligible at the truncation boundary");
    }
    Ok(monomial_integral(f, nu))
}

fn monomial_integral<T: Real>(f: &GridField<T>, nu: &MultiIndex) -> T {
    let spec = f.spec;
    let coords = spec.axis_coords();
    let tables: Vec<Vec<T>> = nu
        .entries()
        .iter()
        .map(|&p| coords.iter().map(|&x| x.powi(p as i32)).collect())
        .collect();
    let n = spec.points_per_axis;
    let sum = match spec.dim {
        1 => f.values.iter().zip(&tables[0]).map(|(&v, &w)| v * w).sum::<T>(),
        _ => f
            .values
            .chunks(n)
            .enumerate()
            .map(|(i, row)| tables[0][i] * row.iter().zip(&tables[1]).map(|(&v, &w)| v * w).sum::<T>())
            .sum::<T>(),
    };
    sum * spec.cell_volume()
}

/// Memoised evaluation of `m_nu(f, t)` over the lattice of multi-indices.
pub struct MomentSolver<'a, T: Real> {
    f: &'a GridField<T>,
    t: T,
    coefficients: HashMap<MultiIndex, T>,
    kernels: HashMap<MultiIndex, GridField<T>>,
}

impl<'a, T: Real> MomentSolver<'a, T> {
    pub fn new(f: &'a GridField<T>, t: T) -> Result<Self> {
        if !(t >= T::zero()) {
            return Err(Error::domain("t", format!("must be >= 0, got {t}")));
        }
        if !boundary_negligible(f, T::lit(BOUNDARY_MASS_THRESHOLD)) {
            warn!("moment expansion: field is not negligible at the truncation boundary");
        }
        Ok(Self {
            f,
            t,
            coefficients: HashMap::new(),
            kernels: HashMap::new(),
        })
    }

    fn kernel(&mut self, omega: &MultiIndex) -> Result<&GridField<T>> {
        if !self.kernels.contains_key(omega) {
            let field = kernel::sample_g_kernel(self.f.spec, omega, self.t)?;
            self.kernels.insert(omega.clone(), field);
        }
        Ok(&self.kernels[omega])
    }

    /// `m_nu(f, t)`.
    pub fn coefficient(&mut self, nu: &MultiIndex) -> Result<T> {
        if nu.dim() != self.f.spec.dim {
            return Err(Error::Shape(format!(
                "multi-index of dim {} on a grid of dim {}",
                nu.dim(),
                self.f.spec.dim
            )));
        }
        if let Some(&v) = self.coefficients.get(nu) {
            return Ok(v);
        }
        let mut value = monomial_integral(self.f, nu);
        for omega in nu.strict_lower_set() {
            let m_omega = self.coefficient(&omega)?;
            let overlap = monomial_integral(self.kernel(&omega)?, nu);
            value = value - m_omega * overlap;
        }
        self.coefficients.insert(nu.clone(), value);
        Ok(value)
    }

    /// `g_nu(., t)` sampled on the grid of `f`.
    pub fn g_field(&mut self, nu: &MultiIndex) -> Result<GridField<T>> {
        self.kernel(nu).cloned()
    }
}

/// `m_nu(f, t)`.
pub fn moment_coefficient<T: Real>(f: &GridField<T>, nu: &MultiIndex, t: T) -> Result<T> {
    MomentSolver::new(f, t)?.coefficient(nu)
}

/// `m_nu(f, t)` for every `|nu| <= max_order`, graded lexicographic.
pub fn moment_coefficients<T: Real>(f: &GridField<T>, max_order: u32, t: T) -> Result<Vec<(MultiIndex, T)>> {
    let mut solver = MomentSolver::new(f, t)?;
    MultiIndex::all_up_to(f.spec.dim, max_order)
        .into_iter()
        .map(|nu| solver.coefficient(&nu).map(|v| (nu, v)))
        .collect()
}

/// `sum_nu c_nu g_nu(., t)` on `spec`.
pub fn expansion_field<T: Real>(
    spec: crate::grid::GridSpec<T>,
    coefficients: &[(MultiIndex, T)],
    t: T,
) -> Result<GridField<T>> {
    let mut out = GridField::zeros(spec);
    for (nu, c) in coefficients {
        if *c != T::zero() {
            out.axpy(*c, &kernel::sample_g_kernel(spec, nu, t)?)?;
        }
    }
    Ok(out)
}

/// Coefficients of an expansion, its residual moments and optionally the
/// constants `M_nu = (-1)^|nu| m_nu / nu!` of the `d^nu G` form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport<T> {
    pub k: T,
    pub at_time: T,
    pub coefficients: Vec<(MultiIndex, T)>,
    pub residual_moments: Vec<(MultiIndex, T)>,
    pub m_constants: Option<Vec<(MultiIndex, T)>>,
    pub tolerance: T,
    pub valid: bool,
}

impl<T: Real> ExpansionReport<T> {
    pub fn coefficient(&self, nu: &MultiIndex) -> Option<T> {
        lookup(&self.coefficients, nu)
    }

    pub fn constant(&self, nu: &MultiIndex) -> Option<T> {
        self.m_constants.as_ref().and_then(|c| lookup(c, nu))
    }

    /// Fills `m_constants` from the coefficients.
    pub fn with_constants_from_coefficients(mut self) -> Self {
        self.m_constants = Some(
            self.coefficients
                .iter()
                .map(|(nu, m)| (nu.clone(), kernel::g_normalisation::<T>(nu) * *m))
                .collect(),
        );
        self
    }

    pub fn max_residual(&self) -> T {
        self.residual_moments.iter().fold(T::zero(), |a, (_, r)| a.max(r.abs()))
    }

    /// Flat `key = value` record; multi-indices are dash-joined (`coefficient.2-0`).
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "K = {}", self.k);
        let _ = writeln!(out, "at_time = {}", self.at_time);
        let _ = writeln!(out, "tolerance = {}", self.tolerance);
        let _ = writeln!(out, "valid = {}", self.valid);
        for (nu, v) in &self.coefficients {
            let _ = writeln!(out, "coefficient.{nu} = {v}");
        }
        for (nu, v) in &self.residual_moments {
            let _ = writeln!(out, "residual.{nu} = {v}");
        }
        if let Some(constants) = &self.m_constants {
            for (nu, v) in constants {
                let _ = writeln!(out, "M.{nu} = {v}");
            }
        }
        out
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut k = None;
        let mut at_time = None;
        let mut tolerance = None;
        let mut valid = None;
        let mut coefficients = Vec::new();
        let mut residual_moments = Vec::new();
        let mut constants = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(a, b)| (a.trim(), b.trim()))
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
            let number = || -> Result<T> {
                value
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::Parse(format!("line {}: `{value}`: {e}", lineno + 1)))
            };
            match key {
                "K" => k = Some(number()?),
                "at_time" => at_time = Some(number()?),
                "tolerance" => tolerance = Some(number()?),
                "valid" => {
                    valid = Some(
                        value
                            .parse::<bool>()
                            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?,
                    )
                }
                _ => {
                    let (kind, index) = key
                        .split_once('.')
                        .ok_or_else(|| Error::Parse(format!("line {}: unknown key `{key}`", lineno + 1)))?;
                    let nu: MultiIndex = index.parse()?;
                    match kind {
                        "coefficient" => coefficients.push((nu, number()?)),
                        "residual" => residual_moments.push((nu, number()?)),
                        "M" => constants.push((nu, number()?)),
                        _ => return Err(Error::Parse(format!("line {}: unknown key `{key}`", lineno + 1))),
                    }
                }
            }
        }
        let missing = |name: &str| Error::Parse(format!("missing `{name}`"));
        Ok(Self {
            k: k.ok_or_else(|| missing("K"))?,
            at_time: at_time.ok_or_else(|| missing("at_time"))?,
            coefficients,
            residual_moments,
            m_constants: if constants.is_empty() { None } else { Some(constants) },
            tolerance: tolerance.ok_or_else(|| missing("tolerance"))?,
            valid: valid.ok_or_else(|| missing("valid"))?,
        })
    }
}

fn lookup<T: Copy>(entries: &[(MultiIndex, T)], nu: &MultiIndex) -> Option<T> {
    entries.iter().find(|(k, _)| k == nu).map(|(_, v)| *v)
}

/// Expands `f` to order `K` at time `t` with the default residual tolerance.
pub fn expand<T: Real>(f: &GridField<T>, k: T, t: T) -> Result<ExpansionReport<T>> {
    expand_with_tolerance(f, k, t, T::lit(DEFAULT_RELATIVE_TOLERANCE) * weighted_norm(f, k))
}

pub fn expand_with_tolerance<T: Real>(f: &GridField<T>, k: T, t: T, tolerance: T) -> Result<ExpansionReport<T>> {
    if !(k >= T::zero()) {
        return Err(Error::domain("K", format!("must be >= 0, got {k}")));
    }
    let order = integer_part(k);
    let mut solver = MomentSolver::new(f, t)?;
    let indices = MultiIndex::all_up_to(f.spec.dim, order);
    let mut coefficients = Vec::with_capacity(indices.len());
    let mut residual = f.clone();
    for nu in &indices {
        let m = solver.coefficient(nu)?;
        residual.axpy(-m, &solver.g_field(nu)?)?;
        coefficients.push((nu.clone(), m));
    }
    let residual_moments: Vec<(MultiIndex, T)> = indices
        .iter()
        .map(|omega| (omega.clone(), monomial_integral(&residual, omega)))
        .collect();
    let valid = residual_moments.iter().all(|(_, r)| r.abs() <= tolerance);
    Ok(ExpansionReport {
        k,
        at_time: t,
        coefficients,
        residual_moments,
        m_constants: None,
        tolerance,
        valid,
    })
}

/// `E_{K,q}[f](t) = (1+t)^(K/2) [t^((N/2)(1-1/q)) ||f||_q + ||f||_1] + |||f|||_K`.
pub fn e_functional<T: Real>(f: &GridField<T>, k: T, q: T, t: T) -> T {
    let half = T::lit(0.5);
    let n = T::of_usize(f.spec.dim);
    let inv_q = if q.is_infinite() { T::zero() } else { q.recip() };
    let decay = t.powf(half * n * (T::one() - inv_q));
    (T::one() + t).powf(half * k) * (decay * lq_norm(f, q) + lq_norm(f, T::one())) + weighted_norm(f, k)
}

/// Duhamel remainder together with a time-quadrature error estimate.
#[derive(Debug, Clone)]
pub struct DuhamelRemainder<T> {
    pub field: GridField<T>,
    /// Sup-norm difference between the full trapezoid rule and the rule on every
    /// other sample, divided by 3 (Richardson estimate of the fine-rule error).
    pub quadrature_error: T,
}

/// `R_K[f](t) = int_0^t e^((t-s) Laplace) f(s) ds - sum_{|nu|<=K} [int_0^t m_nu(f(s), s) ds] g_nu(t)`
/// by the composite trapezoid rule over the samples of `f_traj`, which must
/// start at `s = 0` and end at `s = t`.
pub fn duhamel_remainder<T: Real>(f_traj: &[(T, GridField<T>)], k: T, t: T) -> Result<DuhamelRemainder<T>> {
    if f_traj.len() < 2 {
        return Err(Error::domain("f_traj", "need at least two samples"));
    }
    let first = f_traj[0].0;
    let last = f_traj[f_traj.len() - 1].0;
    if first != T::zero() || (last - t).abs() > T::epsilon() * t.abs().max(T::one()) * T::lit(16.0) {
        return Err(Error::domain("f_traj", "samples must span [0, t]"));
    }
    if f_traj.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::domain("f_traj", "sample times must increase"));
    }
    let spec = f_traj[0].1.spec;
    let order = integer_part(k);
    let indices = MultiIndex::all_up_to(spec.dim, order);

    let mut propagated = Vec::with_capacity(f_traj.len());
    let mut coefficient_series = Vec::with_capacity(f_traj.len());
    for (s, field) in f_traj {
        let lag = t - *s;
        propagated.push(if lag > T::zero() {
            heat_semigroup(field, lag)?
        } else {
            field.clone()
        });
        let mut solver = MomentSolver::new(field, *s)?;
        let row = indices
            .iter()
            .map(|nu| solver.coefficient(nu))
            .collect::<Result<Vec<_>>>()?;
        coefficient_series.push(row);
    }
    let times: Vec<T> = f_traj.iter().map(|(s, _)| *s).collect();

    let remainder = |stride: usize| -> Result<GridField<T>> {
        let picks: Vec<usize> = (0..times.len())
            .step_by(stride)
            .chain(std::iter::once(times.len() - 1))
            .collect();
        let mut picks = picks;
        picks.dedup();
        let mut integral = GridField::zeros(spec);
        let mut coeff_integrals = vec![T::zero(); indices.len()];
        for w in picks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half_dt = T::lit(0.5) * (times[b] - times[a]);
            integral.axpy(half_dt, &propagated[a])?;
            integral.axpy(half_dt, &propagated[b])?;
            for (j, c) in coeff_integrals.iter_mut().enumerate() {
                *c = *c + half_dt * (coefficient_series[a][j] + coefficient_series[b][j]);
            }
        }
        let coefficients: Vec<(MultiIndex, T)> = indices.iter().cloned().zip(coeff_integrals).collect();
        integral.sub(&expansion_field(spec, &coefficients, t)?)
    };

    let fine = remainder(1)?;
    let quadrature_error = if times.len() >= 3 {
        let coarse = remainder(2)?;
        lq_norm(&fine.sub(&coarse)?, T::infinity()) / T::lit(3.0)
    } else {
        T::infinity()
    };
    let scale = lq_norm(&fine, T::infinity()).max(T::epsilon());
    if quadrature_error > T::lit(1e-2) * scale {
        warn!(
            "duhamel_remainder: time quadrature not converged (estimate {:e}, remainder {:e})",
            quadrature_error.as_f64(),
            scale.as_f64()
        );
    }
    Ok(DuhamelRemainder {
        field: fine,
        quadrature_error,
    })
}
