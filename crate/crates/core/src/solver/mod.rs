//! Finite-volume solver for `u_t = Laplace(u^m) + u^alpha` on a truncated cube,
//! in original time `t` and in the rescaled clock `tau = sigma(t)`.
//!
//! Both formulations evolve a deviation `d` from the spatially homogeneous
//! solution: `v = u - zeta_lambda(t)` in original variables and `w` in rescaled
//! variables. The deviation vanishes at the truncation boundary. With
//! `rho = u / zeta_lambda = 1 + d / scale` the diffusion flux across a face is
//!
//! ```text
//! mult * secant(rho_i, rho_j) * (d_j - d_i) / h^2,   secant = slope of r -> r^m
//! ```
//!
//! with `(scale, mult) = (zeta, zeta^(m-1))` in original variables and
//! `(1/kappa, 1/m)` in rescaled variables. The secant is evaluated at the
//! extrapolated state and the new solution is obtained from a single symmetric
//! positive definite solve; the source is extrapolated explicitly. The time
//! integrator is variable-step second order IMEX BDF (SBDF2) started by one
//! IMEX Euler step.

pub mod nonlinear;
pub mod perturbation;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::kernel::lq_norm;
use crate::linalg::{conjugate_gradient, solve_tridiagonal};
use crate::profiles::{eta, sigma, time_of_tau, zeta, ProblemParams, Regime};
use crate::real::Real;

pub use nonlinear::{coeff_a, flux_h, flux_potential, power_remainder, power_secant, source_f, RescaledCoefficients};
pub use perturbation::InitialPerturbation;

pub const DEFAULT_BOUND_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_STEPS: usize = 5_000_000;
const CG_RELATIVE_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeStepper<T> {
    /// Constant step `dt_initial`, shortened only to land on snapshot times.
    Fixed,
    /// Step limited by the explicit source stability bound, by growth of at most
    /// 25% per step, and by `max_relative_step` times the local clock scale.
    Adaptive { max_relative_step: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// `u = zeta_lambda(t)` (equivalently `w = 0`) on the boundary of the cube.
    FarFieldOde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub grid: GridSpec<T>,
    pub time_stepper: TimeStepper<T>,
    pub dt_initial: T,
    pub cfl_safety: T,
    pub boundary: BoundaryCondition,
    /// Output times: `t` for [`solve_original`], `tau` for [`solve_rescaled`].
    pub snapshot_times: Vec<T>,
    /// Relative slack allowed on the comparison bounds at each step.
    pub bound_tolerance: T,
    pub max_steps: usize,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(grid: GridSpec<T>, time_stepper: TimeStepper<T>, dt_initial: T, snapshot_times: Vec<T>) -> Result<Self> {
        let config = Self {
            grid,
            time_stepper,
            dt_initial,
            cfl_safety: T::lit(0.5),
            boundary: BoundaryCondition::FarFieldOde,
            snapshot_times,
            bound_tolerance: T::lit(DEFAULT_BOUND_TOLERANCE),
            max_steps: DEFAULT_MAX_STEPS,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        GridSpec::new(self.grid.dim, self.grid.half_width, self.grid.points_per_axis)?;
        if !(self.dt_initial > T::zero() && self.dt_initial.is_finite()) {
            return Err(Error::domain(
                "dt_initial",
                format!("must be > 0, got {}", self.dt_initial),
            ));
        }
        if !(self.cfl_safety > T::zero() && self.cfl_safety <= T::one()) {
            return Err(Error::domain(
                "cfl_safety",
                format!("must lie in (0, 1], got {}", self.cfl_safety),
            ));
        }
        if let TimeStepper::Adaptive { max_relative_step } = self.time_stepper {
            if !(max_relative_step > T::zero() && max_relative_step.is_finite()) {
                return Err(Error::domain(
                    "max_relative_step",
                    format!("must be > 0, got {max_relative_step}"),
                ));
            }
        }
        if self.snapshot_times.is_empty() {
            return Err(Error::domain("snapshot_times", "must not be empty"));
        }
        let mut previous = T::zero();
        for &s in &self.snapshot_times {
            if !(s > previous && s.is_finite()) {
                return Err(Error::domain(
                    "snapshot_times",
                    format!("must be positive and strictly increasing, got {s} after {previous}"),
                ));
            }
            previous = s;
        }
        if !(self.bound_tolerance >= T::zero()) {
            return Err(Error::domain("bound_tolerance", "must be >= 0"));
        }
        if self.max_steps == 0 {
            return Err(Error::domain("max_steps", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariableTag {
    UOriginal,
    WRescaled,
}

impl VariableTag {
    pub fn name(self) -> &'static str {
        match self {
            VariableTag::UOriginal => "u-original",
            VariableTag::WRescaled => "w-rescaled",
        }
    }
}

/// `c = inf(lambda + phi)` and `c' = sup(lambda + phi)`, taken over the grid and
/// the far field (where `phi -> 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConstants<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> ComparisonConstants<T> {
    pub fn of(params: &ProblemParams<T>, phi: &GridField<T>) -> Self {
        Self {
            lower: params.lambda + phi.min().min(T::zero()),
            upper: params.lambda + phi.max().max(T::zero()),
        }
    }

    /// `(zeta_c(t) / zeta_lambda(t), zeta_c'(t) / zeta_lambda(t))`.
    pub fn ratio_bounds(&self, params: &ProblemParams<T>, t: T) -> Result<(T, T)> {
        let z = params.zeta_lambda(t);
        Ok((zeta(params, self.lower, t)? / z, zeta(params, self.upper, t)? / z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDiagnostics<T> {
    /// Snapshot time in the trajectory's own clock.
    pub time: T,
    /// The corresponding original time `t`.
    pub original_time: T,
    pub min: T,
    pub max: T,
    /// Norms of the renormalized deviation (`U` or `w`).
    pub norm_l1: T,
    pub norm_l2: T,
    pub norm_linf: T,
    /// `(min rho - L) / L` with `L = zeta_c / zeta_lambda`.
    pub lower_margin: T,
    /// `(U - max rho) / U` with `U = zeta_c' / zeta_lambda`.
    pub upper_margin: T,
    /// Largest `|U|` on the outermost layer of nodes.
    pub boundary_abs: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStatistics<T> {
    pub steps: usize,
    pub min_dt: T,
    pub max_dt: T,
    /// Smallest relative margins to the comparison bounds over all steps.
    pub worst_lower_margin: T,
    pub worst_upper_margin: T,
    pub linear_iterations: usize,
}

/// Snapshots of a solve, including the initial state at time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub variable_tag: VariableTag,
    pub params: ProblemParams<T>,
    pub times: Vec<T>,
    /// `u` for original runs, `w` for rescaled runs.
    pub fields: Vec<GridField<T>>,
    /// `u - zeta_lambda(t)` for original runs (kept to avoid cancellation); empty otherwise.
    pub deviations: Vec<GridField<T>>,
    pub diagnostics: Vec<SnapshotDiagnostics<T>>,
    pub comparison: ComparisonConstants<T>,
    pub statistics: StepStatistics<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> GridSpec<T> {
        self.fields[0].spec
    }

    /// Deviation from the homogeneous solution at snapshot `i` (`u - zeta_lambda` or `w`).
    pub fn deviation(&self, i: usize) -> &GridField<T> {
        match self.variable_tag {
            VariableTag::UOriginal => &self.deviations[i],
            VariableTag::WRescaled => &self.fields[i],
        }
    }

    /// Original time of snapshot `i`.
    pub fn original_time(&self, i: usize) -> T {
        self.diagnostics[i].original_time
    }

    pub fn final_field(&self) -> &GridField<T> {
        self.fields.last().expect("trajectory holds the initial snapshot")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Clock {
    Original,
    Rescaled,
}

/// Everything the scheme needs at one instant.
#[derive(Debug, Clone, Copy)]
struct Frame<T> {
    time: T,
    t: T,
    zeta: T,
    /// `rho = 1 + d * scale_inv`
    scale_inv: T,
    mult: T,
    source_prefactor: T,
    /// Rescaled source subtracts its linearisation at `d = 0`.
    subtract_linear: bool,
    lower: T,
    upper: T,
    clock_scale: T,
}

struct Problem<'a, T> {
    params: &'a ProblemParams<T>,
    clock: Clock,
    comparison: ComparisonConstants<T>,
}

impl<T: Real> Problem<'_, T> {
    fn frame(&self, time: T) -> Result<Frame<T>> {
        let p = self.params;
        let one = T::one();
        let (t, zeta_now) = match self.clock {
            Clock::Original => (time, p.zeta_lambda(time)),
            Clock::Rescaled => (time_of_tau(p, time)?, eta(p, time)?),
        };
        let (lower, upper) = self.comparison.ratio_bounds(p, t)?;
        let growth = zeta_now.powf(p.m - p.alpha);
        Ok(match self.clock {
            Clock::Original => {
                let mult = zeta_now.powf(p.m - one);
                let diffusive = (one + sigma(p, t)?) / (p.m * mult);
                Frame {
                    time,
                    t,
                    zeta: zeta_now,
                    scale_inv: zeta_now.recip(),
                    mult,
                    source_prefactor: zeta_now.powf(p.alpha),
                    subtract_linear: false,
                    lower,
                    upper,
                    clock_scale: diffusive.min(zeta_now.powf(one - p.alpha)),
                }
            }
            Clock::Rescaled => Frame {
                time,
                t,
                zeta: zeta_now,
                scale_inv: p.lambda.powf(-p.alpha) * zeta_now.powf(p.alpha - one),
                mult: p.m.recip(),
                source_prefactor: p.lambda.powf(p.alpha) * zeta_now.powf(one - p.m) / p.m,
                subtract_linear: true,
                lower,
                upper,
                clock_scale: (one + time).min(p.m * growth),
            },
        })
    }

    #[inline]
    fn source(&self, f: &Frame<T>, d: T) -> T {
        let x = d * f.scale_inv;
        let alpha = self.params.alpha;
        if alpha == T::zero() {
            return T::zero();
        }
        if f.subtract_linear {
            f.source_prefactor * power_remainder(alpha, x)
        } else {
            f.source_prefactor * (alpha * x.ln_1p()).exp_m1()
        }
    }

    #[inline]
    fn source_slope(&self, f: &Frame<T>, d: T) -> T {
        let rho = T::one() + d * f.scale_inv;
        let alpha = self.params.alpha;
        let linear = if f.subtract_linear { T::one() } else { T::zero() };
        f.source_prefactor * alpha * f.scale_inv * (rho.powf(alpha - T::one()) - linear)
    }
}

/// Face coefficients of the diffusion operator; boundary faces are listed
/// separately and act against the ghost value `-d`.
struct Faces<T> {
    /// 1-D: `n + 1` faces. 2-D: axis-0 faces `(n + 1) * n` then axis-1 faces `n * (n + 1)`.
    coeff: Vec<T>,
}

fn face_coefficients<T: Real>(spec: &GridSpec<T>, m: T, mult: T, rho: &[T], faces: &mut Faces<T>) {
    let n = spec.points_per_axis;
    let one = T::one();
    let sec = |a: T, b: T| mult * power_secant(m, a, b);
    match spec.dim {
        1 => {
            faces.coeff.resize(n + 1, T::zero());
            faces.coeff[0] = sec(one, rho[0]);
            for f in 1..n {
                faces.coeff[f] = sec(rho[f - 1], rho[f]);
            }
            faces.coeff[n] = sec(rho[n - 1], one);
        }
        _ => {
            let per_axis = (n + 1) * n;
            faces.coeff.resize(2 * per_axis, T::zero());
            // axis 0: face (f, j) between (f - 1, j) and (f, j)
            for f in 0..=n {
                for j in 0..n {
                    let a = if f == 0 { one } else { rho[(f - 1) * n + j] };
                    let b = if f == n { one } else { rho[f * n + j] };
                    faces.coeff[f * n + j] = sec(a, b);
                }
            }
            // axis 1: face (i, f) between (i, f - 1) and (i, f)
            for i in 0..n {
                for f in 0..=n {
                    let a = if f == 0 { one } else { rho[i * n + f - 1] };
                    let b = if f == n { one } else { rho[i * n + f] };
                    faces.coeff[per_axis + i * (n + 1) + f] = sec(a, b);
                }
            }
        }
    }
}

/// Solves `(c0 I - r L) x = rhs` where `L` is the face-weighted Laplacian with
/// homogeneous Dirichlet data half a cell beyond the outer nodes.
fn implicit_solve<T: Real>(
    spec: &GridSpec<T>,
    faces: &Faces<T>,
    c0: T,
    r: T,
    rhs: &mut [T],
    guess: &[T],
) -> Result<usize> {
    let n = spec.points_per_axis;
    let two = T::lit(2.0);
    match spec.dim {
        1 => {
            let a = &faces.coeff;
            let mut diag = vec![T::zero(); n];
            for i in 0..n {
                let left = if i == 0 { two * a[0] } else { a[i] };
                let right = if i == n - 1 { two * a[n] } else { a[i + 1] };
                diag[i] = c0 + r * (left + right);
            }
            let off: Vec<T> = (1..n).map(|f| -r * a[f]).collect();
            solve_tridiagonal(&off, &diag, &off, rhs)?;
            Ok(0)
        }
        _ => {
            let per_axis = (n + 1) * n;
            let ax0 = &faces.coeff[..per_axis];
            let ax1 = &faces.coeff[per_axis..];
            let mut diag = vec![T::zero(); n * n];
            for i in 0..n {
                for j in 0..n {
                    let w = |c: T, boundary: bool| if boundary { two * c } else { c };
                    let s = w(ax0[i * n + j], i == 0)
                        + w(ax0[(i + 1) * n + j], i == n - 1)
                        + w(ax1[i * (n + 1) + j], j == 0)
                        + w(ax1[i * (n + 1) + j + 1], j == n - 1);
                    diag[i * n + j] = c0 + r * s;
                }
            }
            let apply = |x: &[T], out: &mut [T]| {
                for i in 0..n {
                    for j in 0..n {
                        let k = i * n + j;
                        let mut acc = diag[k] * x[k];
                        if i > 0 {
                            acc = acc - r * ax0[i * n + j] * x[k - n];
                        }
                        if i < n - 1 {
                            acc = acc - r * ax0[(i + 1) * n + j] * x[k + n];
                        }
                        if j > 0 {
                            acc = acc - r * ax1[i * (n + 1) + j] * x[k - 1];
                        }
                        if j < n - 1 {
                            acc = acc - r * ax1[i * (n + 1) + j + 1] * x[k + 1];
                        }
                        out[k] = acc;
                    }
                }
            };
            let mut x = guess.to_vec();
            let iterations = conjugate_gradient(
                apply,
                &diag,
                rhs,
                &mut x,
                T::lit(CG_RELATIVE_RESIDUAL),
                10 * n * n + 100,
            )?;
            rhs.copy_from_slice(&x);
            Ok(iterations)
        }
    }
}

fn check_state<T: Real>(frame: &Frame<T>, d: &[T], tolerance: T) -> Result<(T, T)> {
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for &v in d {
        if !v.is_finite() {
            return Err(Error::StepFailure {
                time: frame.time.as_f64(),
                reason: "non-finite value".into(),
                min: f64::NAN,
                max: f64::NAN,
            });
        }
        let rho = T::one() + v * frame.scale_inv;
        lo = lo.min(rho);
        hi = hi.max(rho);
    }
    if !(lo > T::lit(0.5) * frame.lower) {
        return Err(Error::Positivity {
            time: frame.time.as_f64(),
            ratio: lo.as_f64(),
        });
    }
    let lower_margin = (lo - frame.lower) / frame.lower;
    let upper_margin = (frame.upper - hi) / frame.upper;
    if lower_margin < -tolerance || upper_margin < -tolerance {
        return Err(Error::StepFailure {
            time: frame.time.as_f64(),
            reason: format!(
                "comparison bounds violated: u/zeta in [{}, {}] outside [{}, {}]",
                lo, hi, frame.lower, frame.upper
            ),
            min: lo.as_f64(),
            max: hi.as_f64(),
        });
    }
    Ok((lower_margin, upper_margin))
}

fn renormalized<T: Real>(params: &ProblemParams<T>, clock: Clock, frame: &Frame<T>, d: &GridField<T>) -> GridField<T> {
    match clock {
        // U = lambda^alpha (u - zeta) / zeta^alpha
        Clock::Original => d.scaled(params.lambda.powf(params.alpha) / frame.zeta.powf(params.alpha)),
        Clock::Rescaled => d.clone(),
    }
}

fn integrate<T: Real>(
    params: &ProblemParams<T>,
    phi: &InitialPerturbation<T>,
    config: &SolverConfig<T>,
    clock: Clock,
) -> Result<Trajectory<T>> {
    params.validate()?;
    config.validate()?;
    phi.validate(params)?;
    let spec = config.grid;
    if spec.dim != params.dim {
        return Err(Error::Shape(format!(
            "grid dimension {} for problem dimension {}",
            spec.dim, params.dim
        )));
    }
    let phi_field = phi.sample(spec)?;
    let comparison = ComparisonConstants::of(params, &phi_field);
    let problem = Problem {
        params,
        clock,
        comparison,
    };
    let variable_tag = match clock {
        Clock::Original => VariableTag::UOriginal,
        Clock::Rescaled => VariableTag::WRescaled,
    };
    let h = spec.spacing();
    let inv_h2 = (h * h).recip();
    let len = spec.len();
    let tol = config.bound_tolerance;

    let mut trajectory = Trajectory {
        variable_tag,
        params: *params,
        times: Vec::with_capacity(config.snapshot_times.len() + 1),
        fields: Vec::new(),
        deviations: Vec::new(),
        diagnostics: Vec::new(),
        comparison,
        statistics: StepStatistics {
            steps: 0,
            min_dt: T::infinity(),
            max_dt: T::zero(),
            worst_lower_margin: T::infinity(),
            worst_upper_margin: T::infinity(),
            linear_iterations: 0,
        },
    };

    let record = |trajectory: &mut Trajectory<T>, frame: &Frame<T>, d: &[T], margins: (T, T)| {
        let dev = GridField {
            spec,
            values: d.to_vec(),
        };
        let big_u = renormalized(params, clock, frame, &dev);
        let diag = SnapshotDiagnostics {
            time: frame.time,
            original_time: frame.t,
            min: T::zero(),
            max: T::zero(),
            norm_l1: lq_norm(&big_u, T::one()),
            norm_l2: lq_norm(&big_u, T::lit(2.0)),
            norm_linf: lq_norm(&big_u, T::infinity()),
            lower_margin: margins.0,
            upper_margin: margins.1,
            boundary_abs: big_u.boundary_max_abs(),
        };
        let field = match clock {
            Clock::Original => dev.map(|v| frame.zeta + v),
            Clock::Rescaled => dev.clone(),
        };
        let diag = SnapshotDiagnostics {
            min: field.min(),
            max: field.max(),
            ..diag
        };
        trajectory.times.push(frame.time);
        trajectory.fields.push(field);
        if clock == Clock::Original {
            trajectory.deviations.push(dev);
        }
        trajectory.diagnostics.push(diag);
    };

    let mut frame_now = problem.frame(T::zero())?;
    let mut d_now = phi_field.values.clone();
    let margins = check_state(&frame_now, &d_now, tol)?;
    record(&mut trajectory, &frame_now, &d_now, margins);

    let mut s_now: Vec<T> = d_now.iter().map(|&v| problem.source(&frame_now, v)).collect();
    let mut history: Option<(Vec<T>, Vec<T>, T)> = None; // (d, S, dt) of the previous level
    let mut faces = Faces { coeff: Vec::new() };
    let mut rho = vec![T::zero(); len];
    let mut extrap = vec![T::zero(); len];
    let mut rhs = vec![T::zero(); len];
    let growth_cap = match config.time_stepper {
        TimeStepper::Fixed => T::lit(2.0),
        TimeStepper::Adaptive { .. } => T::lit(1.25),
    };

    for &target in &config.snapshot_times {
        while frame_now.time < target {
            if trajectory.statistics.steps >= config.max_steps {
                return Err(Error::StepFailure {
                    time: frame_now.time.as_f64(),
                    reason: format!("step budget of {} exhausted", config.max_steps),
                    min: f64::NAN,
                    max: f64::NAN,
                });
            }
            let prev_dt = history.as_ref().map(|h| h.2);
            let mut dt = match config.time_stepper {
                TimeStepper::Fixed => config.dt_initial,
                TimeStepper::Adaptive { max_relative_step } => {
                    let slope = d_now
                        .iter()
                        .map(|&v| problem.source_slope(&frame_now, v).abs())
                        .fold(T::zero(), T::max);
                    let mut bound = max_relative_step * frame_now.clock_scale;
                    if slope > T::zero() {
                        bound = bound.min(config.cfl_safety * T::lit(0.5) / slope);
                    }
                    if prev_dt.is_none() {
                        bound = bound.min(config.dt_initial);
                    }
                    bound
                }
            };
            if let Some(p) = prev_dt {
                dt = dt.min(growth_cap * p);
            }
            let gap = target - frame_now.time;
            let time_new = if gap <= dt * (T::one() + T::lit(1e-9)) {
                dt = gap;
                target
            } else {
                if gap < T::lit(2.0) * dt {
                    dt = T::lit(0.5) * gap;
                }
                frame_now.time + dt
            };
            let frame_new = problem.frame(time_new)?;

            let (c0, omega) = match &history {
                Some((_, _, p)) => {
                    let w = dt / *p;
                    ((T::one() + T::lit(2.0) * w) / (T::one() + w), w)
                }
                None => (T::one(), T::zero()),
            };
            match &history {
                Some((d_old, s_old, _)) => {
                    let one_w = T::one() + omega;
                    let w2 = omega * omega / one_w;
                    for i in 0..len {
                        extrap[i] = one_w * d_now[i] - omega * d_old[i];
                        rhs[i] = one_w * d_now[i] - w2 * d_old[i] + dt * (one_w * s_now[i] - omega * s_old[i]);
                    }
                }
                None => {
                    extrap.copy_from_slice(&d_now);
                    for i in 0..len {
                        rhs[i] = d_now[i] + dt * s_now[i];
                    }
                }
            }
            let mut admissible = true;
            for i in 0..len {
                rho[i] = T::one() + extrap[i] * frame_new.scale_inv;
                admissible &= rho[i] > T::zero();
            }
            if !admissible {
                for i in 0..len {
                    rho[i] = T::one() + d_now[i] * frame_new.scale_inv;
                }
            }
            face_coefficients(&spec, params.m, frame_new.mult, &rho, &mut faces);
            let iterations = implicit_solve(&spec, &faces, c0, dt * inv_h2, &mut rhs, &extrap)?;
            let margins = check_state(&frame_new, &rhs, tol)?;

            let stats = &mut trajectory.statistics;
            stats.steps += 1;
            stats.linear_iterations += iterations;
            stats.min_dt = stats.min_dt.min(dt);
            stats.max_dt = stats.max_dt.max(dt);
            stats.worst_lower_margin = stats.worst_lower_margin.min(margins.0);
            stats.worst_upper_margin = stats.worst_upper_margin.min(margins.1);

            let s_new: Vec<T> = rhs.iter().map(|&v| problem.source(&frame_new, v)).collect();
            let d_new = rhs.clone();
            let old_d = std::mem::replace(&mut d_now, d_new);
            let old_s = std::mem::replace(&mut s_now, s_new);
            history = Some((old_d, old_s, dt));
            frame_now = frame_new;

            if frame_now.time == target {
                record(&mut trajectory, &frame_now, &d_now, margins);
                debug!(
                    "{} snapshot at {:e}: {} steps, dt {:e}",
                    variable_tag.name(),
                    target.as_f64(),
                    trajectory.statistics.steps,
                    dt.as_f64()
                );
            }
        }
    }
    let worst_boundary = trajectory
        .diagnostics
        .iter()
        .map(|d| d.boundary_abs / d.norm_linf.max(T::min_positive_value()))
        .fold(T::zero(), T::max);
    if worst_boundary > T::lit(1e-3) {
        warn!(
            "{} run: deviation reaches {:e} of its maximum at the truncation boundary",
            variable_tag.name(),
            worst_boundary.as_f64()
        );
    }
    Ok(trajectory)
}

/// Solves `u_t = Laplace(u^m) + u^alpha`, `u(0) = lambda + phi`, with snapshot
/// times in original time `t`.
pub fn solve_original<T: Real>(
    params: &ProblemParams<T>,
    phi: &InitialPerturbation<T>,
    config: &SolverConfig<T>,
) -> Result<Trajectory<T>> {
    integrate(params, phi, config, Clock::Original)
}

/// Solves the rescaled problem `w_tau = div(A grad w) + F`, `w(0) = phi`, with
/// snapshot times in `tau`. Not available when `m < alpha`.
pub fn solve_rescaled<T: Real>(
    params: &ProblemParams<T>,
    phi: &InitialPerturbation<T>,
    config: &SolverConfig<T>,
) -> Result<Trajectory<T>> {
    if params.regime() == Regime::FiniteHorizon {
        return Err(Error::UnsupportedRegime {
            op: "solve_rescaled",
            regime: Regime::FiniteHorizon.name(),
        });
    }
    integrate(params, phi, config, Clock::Rescaled)
}
