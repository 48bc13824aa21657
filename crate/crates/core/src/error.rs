use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in `{field}`: {detail}")]
    Domain { field: &'static str, detail: String },

    /// A rescaled time at or beyond the finite horizon of the `m < alpha` regime.
    #[error("rescaled time {tau} is outside [0, {tau_star})")]
    OutOfRange { tau: f64, tau_star: f64 },

    /// The rescaled clock diverges, so the finite horizon does not exist.
    #[error("rescaled clock diverges for m = {m} >= alpha = {alpha}")]
    Divergent { m: f64, alpha: f64 },

    /// The operation is not defined in the parameter regime.
    #[error("operation `{op}` is not supported in the {regime} regime")]
    UnsupportedRegime { op: &'static str, regime: &'static str },

    /// `1 + lambda^-alpha eta^(alpha-1) w` (equivalently `u / zeta`) is not positive.
    #[error("positivity violated: u/zeta = {ratio} at time {time}")]
    Positivity { time: f64, ratio: f64 },

    /// A time step failed its admissibility checks.
    #[error("step failure at time {time}: {reason} (min {min}, max {max})")]
    StepFailure {
        time: f64,
        reason: String,
        min: f64,
        max: f64,
    },

    /// An iterative linear solve did not reach its residual target.
    #[error("linear solve did not converge: residual {residual} after {iterations} iterations")]
    LinearSolve { residual: f64, iterations: usize },

    /// Two grids or fields that must agree do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A requested time lies outside the sampled trajectory.
    #[error("time {time} outside trajectory range [{start}, {end}]")]
    TrajectoryRange { time: f64, start: f64, end: f64 },

    /// A fit window with too few or invalid points.
    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    /// A malformed text record.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(field: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            field,
            detail: detail.into(),
        }
    }
}
