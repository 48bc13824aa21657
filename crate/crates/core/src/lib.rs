//! Large-time behaviour of `u_t = Laplace(u^m) + u^alpha` around the spatially
//! homogeneous solution: ODE profiles, heat-kernel moment expansions, a
//! deviation-form solver and the renormalized error diagnostics.
//!
//! The numerical core is generic over [`real::Real`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

// NaN inputs must fail range checks, so `!(x > 0)` is written on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod checks;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod moments;
pub mod multi_index;
pub mod oracle;
pub mod profiles;
pub mod rate;
pub mod real;
pub mod renorm;
pub mod solver;

pub use error::{Error, Result};
pub use multi_index::MultiIndex;
pub use profiles::Regime;
pub use rate::{FitWindow, Verdict};
pub use real::Real;
pub use solver::{TimeStepper, VariableTag};

pub type Params = profiles::ProblemParams<f64>;
pub type Grid = grid::GridSpec<f64>;
pub type Field = grid::GridField<f64>;
pub type Perturbation = solver::InitialPerturbation<f64>;
pub type Config = solver::SolverConfig<f64>;
pub type Traj = solver::Trajectory<f64>;
pub type Expansion = moments::ExpansionReport<f64>;
pub type Rates = rate::RateReport<f64>;
