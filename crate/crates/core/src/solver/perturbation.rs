//! Initial perturbations `phi` with `u(x, 0) = lambda + phi(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::profiles::ProblemParams;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialPerturbation<T> {
    /// `amplitude exp(-|x - center|^2 / (2 width^2))`; `width` is the standard deviation.
    Gaussian { center: Vec<T>, width: T, amplitude: T },
    /// `amplitude exp(1 - 1 / (1 - |x - center|^2 / radius^2))` inside the ball, 0 outside;
    /// the peak value is `amplitude`.
    SmoothBump { center: Vec<T>, radius: T, amplitude: T },
    /// Values given directly on the solver grid.
    Tabulated { field: GridField<T> },
}

impl<T: Real> InitialPerturbation<T> {
    /// The zero perturbation.
    pub fn zero(dim: usize) -> Self {
        InitialPerturbation::Gaussian {
            center: vec![T::zero(); dim],
            width: T::one(),
            amplitude: T::zero(),
        }
    }

    pub fn gaussian(center: Vec<T>, width: T, amplitude: T) -> Self {
        InitialPerturbation::Gaussian {
            center,
            width,
            amplitude,
        }
    }

    pub fn smooth_bump(center: Vec<T>, radius: T, amplitude: T) -> Self {
        InitialPerturbation::SmoothBump {
            center,
            radius,
            amplitude,
        }
    }

    /// Checks shape against `params.dim` and `inf phi > -lambda`.
    pub fn validate(&self, params: &ProblemParams<T>) -> Result<()> {
        let check_center = |center: &[T]| -> Result<()> {
            if center.len() != params.dim {
                return Err(Error::domain(
                    "phi.center",
                    format!("has {} coordinates for dimension {}", center.len(), params.dim),
                ));
            }
            if center.iter().any(|c| !c.is_finite()) {
                return Err(Error::domain("phi.center", "must be finite"));
            }
            Ok(())
        };
        let check_amplitude = |amplitude: T| -> Result<()> {
            if !(amplitude.is_finite() && amplitude > -params.lambda) {
                return Err(Error::domain(
                    "phi.amplitude",
                    format!("must exceed -lambda = {}, got {}", -params.lambda, amplitude),
                ));
            }
            Ok(())
        };
        match self {
            InitialPerturbation::Gaussian {
                center,
                width,
                amplitude,
            } => {
                check_center(center)?;
                if !(*width > T::zero() && width.is_finite()) {
                    return Err(Error::domain("phi.width", format!("must be > 0, got {width}")));
                }
                check_amplitude(*amplitude)
            }
            InitialPerturbation::SmoothBump {
                center,
                radius,
                amplitude,
            } => {
                check_center(center)?;
                if !(*radius > T::zero() && radius.is_finite()) {
                    return Err(Error::domain("phi.radius", format!("must be > 0, got {radius}")));
                }
                check_amplitude(*amplitude)
            }
            InitialPerturbation::Tabulated { field } => {
                if field.spec.dim != params.dim {
                    return Err(Error::domain(
                        "phi.field",
                        format!("grid dimension {} for problem dimension {}", field.spec.dim, params.dim),
                    ));
                }
                if field.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::domain("phi.field", "contains non-finite values"));
                }
                let low = field.min();
                if !(low > -params.lambda) {
                    return Err(Error::domain(
                        "phi.field",
                        format!("minimum {low} does not exceed -lambda = {}", -params.lambda),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Pointwise value; `None` for tabulated data.
    pub fn value_at(&self, x: &[T]) -> Option<T> {
        let dist2 = |center: &[T]| x.iter().zip(center).map(|(&a, &c)| (a - c) * (a - c)).sum::<T>();
        match self {
            InitialPerturbation::Gaussian {
                center,
                width,
                amplitude,
            } => Some(*amplitude * (-dist2(center) / (T::lit(2.0) * *width * *width)).exp()),
            InitialPerturbation::SmoothBump {
                center,
                radius,
                amplitude,
            } => {
                let s = dist2(center) / (*radius * *radius);
                if s >= T::one() {
                    Some(T::zero())
                } else {
                    Some(*amplitude * (T::one() - T::one() / (T::one() - s)).exp())
                }
            }
            InitialPerturbation::Tabulated { .. } => None,
        }
    }

    /// Samples `phi` at the nodes of `spec`.
    pub fn sample(&self, spec: GridSpec<T>) -> Result<GridField<T>> {
        match self {
            InitialPerturbation::Tabulated { field } => {
                if field.spec != spec {
                    return Err(Error::Shape(format!(
                        "tabulated perturbation on {:?} requested on {:?}",
                        field.spec, spec
                    )));
                }
                Ok(field.clone())
            }
            other => {
                let dim = match other {
                    InitialPerturbation::Gaussian { center, .. } | InitialPerturbation::SmoothBump { center, .. } => {
                        center.len()
                    }
                    InitialPerturbation::Tabulated { .. } => unreachable!(),
                };
                if dim != spec.dim {
                    return Err(Error::Shape(format!(
                        "perturbation centre of dimension {dim} on a grid of dimension {}",
                        spec.dim
                    )));
                }
                Ok(GridField::from_fn(spec, |x| other.value_at(x).unwrap_or_else(T::zero)))
            }
        }
    }

    /// `phi >= 0` everywhere.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            InitialPerturbation::Gaussian { amplitude, .. } | InitialPerturbation::SmoothBump { amplitude, .. } => {
                *amplitude >= T::zero()
            }
            InitialPerturbation::Tabulated { field } => field.min() >= T::zero(),
        }
    }
}
