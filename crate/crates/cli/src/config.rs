//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 1
//! output_dir = "out/bump"
//!
//! [params]
//! m = 2.0
//! alpha = 0.5
//! lambda = 1.0
//! dim = 1
//!
//! [phi]
//! kind = "smooth_bump"        # or "gaussian" (width), or "tabulated" (field)
//! center = [0.0]
//! radius = 2.0
//! amplitude = 0.3
//!
//! [solver]
//! variable = "rescaled"       # or "original"; default depends on the regime
//! half_width = 250.0
//! points = 4000
//! stepper = "adaptive"        # or "fixed"
//! max_relative_step = 0.01
//! dt_initial = 1e-3
//! snapshots = { start = 0.1, end = 1000.0, per_decade = 16 }
//! # or: snapshot_times = [0.5, 1.0, 2.0]
//!
//! [[analyses]]
//! kind = "thm11"
//! q = "inf"
//! r = 2.0
//! ```

use std::fmt;
use std::path::PathBuf;

use odetype::solver::{InitialPerturbation, SolverConfig, TimeStepper, DEFAULT_BOUND_TOLERANCE, DEFAULT_MAX_STEPS};
use odetype::{Grid, Params, Regime};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult};

/// Lebesgue exponent; written as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl Exponent {
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExponentVisitor;

        impl Visitor<'_> for ExponentVisitor {
            type Value = Exponent;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Exponent, E> {
                Ok(Exponent(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Exponent, E> {
                match v {
                    "inf" | "infinity" => Ok(Exponent::INFINITY),
                    other => other.parse().map(Exponent).map_err(E::custom),
                }
            }
        }

        deserializer.deserialize_any(ExponentVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Analysis {
    /// First-order error against the heat flow of `phi`.
    Thm11 { q: Exponent, r: f64 },
    /// Higher-order error with estimated expansion constants.
    Thm12 { q: Exponent, k: u32 },
    /// `sup |u / zeta_lambda - 1|` along the run.
    OdeLimit,
    /// Limit of `U` as `t -> inf` when the rescaled clock is bounded.
    FiniteHorizon,
    /// Expansion constants of the run up to order `k`.
    ExpandOnly { k: u32 },
}

impl Analysis {
    pub fn name(&self) -> String {
        match self {
            Analysis::Thm11 { q, r } => format!("thm11_q{q}_r{r}"),
            Analysis::Thm12 { q, k } => format!("thm12_q{q}_K{k}"),
            Analysis::OdeLimit => "ode_limit".into(),
            Analysis::FiniteHorizon => "finite_horizon".into(),
            Analysis::ExpandOnly { k } => format!("expand_K{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    /// `u` in original time; snapshot times are `t`.
    Original,
    /// `w` in the rescaled clock; snapshot times are `tau`.
    Rescaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    Fixed,
    #[default]
    Adaptive,
}

/// Geometric snapshot times, `per_decade` per decade from `start` to `end` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricTimes {
    pub start: f64,
    pub end: f64,
    pub per_decade: usize,
}

impl GeometricTimes {
    pub fn times(&self) -> Vec<f64> {
        let (a, b) = (self.start.log10(), self.end.log10());
        let n = ((b - a) * self.per_decade as f64).round().max(1.0) as usize;
        (0..=n)
            .map(|i| {
                if i == n {
                    self.end
                } else {
                    10f64.powf(a + (b - a) * i as f64 / n as f64)
                }
            })
            .collect()
    }
}

fn default_max_relative_step() -> f64 {
    0.01
}

fn default_cfl_safety() -> f64 {
    0.5
}

fn default_bound_tolerance() -> f64 {
    DEFAULT_BOUND_TOLERANCE
}

fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<Variable>,
    pub half_width: f64,
    pub points: usize,
    #[serde(default)]
    pub stepper: Stepper,
    #[serde(default = "default_max_relative_step")]
    pub max_relative_step: f64,
    pub dt_initial: f64,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<GeometricTimes>,
    #[serde(default = "default_bound_tolerance")]
    pub bound_tolerance: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("odetype-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub params: Params,
    pub phi: InitialPerturbation<f64>,
    pub solver: SolverSection,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
}

fn invalid(field: &str, detail: impl Into<String>) -> CliError {
    CliError::Config(format!("{field}: {}", detail.into()))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// The solver variable, defaulting to the rescaled one when the regime allows it.
    pub fn variable(&self) -> Variable {
        self.solver.variable.unwrap_or(match self.params.regime() {
            Regime::FiniteHorizon => Variable::Original,
            _ => Variable::Rescaled,
        })
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        match (&self.solver.snapshot_times, &self.solver.snapshots) {
            (Some(times), _) => times.clone(),
            (None, Some(g)) => g.times(),
            (None, None) => Vec::new(),
        }
    }

    pub fn solver_config(&self) -> CliResult<SolverConfig<f64>> {
        let s = &self.solver;
        let grid = Grid::new(self.params.dim, s.half_width, s.points).map_err(CliError::from_config)?;
        let stepper = match s.stepper {
            Stepper::Fixed => TimeStepper::Fixed,
            Stepper::Adaptive => TimeStepper::Adaptive {
                max_relative_step: s.max_relative_step,
            },
        };
        let config = SolverConfig {
            grid,
            time_stepper: stepper,
            dt_initial: s.dt_initial,
            cfl_safety: s.cfl_safety,
            boundary: odetype::solver::BoundaryCondition::FarFieldOde,
            snapshot_times: self.snapshot_times(),
            bound_tolerance: s.bound_tolerance,
            max_steps: s.max_steps,
        };
        config.validate().map_err(CliError::from_config)?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.params.validate().map_err(CliError::from_config)?;
        self.phi.validate(&self.params).map_err(CliError::from_config)?;
        match (&self.solver.snapshot_times, &self.solver.snapshots) {
            (Some(_), Some(_)) => return Err(invalid("solver", "give either snapshot_times or snapshots, not both")),
            (None, None) => return Err(invalid("solver", "snapshot_times or snapshots is required")),
            (None, Some(g)) if !(g.start > 0.0 && g.end > g.start && g.per_decade > 0) => {
                return Err(invalid("solver.snapshots", "need 0 < start < end and per_decade >= 1"));
            }
            _ => {}
        }
        self.solver_config()?;
        let regime = self.params.regime();
        if self.variable() == Variable::Rescaled && regime == Regime::FiniteHorizon {
            return Err(invalid("solver.variable", "the rescaled solver needs m >= alpha"));
        }
        for (i, analysis) in self.analyses.iter().enumerate() {
            let field = format!("analyses[{i}]");
            match analysis {
                Analysis::Thm11 { q, r } => {
                    if regime == Regime::FiniteHorizon {
                        return Err(invalid(&field, "thm11 needs m >= alpha"));
                    }
                    if !(*r > 1.0) {
                        return Err(invalid(&format!("{field}.r"), format!("must be > 1, got {r}")));
                    }
                    if !(q.0 >= *r) {
                        return Err(invalid(&format!("{field}.q"), format!("must be >= r, got {q}")));
                    }
                }
                Analysis::Thm12 { q, .. } => {
                    if regime == Regime::FiniteHorizon {
                        return Err(invalid(&field, "thm12 needs m >= alpha"));
                    }
                    if !(q.0 >= 1.0) {
                        return Err(invalid(&format!("{field}.q"), format!("must be >= 1, got {q}")));
                    }
                }
                Analysis::OdeLimit => {
                    if regime == Regime::FiniteHorizon {
                        return Err(invalid(&field, "ode_limit needs m >= alpha"));
                    }
                }
                Analysis::FiniteHorizon => {
                    if regime != Regime::FiniteHorizon {
                        return Err(invalid(&field, "finite_horizon needs m < alpha"));
                    }
                    if self.variable() != Variable::Original {
                        return Err(invalid(&field, "finite_horizon needs the original solver"));
                    }
                }
                Analysis::ExpandOnly { .. } => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"
output_dir = "out"

[params]
m = 1.0
alpha = 0.0
lambda = 1.0
dim = 1

[phi]
kind = "gaussian"
center = [0.0]
width = 1.0
amplitude = 0.5

[solver]
half_width = 40.0
points = 512
stepper = "fixed"
dt_initial = 1e-2
snapshot_times = [0.5, 1.0, 2.0]

[[analyses]]
kind = "thm11"
q = "inf"
r = 2.0

[[analyses]]
kind = "thm12"
q = 1
k = 0
"#;

    #[test]
    fn parses_and_roundtrips() {
        let config = ExperimentConfig::parse(LINEAR).unwrap();
        assert_eq!(
            config.analyses[0],
            Analysis::Thm11 {
                q: Exponent::INFINITY,
                r: 2.0
            }
        );
        assert_eq!(config.analyses[1], Analysis::Thm12 { q: Exponent(1.0), k: 0 });
        assert_eq!(config.variable(), Variable::Rescaled);
        let again = ExperimentConfig::parse(&config.to_toml()).unwrap();
        assert_eq!(again, config);
    }

    #[test]
    fn alpha_at_least_one_names_the_field() {
        let text = LINEAR.replace("alpha = 0.0", "alpha = 1.0");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
    }

    #[test]
    fn regime_mismatch_is_rejected() {
        let text = LINEAR
            .replace("m = 1.0", "m = 0.5")
            .replace("alpha = 0.0", "alpha = 0.75");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("analyses[0]"), "{err}");
    }

    #[test]
    fn r_must_exceed_one() {
        let text = LINEAR.replace("r = 2.0", "r = 1.0");
        assert!(ExperimentConfig::parse(&text)
            .unwrap_err()
            .to_string()
            .contains("analyses[0].r"));
    }

    #[test]
    fn geometric_snapshots_hit_the_end_points() {
        let g = GeometricTimes {
            start: 0.1,
            end: 1000.0,
            per_decade: 4,
        };
        let t = g.times();
        assert_eq!(t.len(), 17);
        assert_eq!(t[0], 0.1);
        assert_eq!(t[16], 1000.0);
    }
}
