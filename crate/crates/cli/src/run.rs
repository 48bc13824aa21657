//! `odetype run`: solve, renormalize, analyse and write the artifacts.
//!
//! Output layout under the output directory:
//!
//! ```text
//! manifest.json                 run summary, file list and verdicts
//! config.toml                   normalized echo of the configuration
//! diagnostics.csv               per-snapshot norms and bound margins
//! snapshots/snapshot_NNNN.csv   x[,y],value of U (original runs) or w (rescaled runs)
//! rates/<analysis>.csv          t,sigma,raw_error,compensated_error
//! rates/<analysis>.dat          ln sigma, ln compensated error (plot data)
//! rates/summary.csv             one row per rate report
//! <analysis>.csv / .txt         series and records of the other analyses
//! report.txt                    human-readable summary
//! ```
//!
//! Nothing time- or host-dependent is written, so equal inputs give
//! byte-identical outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;

use odetype::kernel::lq_norm;
use odetype::rate::{is_decreasing, MONOTONE_SLACK};
use odetype::renorm::{
    estimate_m_detailed, finite_horizon_check, ode_convergence_error_at, renormalized_snapshot, thm11_rate_report,
    thm12_rate_report, ODE_LIMIT_TOLERANCE,
};
use odetype::solver::{solve_original, solve_rescaled, ComparisonConstants, StepStatistics};
use odetype::{Field, Rates, Traj, Verdict};
use serde::Serialize;

use crate::config::{Analysis, ExperimentConfig, Variable};
use crate::error::{CliError, CliResult};

/// Environment variable overriding `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "ODETYPE_OUTPUT_DIR";

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub time: f64,
    pub original_time: f64,
    pub file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisEntry {
    pub name: String,
    pub verdict: String,
    pub summary: String,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub regime: &'static str,
    pub variable: &'static str,
    pub params: odetype::Params,
    pub comparison: ComparisonConstants<f64>,
    pub statistics: StepStatistics<f64>,
    pub snapshots: Vec<SnapshotEntry>,
    pub analyses: Vec<AnalysisEntry>,
}

/// Where a run writes: `ODETYPE_OUTPUT_DIR` if set, else the configured directory.
pub fn output_dir(config: &ExperimentConfig) -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| config.output_dir.clone())
}

struct Writer {
    root: PathBuf,
}

impl Writer {
    fn new(root: &Path) -> CliResult<Self> {
        for dir in [root.to_path_buf(), root.join("snapshots"), root.join("rates")] {
            fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        }
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    fn write(&self, relative: &str, contents: &str) -> CliResult<String> {
        let path = self.root.join(relative);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(relative.to_string())
    }
}

/// `x[,y],value` rows.
pub fn field_csv(field: &Field) -> String {
    let spec = field.spec;
    let mut out = String::from(if spec.dim == 1 { "x,value\n" } else { "x,y,value\n" });
    let mut point = vec![0.0; spec.dim];
    for (i, v) in field.values.iter().enumerate() {
        spec.point(i, &mut point);
        for x in &point {
            let _ = write!(out, "{x:e},");
        }
        let _ = writeln!(out, "{v:e}");
    }
    out
}

fn diagnostics_csv(traj: &Traj) -> String {
    let mut out =
        String::from("time,original_time,min,max,norm_l1,norm_l2,norm_linf,lower_margin,upper_margin,boundary_abs\n");
    for d in &traj.diagnostics {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            d.time,
            d.original_time,
            d.min,
            d.max,
            d.norm_l1,
            d.norm_l2,
            d.norm_linf,
            d.lower_margin,
            d.upper_margin,
            d.boundary_abs
        );
    }
    out
}

fn rate_entry(
    writer: &Writer,
    name: &str,
    report: &Rates,
    summary: &mut String,
    text: &mut String,
) -> CliResult<AnalysisEntry> {
    let files = vec![
        writer.write(&format!("rates/{name}.csv"), &report.series_csv())?,
        writer.write(&format!("rates/{name}.dat"), &report.plot_data())?,
    ];
    let _ = writeln!(summary, "{}", report.csv_row());
    text.push_str(&report.text_block());
    Ok(AnalysisEntry {
        name: name.to_string(),
        verdict: report.verdict.name().to_string(),
        summary: if report.note.is_empty() {
            format!(
                "fitted slope {:e}, predicted {:e}, decreasing {}",
                report.fitted_slope, report.predicted_exponent, report.decreasing
            )
        } else {
            report.note.clone()
        },
        files,
    })
}

fn run_analysis(
    writer: &Writer,
    traj: &Traj,
    analysis: &Analysis,
    summary: &mut String,
    text: &mut String,
) -> CliResult<AnalysisEntry> {
    let name = analysis.name();
    let p = &traj.params;
    let label = format!("m={},alpha={},lambda={}", p.m, p.alpha, p.lambda);
    match analysis {
        Analysis::Thm11 { q, r } => {
            let report = thm11_rate_report(&label, traj, q.0, *r)?;
            rate_entry(writer, &name, &report, summary, text)
        }
        Analysis::Thm12 { q, k } => {
            let estimate = estimate_m_detailed(&traj.params, traj, *k)?;
            let report = thm12_rate_report(&label, traj, &estimate, q.0, *k)?;
            let mut entry = rate_entry(writer, &name, &report, summary, text)?;
            entry
                .files
                .push(writer.write(&format!("{name}_constants.txt"), &estimate.report.to_record())?);
            Ok(entry)
        }
        Analysis::OdeLimit => {
            let mut csv = String::from("t,ode_error\n");
            let mut values = Vec::new();
            for i in 1..traj.len() {
                let e = ode_convergence_error_at(traj, i);
                let _ = writeln!(csv, "{:e},{e:e}", traj.original_time(i));
                values.push(e);
            }
            let last = values.last().copied().unwrap_or(0.0);
            let decreasing = is_decreasing(&values, MONOTONE_SLACK);
            let verdict = if decreasing && last < ODE_LIMIT_TOLERANCE {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            let _ = writeln!(text, "[{name}]\n  final error : {last:e}\n  decreasing  : {decreasing}");
            Ok(AnalysisEntry {
                name: name.clone(),
                verdict: verdict.name().to_string(),
                summary: format!("final error {last:e}, decreasing {decreasing}"),
                files: vec![writer.write(&format!("{name}.csv"), &csv)?],
            })
        }
        Analysis::FiniteHorizon => {
            let report = finite_horizon_check(&traj.params, traj)?;
            let mut csv = String::from("t_from,t_to,sup_distance\n");
            for (a, b, d) in &report.cauchy_distances {
                let _ = writeln!(csv, "{a:e},{b:e},{d:e}");
            }
            let gap = (report.tau_star_measured - report.tau_star).abs();
            let verdict = if report.cauchy_decreasing {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            let _ = writeln!(
                text,
                "[{name}]\n  tau*              : {:e}\n  sigma(t_final)    : {:e}\n  final distance    : {:e}\n  cauchy decreasing : {}",
                report.tau_star,
                report.tau_star_measured,
                report.final_distance(),
                report.cauchy_decreasing
            );
            Ok(AnalysisEntry {
                name: name.clone(),
                verdict: verdict.name().to_string(),
                summary: format!(
                    "|sigma(t_final) - tau*| {gap:e}, final distance {:e}",
                    report.final_distance()
                ),
                files: vec![
                    writer.write(&format!("{name}.csv"), &csv)?,
                    writer.write(&format!("{name}_limit.csv"), &field_csv(&report.limit_profile))?,
                ],
            })
        }
        Analysis::ExpandOnly { k } => {
            let estimate = estimate_m_detailed(&traj.params, traj, *k)?;
            let mut history = String::from("tau");
            if let Some((_, row)) = estimate.history.first() {
                for (nu, _) in row {
                    let _ = write!(history, ",M_{nu}");
                }
            }
            history.push('\n');
            for (tau, row) in &estimate.history {
                let _ = write!(history, "{tau:e}");
                for (_, m) in row {
                    let _ = write!(history, ",{m:e}");
                }
                history.push('\n');
            }
            let verdict = if estimate.stabilized {
                Verdict::Pass
            } else {
                Verdict::Inconclusive
            };
            let _ = writeln!(text, "[{name}]\n  stabilized : {}", estimate.stabilized);
            Ok(AnalysisEntry {
                name: name.clone(),
                verdict: verdict.name().to_string(),
                summary: format!("stabilized {}", estimate.stabilized),
                files: vec![
                    writer.write(&format!("{name}.txt"), &estimate.report.to_record())?,
                    writer.write(&format!("{name}_history.csv"), &history)?,
                ],
            })
        }
    }
}

/// Runs an experiment and writes its artifacts to `root`.
pub fn run_into(config: &ExperimentConfig, root: &Path) -> CliResult<Manifest> {
    config.validate()?;
    let solver = config.solver_config()?;
    let variable = config.variable();
    info!(
        "solving {} with {} snapshots",
        config.params.regime().name(),
        solver.snapshot_times.len()
    );
    let traj = match variable {
        Variable::Original => solve_original(&config.params, &config.phi, &solver)?,
        Variable::Rescaled => solve_rescaled(&config.params, &config.phi, &solver)?,
    };
    if let Some(bad) = traj.fields.iter().flat_map(|f| &f.values).find(|v| !v.is_finite()) {
        return Err(CliError::Numerical(odetype::Error::StepFailure {
            time: traj.times.last().copied().unwrap_or(0.0),
            reason: format!("non-finite value {bad}"),
            min: f64::NAN,
            max: f64::NAN,
        }));
    }

    let writer = Writer::new(root)?;
    writer.write("config.toml", &config.to_toml())?;
    writer.write("diagnostics.csv", &diagnostics_csv(&traj))?;
    let mut snapshots = Vec::new();
    for i in 0..traj.len() {
        let file = writer.write(
            &format!("snapshots/snapshot_{i:04}.csv"),
            &field_csv(&renormalized_snapshot(&traj, i)),
        )?;
        snapshots.push(SnapshotEntry {
            index: i,
            time: traj.times[i],
            original_time: traj.original_time(i),
            file,
        });
    }

    let mut summary = format!("{}\n", Rates::CSV_HEADER);
    let mut text = String::new();
    let _ = writeln!(
        text,
        "odetype {}\nregime {}, variable {}, m = {}, alpha = {}, lambda = {}, dim = {}",
        env!("CARGO_PKG_VERSION"),
        config.params.regime().name(),
        traj.variable_tag.name(),
        config.params.m,
        config.params.alpha,
        config.params.lambda,
        config.params.dim
    );
    let s = &traj.statistics;
    let _ = writeln!(
        text,
        "{} steps, dt in [{:e}, {:e}], worst bound margins {:e} (lower) {:e} (upper), final sup|U| {:e}\n",
        s.steps,
        s.min_dt,
        s.max_dt,
        s.worst_lower_margin,
        s.worst_upper_margin,
        lq_norm(&renormalized_snapshot(&traj, traj.len() - 1), f64::INFINITY)
    );
    let mut analyses = Vec::new();
    for analysis in &config.analyses {
        analyses.push(run_analysis(&writer, &traj, analysis, &mut summary, &mut text)?);
    }
    writer.write("rates/summary.csv", &summary)?;
    writer.write("report.txt", &text)?;

    let manifest = Manifest {
        tool: "odetype",
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        regime: config.params.regime().name(),
        variable: traj.variable_tag.name(),
        params: config.params,
        comparison: traj.comparison,
        statistics: traj.statistics,
        snapshots,
        analyses,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    writer.write("manifest.json", &(json + "\n"))?;
    Ok(manifest)
}

/// Runs with the output directory resolved from the environment and the config.
pub fn run(config: &ExperimentConfig) -> CliResult<(PathBuf, Manifest)> {
    let root = output_dir(config);
    let manifest = run_into(config, &root)?;
    Ok((root, manifest))
}
