//! `odetype expand` and `odetype profile`.

use std::fmt::Write as _;
use std::path::Path;

use odetype::moments::expand;
use odetype::profiles::{log_growth_rate, profile_table, tau_star};
use odetype::{Field, Grid, Params};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// Reads a `x[,y],value` field written by `run` back onto its grid.
pub fn parse_field_csv(text: &str) -> CliResult<Field> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("empty field file".into()))?;
    let dim = match header.trim() {
        "x,value" => 1,
        "x,y,value" => 2,
        other => {
            return Err(CliError::Config(format!(
                "unexpected header `{other}`, want x,value or x,y,value"
            )))
        }
    };
    let mut coords: Vec<Vec<f64>> = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("row {}: {e}", i + 2)))?;
        if cells.len() != dim + 1 {
            return Err(CliError::Config(format!("row {}: expected {} columns", i + 2, dim + 1)));
        }
        coords.push(cells[..dim].to_vec());
        values.push(cells[dim]);
    }
    let n = match dim {
        1 => values.len(),
        _ => (values.len() as f64).sqrt().round() as usize,
    };
    if n < 2 || n.pow(dim as u32) != values.len() {
        return Err(CliError::Config(format!(
            "{} rows do not form a square grid",
            values.len()
        )));
    }
    // Row-major with axis 0 slowest: the last axis varies along consecutive rows.
    let axis = dim - 1;
    let h = coords[1][axis] - coords[0][axis];
    let half_width = -coords[0][axis] + 0.5 * h;
    let grid = Grid::new(dim, half_width, n).map_err(CliError::from_config)?;
    let mut point = vec![0.0; dim];
    for (i, c) in coords.iter().enumerate() {
        grid.point(i, &mut point);
        if c.iter().zip(&point).any(|(a, b)| (a - b).abs() > 1e-9 * half_width) {
            return Err(CliError::Config(format!(
                "row {}: not on a uniform cell-centred grid",
                i + 2
            )));
        }
    }
    Field::new(grid, values).map_err(CliError::from_config)
}

/// Expansion record of a field file.
pub fn expand_file(path: &Path, k: f64, t: f64) -> CliResult<String> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let field = parse_field_csv(&text)?;
    let report = expand(&field, k, t).map_err(CliError::from_config)?;
    Ok(report.with_constants_from_coefficients().to_record())
}

/// Parameters from `m=..,alpha=..,lambda=..[,dim=..]` or from the `[params]` of a config file.
pub fn parse_params(spec: &str) -> CliResult<Params> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return Ok(ExperimentConfig::parse(&text)?.params);
    }
    let (mut m, mut alpha, mut lambda, mut dim) = (None, None, None, 1usize);
    for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("`{part}`: expected key=value")))?;
        let key = key.trim();
        let bad = |e: &dyn std::fmt::Display| CliError::Config(format!("{key}: {e}"));
        match key {
            "m" => m = Some(value.trim().parse::<f64>().map_err(|e| bad(&e))?),
            "alpha" => alpha = Some(value.trim().parse::<f64>().map_err(|e| bad(&e))?),
            "lambda" => lambda = Some(value.trim().parse::<f64>().map_err(|e| bad(&e))?),
            "dim" => dim = value.trim().parse().map_err(|e| bad(&e))?,
            other => return Err(CliError::Config(format!("unknown parameter `{other}`"))),
        }
    }
    let missing = |name: &str| CliError::Config(format!("{name}: missing"));
    Params::new(
        m.ok_or_else(|| missing("m"))?,
        alpha.ok_or_else(|| missing("alpha"))?,
        lambda.ok_or_else(|| missing("lambda"))?,
        dim,
    )
    .map_err(CliError::from_config)
}

/// Default table times: 4 per decade over `[1e-2, 1e4]`.
pub fn default_profile_times() -> Vec<f64> {
    (0..=24).map(|i| 10f64.powf(-2.0 + i as f64 / 4.0)).collect()
}

/// Regime summary, optionally followed by a `t,zeta,sigma,eta,h` table.
pub fn profile_report(params: &Params, times: Option<&[f64]>) -> CliResult<String> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# m = {}, alpha = {}, lambda = {}, regime {}",
        params.m,
        params.alpha,
        params.lambda,
        params.regime().name()
    );
    match tau_star(params) {
        Ok(s) => {
            let _ = writeln!(out, "# tau* = {s:e}");
        }
        Err(_) => {
            let _ = writeln!(out, "# tau* = inf");
        }
    }
    if let Ok(rate) = log_growth_rate(params) {
        let _ = writeln!(out, "# exponential rate = {rate:e}");
    }
    if let Some(times) = times {
        out.push_str("t,zeta,sigma,eta,h\n");
        for row in profile_table(params, times)? {
            let h = row.h.map(|v| format!("{:e}", v.value)).unwrap_or_default();
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{h}",
                row.t, row.zeta.value, row.sigma, row.eta.value
            );
        }
    }
    Ok(out)
}
