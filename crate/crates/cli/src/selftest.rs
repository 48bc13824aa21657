//! `odetype selftest`: property suite, command-line invariants and the acceptance criteria.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use odetype::acceptance::Suite;
use odetype::checks::{property_suite, CheckOutcome, Fault};

use crate::config::ExperimentConfig;
use crate::run::run_into;

#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestOptions {
    pub seed: u64,
    pub fault: Fault,
    /// Skip the (minutes long) acceptance criteria.
    pub properties_only: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    /// Timing-free table, identical across repeated runs.
    pub table: String,
    pub failures: usize,
    pub known_deviations: usize,
}

/// Small configuration used for the round-trip and determinism checks.
pub const SMOKE_CONFIG: &str = r#"
seed = 7
output_dir = "odetype-selftest"

[params]
m = 2.0
alpha = 0.5
lambda = 1.0
dim = 1

[phi]
kind = "smooth_bump"
center = [0.5]
radius = 1.5
amplitude = 0.2

[solver]
half_width = 40.0
points = 400
dt_initial = 1e-3
snapshots = { start = 0.1, end = 10.0, per_decade = 8 }

[[analyses]]
kind = "thm11"
q = "inf"
r = 2.0

[[analyses]]
kind = "thm12"
q = 1
k = 0

[[analyses]]
kind = "ode_limit"
"#;

fn scratch_dir(tag: &str) -> PathBuf {
    std::env::temp_dir().join(format!("odetype-selftest-{}-{tag}", std::process::id()))
}

fn read_tree(root: &PathBuf) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.clone()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = fs::read_dir(&dir) else { continue };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if let Ok(bytes) = fs::read(&path) {
                let name = path.strip_prefix(root).unwrap_or(&path).display().to_string();
                out.push((name, bytes));
            }
        }
    }
    out.sort();
    out
}

fn config_roundtrip() -> CheckOutcome {
    let result = ExperimentConfig::parse(SMOKE_CONFIG)
        .and_then(|c| ExperimentConfig::parse(&c.to_toml()).map(|again| (c, again)));
    match result {
        Ok((a, b)) => CheckOutcome {
            name: "config parse/serialize round trip",
            passed: a == b,
            detail: String::new(),
        },
        Err(e) => CheckOutcome {
            name: "config parse/serialize round trip",
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn run_determinism() -> CheckOutcome {
    let name = "repeated runs byte-identical";
    let config = match ExperimentConfig::parse(SMOKE_CONFIG) {
        Ok(c) => c,
        Err(e) => {
            return CheckOutcome {
                name,
                passed: false,
                detail: e.to_string(),
            }
        }
    };
    let (a, b) = (scratch_dir("a"), scratch_dir("b"));
    let outcome = match (run_into(&config, &a), run_into(&config, &b)) {
        (Ok(_), Ok(_)) => {
            let (ta, tb) = (read_tree(&a), read_tree(&b));
            CheckOutcome {
                name,
                passed: !ta.is_empty() && ta == tb,
                detail: format!("{} files", ta.len()),
            }
        }
        (Err(e), _) | (_, Err(e)) => CheckOutcome {
            name,
            passed: false,
            detail: e.to_string(),
        },
    };
    let _ = fs::remove_dir_all(&a);
    let _ = fs::remove_dir_all(&b);
    outcome
}

/// Runs the suite, printing each line (with timings) as it completes.
pub fn selftest(options: SelftestOptions, mut print: impl FnMut(&str)) -> SelftestReport {
    let mut report = SelftestReport::default();
    let mut checks = property_suite(options.seed, options.fault);
    checks.push(config_roundtrip());
    checks.push(run_determinism());
    for c in &checks {
        let line = c.line();
        print(&line);
        let _ = writeln!(report.table, "{line}");
        if !c.passed {
            report.failures += 1;
        }
    }
    if options.properties_only {
        return report;
    }
    let mut suite = Suite::new(options.seed);
    for criterion in [
        Suite::criterion_1,
        Suite::criterion_2,
        Suite::criterion_3,
        Suite::criterion_4,
        Suite::criterion_5,
        Suite::criterion_6,
        Suite::criterion_7,
        Suite::criterion_8,
        Suite::criterion_9,
    ] {
        let outcome = criterion(&mut suite);
        print(&outcome.line_timed());
        let _ = writeln!(report.table, "{}", outcome.line());
        if outcome.unexpected_failure() {
            report.failures += 1;
        } else if !outcome.passed {
            report.known_deviations += 1;
        }
    }
    report
}
