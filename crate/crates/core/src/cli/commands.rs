//! The four pipelines behind the command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use super::config::ScenarioConfig;
use super::output::{fmt_num, CsvTable};
use crate::detsolve::TimeGrid;
use crate::error::{Error, Result};
use crate::simulate::{check_value_consistency, ConsistencyReport, SimConfig};
use crate::strategy::{eta_sweep, run_case_suite, snapshot, CaseCurves};

/// Command-line overrides shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// One line per checked property, prefixed PASS or FAIL.
    pub outcomes: Vec<String>,
    pub elapsed: Duration,
    /// First failure, already reflected in `outcomes`.
    pub failure: Option<Error>,
}

impl RunReport {
    fn new(start: Instant) -> Self {
        Self {
            files: Vec::new(),
            outcomes: Vec::new(),
            elapsed: start.elapsed(),
            failure: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, Error::exit_code)
    }
}

fn out_dir(config: &ScenarioConfig, ov: &Overrides) -> Result<PathBuf> {
    let dir = ov.out.clone().unwrap_or_else(|| config.output.dir.clone());
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn solver_grid(config: &ScenarioConfig, ov: &Overrides) -> Result<TimeGrid> {
    TimeGrid::new(config.market.horizon, ov.grid.unwrap_or(config.solver.steps))
}

fn curve_table(case: &CaseCurves) -> CsvTable {
    let mut table = CsvTable::new(&["t", "Y", "Y0", "Ytilde", "c_star", "V_at_1", "L"]);
    let c = &case.curves;
    for k in 0..c.grid.len() {
        table.numeric_row(&[
            c.grid.node(k),
            c.y[k],
            c.y0[k],
            c.ytilde[k],
            case.c_star[k],
            case.value[k],
            case.loss[k],
        ]);
    }
    table
}

/// `strategy.csv` (curves) and `exposure.csv` (exposure and distortion at
/// `t = 0`).
pub fn cmd_solve(config: &ScenarioConfig, ov: &Overrides) -> Result<RunReport> {
    let start = Instant::now();
    let problem = config.problem()?;
    let grid = solver_grid(config, ov)?;
    let dir = out_dir(config, ov)?;
    let case = CaseCurves::from_problem("base", &problem, &grid)?;
    let snap = snapshot(&problem, &case.curves, 0)?;

    let mut report = RunReport::new(start);
    report.files.push(curve_table(&case).write(&dir, "strategy.csv")?);
    let mut exposure = CsvTable::new(&["i", "p_star_i", "phi_star_i"]);
    for i in 0..snap.p_star.len() {
        exposure.row(&[i.to_string(), fmt_num(snap.p_star[i]), fmt_num(snap.phi_star[i])]);
    }
    report.files.push(exposure.write(&dir, "exposure.csv")?);
    report.outcomes.push(format!(
        "Y(0) = {}, c*(0) = {}, V(0,1) = {}, L(0) = {}",
        fmt_num(case.curves.y[0]),
        fmt_num(snap.c_star),
        fmt_num(snap.value),
        fmt_num(snap.loss)
    ));
    report.elapsed = start.elapsed();
    Ok(report)
}

fn write_checks(dir: &Path, name: &str, lines: &[String]) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

fn safe_name(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// One CSV per constraint case plus `orderings.txt`.
pub fn cmd_compare(config: &ScenarioConfig, ov: &Overrides) -> Result<RunReport> {
    let start = Instant::now();
    let base = config.problem()?;
    let grid = solver_grid(config, ov)?;
    let dir = out_dir(config, ov)?;
    let cases = config.compare_cases()?;
    let suite = run_case_suite(&base, &cases, &grid)?;

    let mut report = RunReport::new(start);
    for case in &suite.cases {
        let name = format!("case_{}.csv", safe_name(&case.name));
        report.files.push(curve_table(case).write(&dir, &name)?);
    }
    report.outcomes = suite.orderings.iter().map(|c| c.summary()).collect();
    let mut lines = vec![format!("gamma = {}", fmt_num(suite.gamma))];
    if suite.orderings.is_empty() {
        lines.push("no orderings apply to the configured cases".into());
    }
    lines.extend(report.outcomes.iter().cloned());
    report.files.push(write_checks(&dir, "orderings.txt", &lines)?);
    report.failure = suite.ensure().err();
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Ambiguity-weight sweep with `monotonicity.txt`. `index` is zero-based.
pub fn cmd_sweep(
    config: &ScenarioConfig,
    ov: &Overrides,
    index: Option<usize>,
    values: Option<Vec<f64>>,
) -> Result<RunReport> {
    let start = Instant::now();
    let base = config.problem()?;
    let grid = solver_grid(config, ov)?;
    let index = index.or(config.sweep.index).unwrap_or(0);
    let values = values
        .or_else(|| config.sweep.values.clone())
        .unwrap_or_else(|| (0..=5).map(f64::from).collect());
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    let sweep = eta_sweep(&base, index, &values, &grid)?;
    let dir = out_dir(config, ov)?;

    let mut report = RunReport::new(start);
    for (case, v) in sweep.cases.iter().zip(&sweep.values) {
        let mut table = CsvTable::new(&["t", "Y", "c_star", "V_at_1", "L"]);
        let c = &case.curves;
        for k in 0..c.grid.len() {
            table.numeric_row(&[c.grid.node(k), c.y[k], case.c_star[k], case.value[k], case.loss[k]]);
        }
        let name = format!("sweep_eta{index}_{}.csv", safe_name(&fmt_num(*v)));
        report.files.push(table.write(&dir, &name)?);
    }
    report.outcomes = sweep.checks.iter().map(|c| c.summary()).collect();
    let mut lines = vec![format!("gamma = {}, index = {index}", fmt_num(sweep.gamma))];
    if sweep.checks.is_empty() {
        lines.push("single value: nothing to compare".into());
    }
    lines.extend(report.outcomes.iter().cloned());
    report.files.push(write_checks(&dir, "monotonicity.txt", &lines)?);
    report.failure = sweep.ensure().err();
    report.elapsed = start.elapsed();
    Ok(report)
}

/// `mc_report.csv` with one row per configured case.
pub fn cmd_simulate(config: &ScenarioConfig, ov: &Overrides) -> Result<RunReport> {
    let start = Instant::now();
    let s = &config.simulate;
    let grid = TimeGrid::new(config.market.horizon, ov.grid.unwrap_or(s.steps))?;
    let sim = SimConfig {
        n_paths: s.paths,
        grid,
        seed: ov.seed.unwrap_or(s.seed),
        antithetic: s.antithetic,
        control_variate: s.control_variate,
    };
    let cases = config.simulate_cases()?;
    let dir = out_dir(config, ov)?;
    // cases run one after another; each check is parallel over paths
    let results: Vec<(String, ConsistencyReport)> = cases
        .into_iter()
        .map(|(name, problem)| Ok((name, check_value_consistency(&problem, &sim)?)))
        .collect::<Result<_>>()?;

    let mut report = RunReport::new(start);
    let mut table = CsvTable::new(&[
        "case",
        "paths",
        "steps",
        "seed",
        "estimate",
        "stderr",
        "analytic_V",
        "z_score",
        "passed",
        "cv_estimate",
        "cv_stderr",
        "cv_z_score",
    ]);
    for (name, r) in &results {
        let (cv_est, cv_se, cv_z) = match r.controlled {
            Some(e) => (
                fmt_num(e.mean),
                fmt_num(e.stderr),
                fmt_num(r.controlled_z().unwrap_or(f64::NAN)),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        table.row(&[
            name.clone(),
            r.paths.to_string(),
            grid.steps().to_string(),
            sim.seed.to_string(),
            fmt_num(r.estimate),
            fmt_num(r.stderr),
            fmt_num(r.analytic),
            fmt_num(r.z),
            r.passed.to_string(),
            cv_est,
            cv_se,
            cv_z,
        ]);
        report.outcomes.push(format!(
            "{} {name}: estimate {} +/- {} vs analytic {} (z = {:.2})",
            if r.passed { "PASS" } else { "FAIL" },
            fmt_num(r.estimate),
            fmt_num(r.stderr),
            fmt_num(r.analytic),
            r.z
        ));
        if report.failure.is_none() {
            report.failure = r.ensure().err();
        }
    }
    report.files.push(table.write(&dir, "mc_report.csv")?);
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Parses `v1,v2,...`.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad sweep value {s:?}: {e}")))
        })
        .collect()
}
