//! Monte Carlo experiments: repeat a scenario, run the selected tests on each
//! draw and tabulate rejection rates.
//!
//! Replicate `r` of every grid point draws its data from
//! `RngStream::new(seed, r)`, so neighbouring beta values share random
//! numbers and results do not depend on the thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{float_literal, quoted, FlatConfig};
use crate::data::PairedDataset;
use crate::error::{CgcError, Result};
use crate::inference::{
    added_value_pair, asn_test, bootstrap_test, cgc_difference, projection_test, Method,
};
use crate::rng::RngStream;
use crate::simgen::{gen_scenario, ScenarioConfig};

pub const DEFAULT_REPLICATIONS: usize = 3000;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_BOOTSTRAP_B: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Compare `X` against `Y`.
    Compare,
    /// Compare `W = [X | Y]` against `X`.
    AddedValue,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Compare => "compare",
            Mode::AddedValue => "added_value",
        }
    }
}

impl FromStr for Mode {
    type Err = CgcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "compare" => Ok(Mode::Compare),
            "added_value" => Ok(Mode::AddedValue),
            _ => Err(CgcError::invalid(format!(
                "unknown mode `{s}` (valid: compare, added_value)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Data-generating scenario; its `beta` is replaced by each grid value.
    pub scenario: ScenarioConfig,
    pub beta_grid: Vec<f64>,
    pub replications: usize,
    pub alpha: f64,
    pub methods: Vec<Method>,
    pub bootstrap_b: usize,
    pub mode: Mode,
    pub seed: u64,
    /// Measure time spent in each test. Off by default so reports stay
    /// byte-identical across runs.
    pub record_timing: bool,
}

impl ExperimentPlan {
    /// Plan with the default replication count, level and bootstrap size.
    pub fn new(scenario: ScenarioConfig, beta_grid: Vec<f64>, methods: Vec<Method>) -> Self {
        let seed = scenario.seed;
        Self {
            scenario,
            beta_grid,
            replications: DEFAULT_REPLICATIONS,
            alpha: DEFAULT_ALPHA,
            methods,
            bootstrap_b: DEFAULT_BOOTSTRAP_B,
            mode: Mode::Compare,
            seed,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.replications == 0 {
            return Err(CgcError::invalid("replications must be >= 1"));
        }
        if self.beta_grid.is_empty() {
            return Err(CgcError::invalid("beta grid is empty"));
        }
        if let Some(b) = self.beta_grid.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(CgcError::invalid(format!("beta must lie in [0, 1], got {b}")));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CgcError::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.methods.is_empty() {
            return Err(CgcError::invalid("no test methods selected"));
        }
        if self.methods.contains(&Method::Bootstrap) && self.bootstrap_b == 0 {
            return Err(CgcError::invalid("bootstrap_b must be >= 1"));
        }
        Ok(())
    }

    /// The fully resolved plan as a flat config file.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut scenario = self.scenario.clone();
        scenario.seed = self.seed;
        scenario.write_keys(&mut s, false);
        let grid: Vec<String> = self.beta_grid.iter().map(|&b| float_literal(b)).collect();
        let methods: Vec<String> = self.methods.iter().map(|m| quoted(m.as_str())).collect();
        let _ = writeln!(s, "beta_grid = [{}]", grid.join(", "));
        let _ = writeln!(s, "replications = {}", self.replications);
        let _ = writeln!(s, "alpha = {}", float_literal(self.alpha));
        let _ = writeln!(s, "methods = [{}]", methods.join(", "));
        let _ = writeln!(s, "bootstrap_b = {}", self.bootstrap_b);
        let _ = writeln!(s, "mode = {}", quoted(self.mode.as_str()));
        let _ = writeln!(s, "record_timing = {}", self.record_timing);
        s
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = FlatConfig::parse(text)?;
        let plan = Self::from_flat(&mut cfg)?;
        cfg.finish()?;
        Ok(plan)
    }

    pub fn from_config_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut cfg = FlatConfig::read(path.as_ref())?;
        let plan = Self::from_flat(&mut cfg)?;
        cfg.finish()?;
        Ok(plan)
    }

    fn from_flat(cfg: &mut FlatConfig) -> Result<Self> {
        let scenario = ScenarioConfig::from_flat(cfg)?;
        let beta_grid = match cfg.list("beta_grid")? {
            Some(items) if items.len() == 1 && items[0].contains(':') => parse_beta_grid(&items[0])?,
            Some(items) => items
                .iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| CgcError::invalid(format!("config: bad beta value `{t}`")))
                })
                .collect::<Result<_>>()?,
            None => vec![scenario.beta],
        };
        let methods = match cfg.list("methods")? {
            Some(items) => items.iter().map(|m| m.parse()).collect::<Result<_>>()?,
            None => vec![Method::AsN],
        };
        let mut plan = ExperimentPlan::new(scenario, beta_grid, methods);
        if let Some(r) = cfg.uint("replications")? {
            plan.replications = r as usize;
        }
        if let Some(a) = cfg.float("alpha")? {
            plan.alpha = a;
        }
        if let Some(b) = cfg.uint("bootstrap_b")? {
            plan.bootstrap_b = b as usize;
        }
        if let Some(m) = cfg.str("mode")? {
            plan.mode = m.parse()?;
        }
        if let Some(t) = cfg.bool("record_timing")? {
            plan.record_timing = t;
        }
        plan.validate()?;
        Ok(plan)
    }
}

/// Parse `start:stop:step` (inclusive of `stop` up to rounding) or a
/// comma-separated list of values.
pub fn parse_beta_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || CgcError::invalid(format!("bad beta grid `{s}` (expected start:stop:step or a list)"));
    if !s.contains(':') {
        return s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect();
    }
    let parts: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || stop < start {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // Rounding keeps grid values like 0.6 free of accumulated error.
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub beta: f64,
    pub method: Method,
    pub rejections: usize,
    pub replications: usize,
    /// `rejections / replications`.
    pub rejection_rate: f64,
    pub mean_dn: f64,
    pub mean_p_value: f64,
    /// `sqrt(rate * (1 - rate) / replications)`.
    pub mc_se: f64,
    /// Seconds spent inside the test, summed over replicates; zero unless
    /// timing is recorded.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub plan: ExperimentPlan,
    /// Ordered by beta, then by method in plan order.
    pub rows: Vec<ReportRow>,
}

impl ScenarioReport {
    pub fn row(&self, beta: f64, method: Method) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.beta == beta && r.method == method)
    }
}

/// Per-replicate outcome of one method.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    reject: bool,
    d_n: f64,
    p_value: f64,
    seconds: f64,
}

fn run_method(
    data: &PairedDataset,
    method: Method,
    plan: &ExperimentPlan,
    rng: &RngStream,
) -> Result<Outcome> {
    let start = plan.record_timing.then(Instant::now);
    let (reject, d_n, p_value) = match method {
        Method::AsN => {
            let r = asn_test(data, plan.alpha)?;
            (r.reject, r.d_n, r.p_value)
        }
        Method::Projection => {
            let r = projection_test(data, plan.alpha)?;
            (r.reject, r.d_n, r.p_value)
        }
        Method::Bootstrap => {
            let r = bootstrap_test(data, plan.bootstrap_b, rng)?;
            (r.p_value <= plan.alpha, r.d0, r.p_value)
        }
    };
    let seconds = start.map_or(0.0, |t| t.elapsed().as_secs_f64());
    Ok(Outcome {
        reject,
        d_n,
        p_value,
        seconds,
    })
}

fn run_replicate(plan: &ExperimentPlan, scenario: &ScenarioConfig, r: usize) -> Result<Vec<Outcome>> {
    let mut rng = RngStream::new(plan.seed, r as u64);
    let boot_rng = rng.split(0);
    let generated = gen_scenario(scenario, &mut rng)?;
    let data = match plan.mode {
        Mode::Compare => generated,
        Mode::AddedValue => added_value_pair(&generated),
    };
    // Surface degenerate data once, before any method runs.
    cgc_difference(&data)?;
    plan.methods
        .iter()
        .map(|&m| run_method(&data, m, plan, &boot_rng))
        .collect()
}

fn run_point(plan: &ExperimentPlan, beta: f64) -> Result<Vec<ReportRow>> {
    let mut scenario = plan.scenario.clone();
    scenario.beta = beta;
    scenario.seed = plan.seed;
    let results: Vec<Result<Vec<Outcome>>> = (0..plan.replications)
        .into_par_iter()
        .map(|r| run_replicate(plan, &scenario, r))
        .collect();

    let reps = plan.replications;
    let mut rejections = vec![0usize; plan.methods.len()];
    let mut sum_dn = vec![0.0; plan.methods.len()];
    let mut sum_p = vec![0.0; plan.methods.len()];
    let mut seconds = vec![0.0; plan.methods.len()];
    for (r, res) in results.into_iter().enumerate() {
        let outcomes = res.map_err(|e| CgcError::ReplicateFailed {
            beta,
            replicate: r,
            source: Box::new(e),
        })?;
        for (m, o) in outcomes.iter().enumerate() {
            rejections[m] += usize::from(o.reject);
            sum_dn[m] += o.d_n;
            sum_p[m] += o.p_value;
            seconds[m] += o.seconds;
        }
    }
    Ok(plan
        .methods
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let rate = rejections[m] as f64 / reps as f64;
            ReportRow {
                beta,
                method,
                rejections: rejections[m],
                replications: reps,
                rejection_rate: rate,
                mean_dn: sum_dn[m] / reps as f64,
                mean_p_value: sum_p[m] / reps as f64,
                mc_se: (rate * (1.0 - rate) / reps as f64).sqrt(),
                wall_time: seconds[m],
            }
        })
        .collect())
}

/// Run the plan at its first grid value.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ScenarioReport> {
    plan.validate()?;
    let beta = plan.beta_grid[0];
    Ok(ScenarioReport {
        plan: plan.clone(),
        rows: run_point(plan, beta)?,
    })
}

/// Run every grid value; rows come out in grid order.
pub fn run_beta_sweep(plan: &ExperimentPlan) -> Result<ScenarioReport> {
    plan.validate()?;
    let mut rows = Vec::new();
    for &beta in &plan.beta_grid {
        rows.extend(run_point(plan, beta)?);
    }
    Ok(ScenarioReport {
        plan: plan.clone(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = CgcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" | "markdown-table" => Ok(ReportFormat::Markdown),
            _ => Err(CgcError::invalid(format!(
                "unknown report format `{s}` (valid: csv, json, markdown)"
            ))),
        }
    }
}

const COLUMNS: [&str; 9] = [
    "beta",
    "method",
    "rejection_rate",
    "mean_dn",
    "mc_se",
    "time",
    "rejections",
    "replications",
    "mean_p_value",
];

fn plan_comment(plan: &ExperimentPlan, prefix: &str) -> String {
    plan.to_config_string()
        .lines()
        .map(|l| format!("{prefix}{l}\n"))
        .collect()
}

/// Render a report. CSV and markdown start with the resolved plan; JSON
/// embeds it.
pub fn render_report(report: &ScenarioReport, format: ReportFormat) -> Result<String> {
    if report.rows.is_empty() {
        return Err(CgcError::invalid("report has no rows"));
    }
    Ok(match format {
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => crate::json::to_string_pretty(report)?,
        ReportFormat::Markdown => render_markdown(report),
    })
}

fn render_csv(report: &ScenarioReport) -> String {
    let mut s = plan_comment(&report.plan, "# ");
    s.push_str(&COLUMNS.join(","));
    s.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.beta,
            r.method,
            r.rejection_rate,
            r.mean_dn,
            r.mc_se,
            r.wall_time,
            r.rejections,
            r.replications,
            r.mean_p_value
        );
    }
    s
}

/// One long table plus a wide summary in the familiar "rate (mean d_n)"
/// layout with methods as rows and beta values as columns.
fn render_markdown(report: &ScenarioReport) -> String {
    let mut s = String::from("<!--\n");
    s.push_str(&plan_comment(&report.plan, ""));
    s.push_str("-->\n\n");
    let _ = writeln!(s, "| {} |", COLUMNS[..6].join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(6));
    for r in &report.rows {
        let _ = writeln!(
            s,
            "| {} | {} | {:.4} | {:.4} | {:.4} | {:.3} |",
            r.beta, r.method, r.rejection_rate, r.mean_dn, r.mc_se, r.wall_time
        );
    }
    s.push('\n');
    let betas = &report.plan.beta_grid;
    let header: Vec<String> = betas.iter().map(|b| format!("beta = {b}")).collect();
    let _ = writeln!(s, "| method | {} |", header.join(" | "));
    let _ = writeln!(s, "|---|{}", "---|".repeat(betas.len()));
    for &method in &report.plan.methods {
        let cells: Vec<String> = betas
            .iter()
            .map(|&b| match report.row(b, method) {
                Some(r) => format!("{:.4} ({:.4})", r.rejection_rate, r.mean_dn),
                None => String::new(),
            })
            .collect();
        let _ = writeln!(s, "| {} | {} |", method, cells.join(" | "));
    }
    s
}

pub fn export_report(report: &ScenarioReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = render_report(report, format)?;
    let path = path.as_ref();
    fs::write(path, text).map_err(|source| CgcError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json_report(path: impl AsRef<Path>) -> Result<ScenarioReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CgcError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CgcError::invalid(format!("bad report json: {e}")))
}
