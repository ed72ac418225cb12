use std::fmt::Write as _;

use serde_json::json;

use cgc::data::{load_csv, load_paired_csv, ColumnSelector};
use cgc::gini::distance_correlation;
use cgc::harness::{export_report, parse_beta_grid, render_report, run_beta_sweep, ExperimentPlan, ReportFormat};
use cgc::inference::{
    added_value_pair, asn_test, bootstrap_test, cgc_difference, permutation_independence_test,
    projection_test, ADDED_VALUE_HYPOTHESIS, HYPOTHESIS, INDEPENDENCE_HYPOTHESIS,
};
use cgc::simgen::{Design, ScenarioConfig};
use cgc::{CgcError, Method, Result, RngStream};

use crate::{IndependenceArgs, PairArgs, SimulateArgs};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CgcError::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Result of one test in a form shared by text and JSON output.
struct Decision {
    variance: Option<f64>,
    z_score: Option<f64>,
    p_value: f64,
    reject: bool,
}

/// `compare` and `added-value`: both test a pair of groups, the latter after
/// replacing `(X, Y)` by `(W, X)` with `W = (X, Y)`.
pub fn compare(a: &PairArgs, added_value: bool) -> Result<String> {
    let method: Method = a.method.parse()?;
    check_alpha(a.alpha)?;
    let label = ColumnSelector::parse(&a.label);
    let mut data = load_paired_csv(
        &a.input,
        &label,
        &ColumnSelector::parse_list(&a.x),
        &ColumnSelector::parse_list(&a.y),
    )?;
    if a.swap {
        data = data.swapped();
    }
    let tested = if added_value {
        added_value_pair(&data)
    } else {
        data.clone()
    };
    let diff = cgc_difference(&tested)?;
    let decision = match method {
        Method::AsN | Method::Projection => {
            let r = if method == Method::AsN {
                asn_test(&tested, a.alpha)?
            } else {
                projection_test(&tested, a.alpha)?
            };
            Decision {
                variance: Some(r.variance_hat),
                z_score: r.z_score,
                p_value: r.p_value,
                reject: r.reject,
            }
        }
        Method::Bootstrap => {
            let r = bootstrap_test(&tested, a.b, &RngStream::new(a.seed, 0))?;
            Decision {
                variance: None,
                z_score: None,
                p_value: r.p_value,
                reject: r.p_value <= a.alpha,
            }
        }
    };
    let dcor = distance_correlation(data.x(), data.y())?;
    let (hypothesis, first, second) = if added_value {
        (ADDED_VALUE_HYPOTHESIS, "rho_g(W,Z)", "rho_g(X,Z)")
    } else {
        (HYPOTHESIS, "rho_g(X,Z)", "rho_g(Y,Z)")
    };

    if a.json {
        let value = json!({
            "command": if added_value { "added-value" } else { "compare" },
            "hypothesis": hypothesis,
            "n": data.n(),
            "num_classes": data.classes().num_classes(),
            "p": data.p(),
            "q": data.q(),
            "swap": a.swap,
            "method": method.as_str(),
            "alpha": a.alpha,
            "rho1_hat": diff.rho1_hat,
            "rho2_hat": diff.rho2_hat,
            "d_n": diff.d_n,
            "variance": decision.variance,
            "z_score": decision.z_score,
            "p_value": decision.p_value,
            "reject": decision.reject,
            "bootstrap_b": (method == Method::Bootstrap).then_some(a.b),
            "seed": a.seed,
            "distance_correlation": dcor,
        });
        return cgc::json::to_string_pretty(&value);
    }

    let mut s = String::new();
    let _ = writeln!(s, "{hypothesis}");
    let _ = writeln!(
        s,
        "data: n = {}, classes = {}, p = {}, q = {}{}",
        data.n(),
        data.classes().num_classes(),
        data.p(),
        data.q(),
        if a.swap { " (groups swapped)" } else { "" }
    );
    let _ = writeln!(s, "method: {method}");
    if method == Method::Bootstrap {
        let _ = writeln!(s, "bootstrap replicates: {} (seed {})", a.b, a.seed);
    }
    let _ = writeln!(s, "{first} = {}", diff.rho1_hat);
    let _ = writeln!(s, "{second} = {}", diff.rho2_hat);
    let _ = writeln!(s, "d_n = {}", diff.d_n);
    if let Some(v) = decision.variance {
        let _ = writeln!(s, "variance of d_n = {v}");
    }
    if let Some(z) = decision.z_score {
        let _ = writeln!(s, "z = {z}");
    }
    let _ = writeln!(s, "p-value = {}", decision.p_value);
    let verdict = if decision.reject { "reject H0" } else { "do not reject H0" };
    let _ = writeln!(s, "decision at alpha = {}: {verdict}", a.alpha);
    let _ = writeln!(s, "distance correlation between X and Y = {dcor}");
    Ok(s)
}

pub fn independence(a: &IndependenceArgs) -> Result<String> {
    let label = ColumnSelector::parse(&a.label);
    let cols = a.cols.as_deref().map(ColumnSelector::parse_list);
    let data = load_csv(&a.input, &label, cols.as_deref())?;
    let res = permutation_independence_test(&data, a.r, &RngStream::new(a.seed, 0))?;
    if a.json {
        let value = json!({
            "command": "independence",
            "hypothesis": INDEPENDENCE_HYPOTHESIS,
            "n": data.n(),
            "num_classes": data.classes().num_classes(),
            "dim": data.dim(),
            "rho_hat": res.rho_hat,
            "permutations": a.r,
            "seed": a.seed,
            "p_value": res.p_value,
        });
        return cgc::json::to_string_pretty(&value);
    }
    let mut s = String::new();
    let _ = writeln!(s, "{INDEPENDENCE_HYPOTHESIS}");
    let _ = writeln!(
        s,
        "data: n = {}, classes = {}, dimension = {}",
        data.n(),
        data.classes().num_classes(),
        data.dim()
    );
    let _ = writeln!(s, "rho_g(X,Z) = {}", res.rho_hat);
    let _ = writeln!(s, "permutations: {} (seed {})", a.r, a.seed);
    let _ = writeln!(s, "p-value = {}", res.p_value);
    Ok(s)
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CgcError::InvalidInput(format!("bad class size `{t}` in --n")))
        })
        .collect()
}

/// Plan file (if any) overridden by flags, with defaults filled in.
pub fn resolve_plan(a: &SimulateArgs) -> Result<ExperimentPlan> {
    let mut plan = match &a.plan {
        Some(path) => ExperimentPlan::from_config_file(path)?,
        None => {
            let design: Design = a
                .design
                .as_deref()
                .ok_or_else(|| {
                    CgcError::InvalidInput(
                        "simulate needs --plan or --design (valid designs: ex1a, ex1b, ex2a, ex2b, ex3)".into(),
                    )
                })?
                .parse()?;
            let (p, sizes) = match design {
                Design::Ex3 => (5, vec![100]),
                _ => (1, vec![40, 40, 40]),
            };
            ExperimentPlan::new(ScenarioConfig::new(design, p, 1, sizes, 0.0), vec![0.0], vec![Method::AsN])
        }
    };
    if let Some(d) = &a.design {
        plan.scenario.design = d.parse()?;
    }
    if let Some(p) = a.p {
        plan.scenario.p = p;
    }
    if let Some(q) = a.q {
        plan.scenario.q = q;
    }
    if let Some(n) = &a.n {
        plan.scenario.class_sizes = parse_sizes(n)?;
    }
    if let Some(g) = &a.beta_grid {
        plan.beta_grid = parse_beta_grid(g)?;
    }
    if let Some(m) = &a.methods {
        plan.methods = m
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
    }
    if let Some(m) = &a.mode {
        plan.mode = m.parse()?;
    }
    if let Some(r) = a.r {
        plan.replications = r;
    }
    if let Some(alpha) = a.alpha {
        plan.alpha = alpha;
    }
    if let Some(b) = a.b {
        plan.bootstrap_b = b;
    }
    if let Some(seed) = a.seed {
        plan.seed = seed;
    }
    plan.scenario.seed = plan.seed;
    if let Some(v) = &a.sigma_variant {
        plan.scenario.sigma_variant = v.parse()?;
    }
    if let Some(c) = &a.exp_convention {
        plan.scenario.exp_convention = c.parse()?;
    }
    if a.timing {
        plan.record_timing = true;
    }
    plan.validate()?;
    Ok(plan)
}

pub fn simulate(a: &SimulateArgs) -> Result<String> {
    let format: ReportFormat = a.format.parse()?;
    let plan = resolve_plan(a)?;
    let report = run_beta_sweep(&plan)?;
    match &a.output {
        Some(path) => {
            export_report(&report, format, path)?;
            Ok(format!("wrote {} rows to {}\n", report.rows.len(), path.display()))
        }
        None => render_report(&report, format),
    }
}
