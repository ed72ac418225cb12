//! `cgc`: compare two predictor groups by their categorical Gini correlation
//! with a class label, test independence, and run simulation studies.
//!
//! Exit codes: 0 success, 2 input error, 3 degenerate data, 4 replicate
//! abort in a simulation.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cgc::CgcError;

#[derive(Parser, Debug)]
#[command(name = "cgc", version, about = "Categorical Gini correlation tests")]
struct Cli {
    /// Worker threads (also read from CGC_THREADS; default: all cores).
    #[arg(long, global = true, env = "CGC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test whether X depends on the label more strongly than Y.
    Compare(PairArgs),
    /// Test whether Y adds to X, comparing W = (X, Y) against X.
    AddedValue(PairArgs),
    /// Permutation test of independence between features and label.
    Independence(IndependenceArgs),
    /// Run a Monte Carlo experiment.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
pub struct PairArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Label column (name or 0-based index).
    #[arg(long, default_value = "label")]
    pub label: String,
    /// Columns of the first group: names, indices or ranges like 1-4.
    #[arg(long)]
    pub x: String,
    /// Columns of the second group.
    #[arg(long)]
    pub y: String,
    /// asN, bootstrap or projection.
    #[arg(long, default_value = "asN")]
    pub method: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Bootstrap replicates.
    #[arg(long = "B", default_value_t = 1000)]
    pub b: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exchange the two groups.
    #[arg(long)]
    pub swap: bool,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct IndependenceArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "label")]
    pub label: String,
    /// Feature columns; default is every column except the label.
    #[arg(long)]
    pub cols: Option<String>,
    /// Permutations.
    #[arg(long = "R", default_value_t = 999)]
    pub r: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Plan file; command-line flags override its values.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// ex1a, ex1b, ex2a, ex2b or ex3.
    #[arg(long)]
    pub design: Option<String>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    /// Class sizes, e.g. 40,40,40 (a single total for ex3).
    #[arg(long)]
    pub n: Option<String>,
    /// start:stop:step or a comma-separated list.
    #[arg(long = "beta-grid")]
    pub beta_grid: Option<String>,
    /// Comma-separated subset of asN, bootstrap, projection.
    #[arg(long)]
    pub methods: Option<String>,
    /// compare or added-value.
    #[arg(long)]
    pub mode: Option<String>,
    /// Replications.
    #[arg(long = "R")]
    pub r: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "B")]
    pub b: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// independent or ar (ex3 only).
    #[arg(long = "sigma-variant")]
    pub sigma_variant: Option<String>,
    /// rate or mean (exponential designs).
    #[arg(long = "exp-convention")]
    pub exp_convention: Option<String>,
    /// Report file; stdout if absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// csv, json or markdown.
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Record time spent in each test (makes reports run-dependent).
    #[arg(long)]
    pub timing: bool,
}

fn exit_code(err: &CgcError) -> u8 {
    match err {
        CgcError::DegeneratePredictor { .. }
        | CgcError::DegenerateVariance { .. }
        | CgcError::RetryExhausted { .. } => 3,
        CgcError::ReplicateFailed { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Compare(a) => commands::compare(a, false),
        Command::AddedValue(a) => commands::compare(a, true),
        Command::Independence(a) => commands::independence(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
