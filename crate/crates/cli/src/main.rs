//! Command-line front end for the doubly penalized additive regression
//! library: fit models on CSV data, apply saved models, export
//! partial-dependence tables, and run the built-in benchmark scenarios.
//!
//! Exit codes: 0 on success, 2 for usage or input-validation failures,
//! 1 for runtime failures. Errors are written to stderr as
//! `error[<class>]: <message>` with a machine-parsable class.

mod config;
mod data;
mod run;

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// A classified command failure: `class` is stable and machine parsable,
/// `code` is the process exit status.
#[derive(Debug)]
pub struct CliError {
    pub class: &'static str,
    pub message: String,
    pub code: u8,
}

impl CliError {
    /// Bad flags, flag combinations, or config values.
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            class: "usage",
            message: message.into(),
            code: 2,
        }
    }

    /// Input data that fails validation (CSV schema, non-numeric cells,
    /// response problems).
    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            class: "data",
            message: message.into(),
            code: 2,
        }
    }

    /// Filesystem failures.
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError {
            class: "io",
            message: format!("{}: {err}", path.display()),
            code: 1,
        }
    }

    /// Errors from the fitting library, classified by kind: solver failures
    /// are runtime errors, malformed model documents are model errors, and
    /// everything else reports a problem with the supplied data or settings.
    pub fn from_core(err: anovatv::Error) -> Self {
        match err {
            anovatv::Error::LassoNoConvergence { .. } => CliError {
                class: "runtime",
                message: err.to_string(),
                code: 1,
            },
            anovatv::Error::ModelDocument(_) => CliError {
                class: "model",
                message: err.to_string(),
                code: 2,
            },
            other => CliError::data(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "anovatv",
    version,
    about = "Sparse low-order interaction modeling with total-variation penalties"
)]
struct Cli {
    /// TOML file supplying defaults for any long option; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Cap the worker threads used for tuning sweeps and benchmarks.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

// One short-lived value per process; the size spread between variants is fine.
#[allow(clippy::large_enum_variant)]
#[derive(Subcommand)]
enum Command {
    /// Fit a model to a CSV file and write the model document.
    Fit(FitArgs),
    /// Apply a saved model to new rows and write predictions.
    Predict(PredictArgs),
    /// Export a partial-dependence table for one covariate subset.
    Pdp(PdpArgs),
    /// Run a built-in benchmark scenario and summarize test error.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Training data: CSV with a header row and numeric columns.
    data: Option<PathBuf>,

    /// Response column name.
    #[arg(short, long)]
    response: Option<String>,

    /// Loss function: squared or logistic.
    #[arg(long, value_name = "NAME")]
    loss: Option<String>,

    /// Spline order: 1 (piecewise constant) or 2 (piecewise linear).
    #[arg(long, value_name = "M")]
    order: Option<usize>,

    /// Highest interaction order: 1 (additive) or 2 (pairwise).
    #[arg(long, value_name = "K")]
    interactions: Option<usize>,

    /// Marginal knots per covariate, placed at training-data quantiles
    /// (default: 11 for squared loss, 6 for logistic).
    #[arg(long, value_name = "N")]
    knots: Option<usize>,

    /// Identification projection: averaging or min-corner.
    #[arg(long, value_name = "NAME")]
    projection: Option<String>,

    /// Explicit coefficient-penalty grid, e.g. 0.1,0.03,0.01.
    #[arg(long, value_name = "LIST", value_delimiter = ',', num_args = 1..)]
    rho_grid: Option<Vec<f64>>,

    /// Explicit block-norm penalty grid, e.g. 0.2,0.1,0.05.
    #[arg(long, value_name = "LIST", value_delimiter = ',', num_args = 1..)]
    lambda_grid: Option<Vec<f64>>,

    /// Points per automatic penalty grid.
    #[arg(long, value_name = "N")]
    grid_points: Option<usize>,

    /// Smallest automatic grid value as a fraction of the data-driven anchor.
    #[arg(long, value_name = "RATIO")]
    grid_min_ratio: Option<f64>,

    /// Held-out data for validation tuning (same schema as the training CSV).
    #[arg(long, value_name = "FILE")]
    validation: Option<PathBuf>,

    /// Tune by k-fold cross-validation (the default, with 5 folds).
    #[arg(long, value_name = "K")]
    folds: Option<usize>,

    /// Skip tuning and fit at this coefficient-penalty level (with --lambda).
    #[arg(long, value_name = "LEVEL")]
    rho: Option<f64>,

    /// Skip tuning and fit at this block-norm penalty level (with --rho).
    #[arg(long, value_name = "LEVEL")]
    lambda: Option<f64>,

    /// Seed for cross-validation fold assignment.
    #[arg(long)]
    seed: Option<u64>,

    /// Output path for the model document.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Optional CSV dump of the full tuning sweep.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Feature data: CSV with a header row; must contain the model's columns.
    data: Option<PathBuf>,

    /// Model document written by `fit`.
    #[arg(short, long, value_name = "FILE")]
    model: Option<PathBuf>,

    /// Output path for the predictions CSV.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PdpArgs {
    /// Background data the non-plotted covariates are averaged over
    /// (typically the training CSV).
    data: Option<PathBuf>,

    /// Model document written by `fit`.
    #[arg(short, long, value_name = "FILE")]
    model: Option<PathBuf>,

    /// One or two covariate names, e.g. x1 or x1,x2.
    #[arg(short, long, value_name = "NAMES", value_delimiter = ',', num_args = 1..)]
    covariates: Option<Vec<String>>,

    /// Grid points per covariate axis.
    #[arg(long, value_name = "N")]
    points: Option<usize>,

    /// Output path for the partial-dependence CSV.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario name: regression, classification, or lattice.
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,

    /// Number of independent replications.
    #[arg(long, value_name = "N")]
    reps: Option<usize>,

    /// Base seed; replication r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,

    /// Training rows per replication (scenario-specific default).
    #[arg(long, value_name = "N")]
    n_train: Option<usize>,

    /// Model variants to run as projection:order pairs,
    /// e.g. averaging:2,min-corner:1 (default: all four).
    #[arg(long, value_name = "LIST", value_delimiter = ',', num_args = 1..)]
    variants: Option<Vec<String>>,

    /// Optional CSV output with one row per variant and metric.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error[{}]: {}", err.class, err.message);
            ExitCode::from(err.code)
        }
    }
}
