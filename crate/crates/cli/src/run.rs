//! Subcommand implementations.

use crate::config::{self, FileConfig};
use crate::data::{self, fmt};
use crate::{Cli, CliError, Command, FitArgs, PdpArgs, PredictArgs, SimulateArgs};
use anovatv::{
    classification_metrics, default_pdp_axes, fit, generate_classification, generate_lattice,
    generate_regression, mise, partial_dependence, run_replications, summarize,
    ClassificationMetrics, FittedModel, GridSpec, Loss, ModelSpec, ProjectionChoice, Summary,
    TuningInput, DEFAULT_GRID_MIN_RATIO, DEFAULT_GRID_POINTS, LATTICE_NOISE_SD,
    REGRESSION_NOISE_SD,
};
use ndarray::Array1;
use std::fs;
use std::path::{Path, PathBuf};

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError {
                class: "runtime",
                message: format!("thread pool: {e}"),
                code: 1,
            })?;
    }
    let cfg = config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Fit(args) => cmd_fit(args, cfg),
        Command::Predict(args) => cmd_predict(args, cfg),
        Command::Pdp(args) => cmd_pdp(args, cfg),
        Command::Simulate(args) => cmd_simulate(args, cfg),
    }
}

fn parse_loss(s: &str) -> Result<Loss, CliError> {
    Loss::parse(s)
        .map_err(|_| CliError::usage(format!("unknown loss '{s}' (expected squared or logistic)")))
}

fn parse_projection(s: &str) -> Result<ProjectionChoice, CliError> {
    match s {
        "averaging" => Ok(ProjectionChoice::Averaging),
        "min-corner" => Ok(ProjectionChoice::MinCorner),
        other => Err(CliError::usage(format!(
            "unknown projection '{other}' (expected averaging or min-corner)"
        ))),
    }
}

fn grid_spec(
    explicit: Option<Vec<f64>>,
    points: Option<usize>,
    min_ratio: Option<f64>,
) -> GridSpec {
    match explicit {
        Some(values) => GridSpec::Explicit(values),
        None => GridSpec::Auto {
            points: points.unwrap_or(DEFAULT_GRID_POINTS),
            min_ratio: min_ratio.unwrap_or(DEFAULT_GRID_MIN_RATIO),
        },
    }
}

fn load_model(path: &Path) -> Result<FittedModel, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    FittedModel::from_json(&text).map_err(CliError::from_core)
}

fn cmd_fit(args: FitArgs, cfg: FileConfig) -> Result<(), CliError> {
    let data_path = args.data.or(cfg.data).ok_or_else(|| {
        CliError::usage("training data path required (positional argument or 'data' config key)")
    })?;
    let response = args
        .response
        .or(cfg.response)
        .ok_or_else(|| CliError::usage("--response is required"))?;
    let loss = parse_loss(args.loss.or(cfg.loss).as_deref().unwrap_or("squared"))?;
    let projection = parse_projection(
        args.projection
            .or(cfg.projection)
            .as_deref()
            .unwrap_or("averaging"),
    )?;
    let grid_points = args.grid_points.or(cfg.grid_points);
    let grid_min_ratio = args.grid_min_ratio.or(cfg.grid_min_ratio);
    let default_knots = match loss {
        Loss::Squared => 11,
        Loss::Logistic => 6,
    };
    let spec = ModelSpec {
        m: args.order.or(cfg.order).unwrap_or(2),
        max_order: args.interactions.or(cfg.interactions).unwrap_or(2),
        n_knots: args.knots.or(cfg.knots).unwrap_or(default_knots),
        projection,
        rho_grid: grid_spec(args.rho_grid.or(cfg.rho_grid), grid_points, grid_min_ratio),
        lambda_grid: grid_spec(
            args.lambda_grid.or(cfg.lambda_grid),
            grid_points,
            grid_min_ratio,
        ),
        seed: args.seed.or(cfg.seed).unwrap_or(0),
        options: None,
    };
    let out = args
        .out
        .or(cfg.out)
        .unwrap_or_else(|| PathBuf::from("model.json"));
    let report = args.report.or(cfg.report);

    let validation = args.validation.or(cfg.validation);
    let folds = args.folds.or(cfg.folds);
    let rho = args.rho.or(cfg.rho);
    let lambda = args.lambda.or(cfg.lambda);
    if rho.is_some() != lambda.is_some() {
        return Err(CliError::usage("--rho and --lambda must be given together"));
    }
    let fixed = rho.zip(lambda);
    let modes =
        u8::from(validation.is_some()) + u8::from(folds.is_some()) + u8::from(fixed.is_some());
    if modes > 1 {
        return Err(CliError::usage(
            "choose one tuning mode: --validation FILE, --folds K, or --rho/--lambda",
        ));
    }

    let table = data::read_csv(&data_path)?;
    let (x, y, names) = table.split_response(&response)?;
    let held_out = match &validation {
        Some(vpath) => {
            let vtable = data::read_csv(vpath)?;
            let xv = vtable.select_columns(&names)?;
            let Some(r) = vtable.column_index(&response) else {
                return Err(CliError::data(format!(
                    "{}: response column '{response}' not found",
                    vpath.display()
                )));
            };
            let yv = Array1::from_iter(vtable.rows.iter().map(|row| row[r]));
            Some((xv, yv))
        }
        None => None,
    };
    let tuning = if let Some((xv, yv)) = &held_out {
        TuningInput::Validation {
            x: xv.view(),
            y: yv.view(),
        }
    } else if let Some((rho, lambda)) = fixed {
        TuningInput::Fixed { rho, lambda }
    } else {
        TuningInput::KFold(folds.unwrap_or(5))
    };

    let model =
        fit(x.view(), y.view(), Some(&names), &spec, loss, tuning).map_err(CliError::from_core)?;
    for w in &model.warnings {
        eprintln!("warning: {w}");
    }

    let mut outputs: Vec<(&Path, Vec<u8>)> = vec![(&out, model.to_json().into_bytes())];
    if let Some(rp) = &report {
        outputs.push((rp, tune_report_csv(&model)?));
    }
    data::write_outputs(&outputs)?;

    let nonzero: usize = model
        .blocks
        .iter()
        .map(|b| b.beta.iter().filter(|&&v| v != 0.0).count())
        .sum();
    println!(
        "fitted {} model: {} row(s), {} covariate(s), spline order {}, interactions up to {}",
        loss.as_str(),
        model.n_training_rows,
        model.covariate_names.len(),
        model.m,
        model.max_order
    );
    if let Some(best) = model.tune_report().first() {
        println!(
            "selected rho {} and lambda {} (criterion {})",
            fmt(model.rho),
            fmt(model.lambda),
            fmt(best.criterion)
        );
    }
    println!(
        "objective {}; {} active block(s), {} nonzero coefficient(s)",
        fmt(model.objective),
        model.blocks.len(),
        nonzero
    );
    for block in &model.blocks {
        let nnz = block.beta.iter().filter(|&&v| v != 0.0).count();
        println!(
            "  {}: {} nonzero coefficient(s)",
            model.block_label(block),
            nnz
        );
    }
    println!("model written to {}", out.display());
    if let Some(rp) = &report {
        println!("tuning report written to {}", rp.display());
    }
    Ok(())
}

fn tune_report_csv(model: &FittedModel) -> Result<Vec<u8>, CliError> {
    data::csv_bytes(
        &[
            "rho",
            "lambda",
            "criterion",
            "active_blocks",
            "nonzero_coefficients",
            "converged",
        ],
        model.tune_report().iter().map(|r| {
            vec![
                fmt(r.rho),
                fmt(r.lambda),
                fmt(r.criterion),
                r.active_blocks.to_string(),
                r.nonzero_coefficients.to_string(),
                r.converged.to_string(),
            ]
        }),
    )
}

fn cmd_predict(args: PredictArgs, cfg: FileConfig) -> Result<(), CliError> {
    let model_path = args
        .model
        .or(cfg.model)
        .ok_or_else(|| CliError::usage("--model is required"))?;
    let data_path = args.data.or(cfg.data).ok_or_else(|| {
        CliError::usage("feature data path required (positional argument or 'data' config key)")
    })?;
    let out = args
        .out
        .or(cfg.out)
        .unwrap_or_else(|| PathBuf::from("predictions.csv"));
    let model = load_model(&model_path)?;
    let table = data::read_csv(&data_path)?;
    let headers: &[&str] = match model.loss {
        Loss::Squared => &["prediction"],
        Loss::Logistic => &["prediction", "probability"],
    };
    let n = table.n_rows();
    let bytes = if n == 0 {
        data::csv_bytes(headers, std::iter::empty())?
    } else {
        let x = data::matrix_for_model(&table, &model)?;
        let eta = model.predict(x.view()).map_err(CliError::from_core)?;
        match model.loss {
            Loss::Squared => data::csv_bytes(headers, eta.iter().map(|&v| vec![fmt(v)]))?,
            Loss::Logistic => {
                let prob = model
                    .predict_probability(x.view())
                    .map_err(CliError::from_core)?;
                data::csv_bytes(
                    headers,
                    eta.iter().zip(&prob).map(|(&e, &p)| vec![fmt(e), fmt(p)]),
                )?
            }
        }
    };
    data::write_outputs(&[(&out, bytes)])?;
    println!("{n} prediction(s) written to {}", out.display());
    Ok(())
}

fn cmd_pdp(args: PdpArgs, cfg: FileConfig) -> Result<(), CliError> {
    let model_path = args
        .model
        .or(cfg.model)
        .ok_or_else(|| CliError::usage("--model is required"))?;
    let data_path = args.data.or(cfg.data).ok_or_else(|| {
        CliError::usage("background data path required (positional argument or 'data' config key)")
    })?;
    let names = args
        .covariates
        .or(cfg.covariates)
        .ok_or_else(|| CliError::usage("--covariates is required (one or two names)"))?;
    if names.is_empty() || names.len() > 2 {
        return Err(CliError::usage(format!(
            "partial dependence takes one or two covariates, got {}",
            names.len()
        )));
    }
    if names.len() == 2 && names[0] == names[1] {
        return Err(CliError::usage("covariate names must be distinct"));
    }
    let points = args.points.or(cfg.points).unwrap_or(25);
    let out = args
        .out
        .or(cfg.out)
        .unwrap_or_else(|| PathBuf::from("pdp.csv"));
    let model = load_model(&model_path)?;
    let mut indices = Vec::with_capacity(names.len());
    for name in &names {
        let pos = model
            .covariate_names
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| {
                CliError::usage(format!(
                    "covariate '{name}' is not in the model (available: {})",
                    model.covariate_names.join(", ")
                ))
            })?;
        indices.push(model.included[pos]);
    }
    let table = data::read_csv(&data_path)?;
    if table.n_rows() == 0 {
        return Err(CliError::data(format!(
            "{}: partial dependence needs at least one background row",
            table.path.display()
        )));
    }
    let x = data::matrix_for_model(&table, &model)?;
    let axes = default_pdp_axes(&model, &indices, points).map_err(CliError::from_core)?;
    let grid =
        partial_dependence(&model, &indices, &axes, x.view()).map_err(CliError::from_core)?;
    let mut headers: Vec<&str> = grid.names.iter().map(String::as_str).collect();
    headers.push("estimate");
    let bytes = data::csv_bytes(
        &headers,
        grid.points.iter().zip(&grid.values).map(|(point, &v)| {
            let mut row: Vec<String> = point.iter().map(|&c| fmt(c)).collect();
            row.push(fmt(v));
            row
        }),
    )?;
    data::write_outputs(&[(&out, bytes)])?;
    println!(
        "{} grid point(s) written to {}",
        grid.values.len(),
        out.display()
    );
    Ok(())
}

#[derive(Clone, Copy)]
enum Scenario {
    Regression,
    Classification,
    Lattice,
}

impl Scenario {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "regression" => Ok(Scenario::Regression),
            "classification" => Ok(Scenario::Classification),
            "lattice" => Ok(Scenario::Lattice),
            other => Err(CliError::usage(format!(
                "unknown scenario '{other}' (expected regression, classification, or lattice)"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Scenario::Regression => "regression",
            Scenario::Classification => "classification",
            Scenario::Lattice => "lattice",
        }
    }

    fn default_n_train(self) -> usize {
        match self {
            Scenario::Regression => 200,
            Scenario::Classification => 500,
            Scenario::Lattice => 100,
        }
    }
}

struct MetricRow {
    projection: &'static str,
    order: usize,
    metric: &'static str,
    summary: Summary,
}

fn parse_variant(s: &str) -> Result<(ProjectionChoice, &'static str, usize), CliError> {
    let bad = || {
        CliError::usage(format!(
            "variant '{s}' must be projection:order, e.g. averaging:2 or min-corner:1"
        ))
    };
    let (proj, order) = s.split_once(':').ok_or_else(bad)?;
    let choice = parse_projection(proj)?;
    let label = match choice {
        ProjectionChoice::Averaging => "averaging",
        ProjectionChoice::MinCorner => "min-corner",
    };
    let order: usize = order.parse().map_err(|_| bad())?;
    if !(1..=2).contains(&order) {
        return Err(CliError::usage(format!(
            "variant '{s}': spline order must be 1 or 2"
        )));
    }
    Ok((choice, label, order))
}

fn cmd_simulate(args: SimulateArgs, cfg: FileConfig) -> Result<(), CliError> {
    let scenario = Scenario::parse(
        args.scenario
            .or(cfg.scenario)
            .ok_or_else(|| {
                CliError::usage("--scenario is required (regression, classification, or lattice)")
            })?
            .as_str(),
    )?;
    let reps = args.reps.or(cfg.reps).unwrap_or(20);
    if reps == 0 {
        return Err(CliError::usage("--reps must be at least 1"));
    }
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let n_train = args
        .n_train
        .or(cfg.n_train)
        .unwrap_or_else(|| scenario.default_n_train());
    let variants: Vec<(ProjectionChoice, &'static str, usize)> =
        match args.variants.or(cfg.variants) {
            Some(list) => list
                .iter()
                .map(|s| parse_variant(s))
                .collect::<Result<_, _>>()?,
            None => vec![
                (ProjectionChoice::Averaging, "averaging", 2),
                (ProjectionChoice::Averaging, "averaging", 1),
                (ProjectionChoice::MinCorner, "min-corner", 2),
                (ProjectionChoice::MinCorner, "min-corner", 1),
            ],
        };

    let mut rows: Vec<MetricRow> = Vec::new();
    for &(choice, label, order) in &variants {
        let spec = ModelSpec {
            m: order,
            projection: choice,
            ..ModelSpec::default()
        };
        match scenario {
            Scenario::Regression => {
                let values = run_replications(reps, |rep| {
                    let d = generate_regression(
                        n_train,
                        n_train,
                        10_000,
                        REGRESSION_NOISE_SD,
                        seed + rep as u64,
                    );
                    let model = fit(
                        d.x_train.view(),
                        d.y_train.view(),
                        None,
                        &spec,
                        Loss::Squared,
                        TuningInput::Validation {
                            x: d.x_valid.view(),
                            y: d.y_valid.view(),
                        },
                    )?;
                    mise(&model.predict(d.x_test.view())?, &d.truth_test)
                })
                .map_err(CliError::from_core)?;
                rows.push(MetricRow {
                    projection: label,
                    order,
                    metric: "mise",
                    summary: summarize(&values),
                });
            }
            Scenario::Lattice => {
                let values = run_replications(reps, |rep| {
                    let d = generate_lattice(
                        n_train,
                        n_train,
                        101,
                        LATTICE_NOISE_SD,
                        seed + rep as u64,
                    );
                    let model = fit(
                        d.x_train.view(),
                        d.y_train.view(),
                        None,
                        &spec,
                        Loss::Squared,
                        TuningInput::Validation {
                            x: d.x_valid.view(),
                            y: d.y_valid.view(),
                        },
                    )?;
                    mise(&model.predict(d.x_test.view())?, &d.truth_test)
                })
                .map_err(CliError::from_core)?;
                rows.push(MetricRow {
                    projection: label,
                    order,
                    metric: "mise",
                    summary: summarize(&values),
                });
            }
            Scenario::Classification => {
                let metrics: Vec<ClassificationMetrics> = run_replications(reps, |rep| {
                    let d = generate_classification(n_train, n_train, 10_000, seed + rep as u64);
                    let model = fit(
                        d.x_train.view(),
                        d.y_train.view(),
                        None,
                        &spec,
                        Loss::Logistic,
                        TuningInput::Validation {
                            x: d.x_valid.view(),
                            y: d.y_valid.view(),
                        },
                    )?;
                    let p = model.predict_probability(d.x_test.view())?;
                    classification_metrics(&p, &d.y_test)
                })
                .map_err(CliError::from_core)?;
                type MetricColumn = (&'static str, fn(&ClassificationMetrics) -> f64);
                let fields: [MetricColumn; 3] = [
                    ("error_rate", |m| m.error_rate),
                    ("log_loss", |m| m.log_loss),
                    ("auc", |m| m.auc),
                ];
                for (metric, get) in fields {
                    let values: Vec<f64> = metrics.iter().map(get).collect();
                    rows.push(MetricRow {
                        projection: label,
                        order,
                        metric,
                        summary: summarize(&values),
                    });
                }
            }
        }
    }

    println!(
        "scenario {}: {} replication(s), {} training row(s) each",
        scenario.name(),
        reps,
        n_train
    );
    println!(
        "{:<12} {:<6} {:<12} mean (se)",
        "projection", "order", "metric"
    );
    for row in &rows {
        println!(
            "{:<12} {:<6} {:<12} {}",
            row.projection,
            row.order,
            row.metric,
            fmt_summary(row.summary)
        );
    }

    if let Some(out) = args.out.or(cfg.out) {
        let bytes = data::csv_bytes(
            &[
                "scenario",
                "projection",
                "order",
                "n_train",
                "reps",
                "metric",
                "mean",
                "se",
                "summary",
            ],
            rows.iter().map(|row| {
                vec![
                    scenario.name().to_string(),
                    row.projection.to_string(),
                    row.order.to_string(),
                    n_train.to_string(),
                    reps.to_string(),
                    row.metric.to_string(),
                    fmt(row.summary.mean),
                    fmt(row.summary.standard_error),
                    fmt_summary(row.summary),
                ]
            }),
        )?;
        data::write_outputs(&[(&out, bytes)])?;
        println!("table written to {}", out.display());
    }
    Ok(())
}

fn fmt_summary(s: Summary) -> String {
    format!("{:.4} ({:.4})", s.mean, s.standard_error)
}
