//! Multivariate nonparametric regression via doubly penalized functional
//! ANOVA modeling: sums of low-order interaction components built from
//! truncated-power spline bases, fitted by block descent with two penalties
//! per block — a hierarchical total-variation penalty (a weighted lasso on
//! the basis coefficients) and an empirical-norm penalty (a vector soft
//! threshold on the fitted block).
//!
//! Squared-error and logistic losses are supported. The crate also ships the
//! grid-level total-variation functionals the penalties correspond to, plus a
//! simulation harness with deterministic, seeded scenario generators.

pub mod basis;
pub mod error;
pub mod htv;
pub mod knots;
pub mod model;
pub mod piecewise;
pub mod sim;
pub mod solver;

pub use basis::{
    block_column_nus, build_psi_basis, column_degree, enumerate_blocks, evaluate_block_raw,
    materialize_block, CovariateBasis, DesignBlock,
};
pub use error::{Error, Result};
pub use htv::{anova_decompose, htv, htv_via_components, raw_tv, GridFn};
pub use knots::{
    build_knots, marginal_knots_from_column, sample_quantile, superset_knots, KnotSystem,
    Projection,
};
pub use model::{
    default_pdp_axes, fit, partial_dependence, predict, predict_probability, BlockCoefficients,
    ComponentValues, FittedModel, GridSpec, Loss, ModelSpec, PdpGrid, ProjectionChoice, TuneRow,
    TuningInput, DEFAULT_GRID_MIN_RATIO, DEFAULT_GRID_POINTS,
};
pub use sim::{
    classification_metrics, classification_oracle, generate_classification, generate_lattice,
    generate_regression, mise, run_replications, summarize, ClassificationMetrics, ScenarioData,
    Summary, LATTICE_NOISE_SD, REGRESSION_NOISE_SD, SCENARIO_DIM,
};
pub use solver::{
    bdt_fit, bdt_fit_from, bdt_logit_fit, bdt_logit_fit_from, expit, log1p_exp, solve_lasso_block,
    threshold_block, FitOptions, FitState, PenaltyConfig,
};
