//! User-facing estimator: assemble design blocks from data, tune the two
//! penalty levels on a grid, and expose prediction, ANOVA components,
//! partial dependence, and lossless serialization.
//!
//! Fitting pipeline:
//! 1. validate the inputs and build marginal knots per covariate (quantiles
//!    with duplicates collapsed); unusable covariates are excluded with a
//!    warning rather than failing the fit;
//! 2. build the transformed spline basis and one design block per covariate
//!    subset up to the configured interaction order;
//! 3. anchor logarithmic grids for `rho` (lasso level) and `lambda`
//!    (block-norm level) at the smallest values that keep every block at
//!    zero, then walk each `lambda` path with warm starts;
//! 4. score every grid point on a validation set or by k-fold
//!    cross-validation, pick the minimizer, and refit from zero at the
//!    selected pair so the result is independent of path order.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{
    block_column_nus, build_psi_basis, enumerate_blocks, evaluate_block_raw, materialize_block,
    CovariateBasis, DesignBlock,
};
use crate::error::{Error, Result};
use crate::knots::{marginal_knots_from_column, KnotSystem, Projection};
use crate::solver::{
    bdt_fit, bdt_fit_from, bdt_logit_fit, bdt_logit_fit_from, empirical_norm, expit, log1p_exp,
    solve_lasso_block, FitOptions, FitState, PenaltyConfig,
};

/// Loss functions the estimator supports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    /// Squared error for a continuous response.
    Squared,
    /// Bernoulli negative log-likelihood for a 0/1 response.
    Logistic,
}

impl Loss {
    pub fn as_str(self) -> &'static str {
        match self {
            Loss::Squared => "squared",
            Loss::Logistic => "logistic",
        }
    }

    pub fn parse(s: &str) -> Result<Loss> {
        match s {
            "squared" => Ok(Loss::Squared),
            "logistic" => Ok(Loss::Logistic),
            other => Err(Error::InvalidConfig(format!("unknown loss '{other}'"))),
        }
    }

    fn default_options(self) -> FitOptions {
        match self {
            Loss::Squared => FitOptions::squared(),
            Loss::Logistic => FitOptions::logistic(),
        }
    }
}

/// How the per-covariate projection operator is chosen at fit time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionChoice {
    /// Average the function over the marginal knots of each covariate.
    Averaging,
    /// Evaluate the function at the smallest marginal knot of each covariate.
    MinCorner,
}

impl ProjectionChoice {
    fn resolve(self, p: usize) -> Projection {
        match self {
            ProjectionChoice::Averaging => Projection::Averaging,
            ProjectionChoice::MinCorner => Projection::fixed_min_corner(p),
        }
    }
}

/// One penalty grid: either resolved automatically from a data-driven anchor
/// or given explicitly.
#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    /// `points` logarithmically spaced values from the anchor down to
    /// `anchor * min_ratio`.
    Auto { points: usize, min_ratio: f64 },
    /// Explicit values (sorted descending before use).
    Explicit(Vec<f64>),
}

pub const DEFAULT_GRID_POINTS: usize = 8;
pub const DEFAULT_GRID_MIN_RATIO: f64 = 1.0 / 100.0;

impl GridSpec {
    fn validate(&self, what: &str) -> Result<()> {
        match self {
            GridSpec::Auto { points, min_ratio } => {
                if *points == 0 {
                    return Err(Error::InvalidConfig(format!(
                        "{what} grid needs at least one point"
                    )));
                }
                if !(*min_ratio > 0.0 && *min_ratio <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "{what} grid ratio must lie in (0, 1], got {min_ratio}"
                    )));
                }
            }
            GridSpec::Explicit(values) => {
                if values.is_empty() {
                    return Err(Error::InvalidConfig(format!("{what} grid is empty")));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "{what} grid values must be finite and nonnegative"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Concrete descending grid; `anchor` is only consulted for `Auto`.
    fn resolve(&self, anchor: f64, what: &str) -> Result<Vec<f64>> {
        match self {
            GridSpec::Explicit(values) => {
                let mut v = values.clone();
                v.sort_by(|a, b| b.total_cmp(a));
                v.dedup();
                Ok(v)
            }
            GridSpec::Auto { points, min_ratio } => {
                if !(anchor.is_finite() && anchor > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "automatic {what} grid could not be anchored on this data \
                         (anchor {anchor}); supply an explicit grid"
                    )));
                }
                if *points == 1 {
                    return Ok(vec![anchor]);
                }
                let grid = (0..*points)
                    .map(|i| anchor * min_ratio.powf(i as f64 / (*points - 1) as f64))
                    .collect();
                Ok(grid)
            }
        }
    }
}

/// Statistical configuration of a fit.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    /// Spline differentiation order: 1 (piecewise constant) or 2 (piecewise
    /// cross-linear).
    pub m: usize,
    /// Maximum interaction order of the fitted blocks (1 or 2).
    pub max_order: usize,
    /// Marginal knot budget per covariate (evenly spaced quantiles).
    pub n_knots: usize,
    pub projection: ProjectionChoice,
    pub rho_grid: GridSpec,
    pub lambda_grid: GridSpec,
    /// Seed for fold assignment in cross-validation.
    pub seed: u64,
    /// Solver controls; `None` uses the per-loss defaults.
    pub options: Option<FitOptions>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            m: 2,
            max_order: 2,
            n_knots: 11,
            projection: ProjectionChoice::Averaging,
            rho_grid: GridSpec::Auto {
                points: DEFAULT_GRID_POINTS,
                min_ratio: DEFAULT_GRID_MIN_RATIO,
            },
            lambda_grid: GridSpec::Auto {
                points: DEFAULT_GRID_POINTS,
                min_ratio: DEFAULT_GRID_MIN_RATIO,
            },
            seed: 0,
            options: None,
        }
    }
}

/// How the penalty pair is selected.
#[derive(Clone, Debug)]
pub enum TuningInput<'a> {
    /// Score every grid point on held-out data.
    Validation {
        x: ArrayView2<'a, f64>,
        y: ArrayView1<'a, f64>,
    },
    /// Score every grid point by k-fold cross-validation on the training data.
    KFold(usize),
    /// Skip tuning and fit directly at the given pair.
    Fixed { rho: f64, lambda: f64 },
}

/// One scored point of the tuning sweep. `criterion` is the validation mean
/// squared error (squared loss) or the validation mean negative log-likelihood
/// (Bernoulli loss); for `Fixed` tuning it is the training objective.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TuneRow {
    pub rho: f64,
    pub lambda: f64,
    pub criterion: f64,
    pub active_blocks: usize,
    pub nonzero_coefficients: usize,
    pub converged: bool,
}

/// Coefficients of one active interaction block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCoefficients {
    /// Indices into the model's included-covariate list.
    pub covariates: Vec<usize>,
    /// Training column means of the raw block design.
    pub means: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Centered per-block contributions at a set of points.
#[derive(Clone, Debug)]
pub struct ComponentValues {
    /// Original input-column indices of the block's covariates.
    pub covariates: Vec<usize>,
    pub label: String,
    pub values: Array1<f64>,
}

/// Partial-dependence surface on a rectangular grid (row-major over the axes,
/// last axis fastest).
#[derive(Clone, Debug)]
pub struct PdpGrid {
    /// Original input-column indices.
    pub covariates: Vec<usize>,
    pub names: Vec<String>,
    /// One coordinate vector per grid point.
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

/// A fitted model: everything needed to reproduce predictions exactly.
#[derive(Clone, Debug)]
pub struct FittedModel {
    pub loss: Loss,
    pub m: usize,
    pub max_order: usize,
    pub projection: Projection,
    /// Names of the included covariates.
    pub covariate_names: Vec<String>,
    /// Original input-column index of each included covariate.
    pub included: Vec<usize>,
    /// Width the input matrix must have.
    pub n_input_columns: usize,
    /// Marginal knots per included covariate.
    pub marginal_knots: Vec<Vec<f64>>,
    pub intercept: f64,
    /// Active blocks only (zero blocks are dropped).
    pub blocks: Vec<BlockCoefficients>,
    /// Selected penalty levels.
    pub rho: f64,
    pub lambda: f64,
    /// Final training objective at the selected penalties.
    pub objective: f64,
    pub warnings: Vec<String>,
    pub tune_table: Vec<TuneRow>,
    pub n_training_rows: usize,
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ProjectionDocument {
    kind: String,
    #[serde(default)]
    indices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct BlockDocument {
    covariates: Vec<usize>,
    means: Vec<f64>,
    beta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    loss: String,
    m: usize,
    max_order: usize,
    projection: ProjectionDocument,
    covariate_names: Vec<String>,
    included: Vec<usize>,
    n_input_columns: usize,
    marginal_knots: Vec<Vec<f64>>,
    intercept: f64,
    blocks: Vec<BlockDocument>,
    rho: f64,
    lambda: f64,
    objective: f64,
    warnings: Vec<String>,
    tune_table: Vec<TuneRow>,
    n_training_rows: usize,
}

impl FittedModel {
    /// Human-readable label of a block, e.g. `age*bmi`.
    pub fn block_label(&self, block: &BlockCoefficients) -> String {
        block
            .covariates
            .iter()
            .map(|&j| self.covariate_names[j].clone())
            .collect::<Vec<_>>()
            .join("*")
    }

    /// The tuning sweep, sorted by criterion (best first).
    pub fn tune_report(&self) -> &[TuneRow] {
        &self.tune_table
    }

    fn build_bases(&self) -> Result<Vec<CovariateBasis>> {
        let knots = KnotSystem::from_marginal_knots(self.m, self.marginal_knots.clone())?;
        build_psi_basis(&knots, &self.projection)
    }

    /// Check width and finiteness (of used columns only), then restrict `x`
    /// to the included covariates.
    fn restrict_input(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_input_columns {
            return Err(Error::DimensionMismatch(format!(
                "input has {} column(s), model expects {}",
                x.ncols(),
                self.n_input_columns
            )));
        }
        for (pos, &j) in self.included.iter().enumerate() {
            if let Some(row) = x.column(j).iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteData {
                    name: self.covariate_names[pos].clone(),
                    row,
                });
            }
        }
        Ok(x.select(Axis(1), &self.included))
    }

    fn predict_restricted(
        &self,
        bases: &[CovariateBasis],
        x_inc: ArrayView2<f64>,
    ) -> Result<Array1<f64>> {
        let mut out = Array1::from_elem(x_inc.nrows(), self.intercept);
        for block in &self.blocks {
            let raw = evaluate_block_raw(bases, &block.covariates, x_inc)?;
            let beta = Array1::from_vec(block.beta.clone());
            let shift: f64 = block
                .means
                .iter()
                .zip(&block.beta)
                .map(|(m, b)| m * b)
                .sum();
            let contrib = raw.dot(&beta);
            for (o, c) in out.iter_mut().zip(contrib.iter()) {
                *o += c - shift;
            }
        }
        Ok(out)
    }

    /// Linear predictor (the fitted function value) at each row of `x`.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        let x_inc = self.restrict_input(x)?;
        let bases = self.build_bases()?;
        self.predict_restricted(&bases, x_inc.view())
    }

    /// Fitted probabilities; only defined for the Bernoulli loss.
    pub fn predict_probability(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        if self.loss != Loss::Logistic {
            return Err(Error::UnsupportedCase(
                "probability prediction requires a model fitted with the logistic loss".to_string(),
            ));
        }
        Ok(self.predict(x)?.mapv(expit))
    }

    /// Centered contribution of every active block at each row of `x`;
    /// contributions plus the intercept reproduce `predict`.
    pub fn anova_components(&self, x: ArrayView2<f64>) -> Result<Vec<ComponentValues>> {
        let x_inc = self.restrict_input(x)?;
        let bases = self.build_bases()?;
        let mut out = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let raw = evaluate_block_raw(&bases, &block.covariates, x_inc.view())?;
            let beta = Array1::from_vec(block.beta.clone());
            let shift: f64 = block
                .means
                .iter()
                .zip(&block.beta)
                .map(|(m, b)| m * b)
                .sum();
            let values = raw.dot(&beta).mapv(|v| v - shift);
            out.push(ComponentValues {
                covariates: block.covariates.iter().map(|&j| self.included[j]).collect(),
                label: self.block_label(block),
                values,
            });
        }
        Ok(out)
    }

    /// Serialize to a versioned JSON document that round-trips exactly.
    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            loss: self.loss.as_str().to_string(),
            m: self.m,
            max_order: self.max_order,
            projection: match &self.projection {
                Projection::Averaging => ProjectionDocument {
                    kind: "averaging".to_string(),
                    indices: Vec::new(),
                },
                Projection::FixedPoint(idx) => ProjectionDocument {
                    kind: "fixed-point".to_string(),
                    indices: idx.clone(),
                },
            },
            covariate_names: self.covariate_names.clone(),
            included: self.included.clone(),
            n_input_columns: self.n_input_columns,
            marginal_knots: self.marginal_knots.clone(),
            intercept: self.intercept,
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockDocument {
                    covariates: b.covariates.clone(),
                    means: b.means.clone(),
                    beta: b.beta.clone(),
                })
                .collect(),
            rho: self.rho,
            lambda: self.lambda,
            objective: self.objective,
            warnings: self.warnings.clone(),
            tune_table: self.tune_table.clone(),
            n_training_rows: self.n_training_rows,
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }

    /// Parse a document produced by [`FittedModel::to_json`].
    pub fn from_json(text: &str) -> Result<FittedModel> {
        let doc: ModelDocument = serde_json::from_str(text)
            .map_err(|e| Error::ModelDocument(format!("parse failure: {e}")))?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelDocument(format!(
                "unsupported format version {} (supported: {MODEL_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let loss = Loss::parse(&doc.loss)
            .map_err(|_| Error::ModelDocument(format!("unknown loss '{}'", doc.loss)))?;
        if !(1..=2).contains(&doc.m) {
            return Err(Error::ModelDocument(format!(
                "unsupported spline order {}",
                doc.m
            )));
        }
        let p_inc = doc.included.len();
        if doc.covariate_names.len() != p_inc || doc.marginal_knots.len() != p_inc {
            return Err(Error::ModelDocument(
                "covariate metadata lengths disagree".to_string(),
            ));
        }
        for (pos, &j) in doc.included.iter().enumerate() {
            if j >= doc.n_input_columns {
                return Err(Error::ModelDocument(format!(
                    "included column {j} is out of range for {} input column(s)",
                    doc.n_input_columns
                )));
            }
            if doc.included[..pos].contains(&j) {
                return Err(Error::ModelDocument(format!(
                    "included column {j} is listed twice"
                )));
            }
        }
        let projection = match doc.projection.kind.as_str() {
            "averaging" => Projection::Averaging,
            "fixed-point" => {
                if doc.projection.indices.len() != p_inc {
                    return Err(Error::ModelDocument(
                        "fixed-point projection must list one knot index per covariate".to_string(),
                    ));
                }
                Projection::FixedPoint(doc.projection.indices.clone())
            }
            other => {
                return Err(Error::ModelDocument(format!(
                    "unknown projection kind '{other}'"
                )))
            }
        };
        // Building the bases validates the knots, the spline order, and the
        // projection indices through the same code prediction will use, and
        // yields the column count every block must match.
        let knots = KnotSystem::from_marginal_knots(doc.m, doc.marginal_knots.clone())
            .map_err(|e| Error::ModelDocument(format!("bad knots: {e}")))?;
        let bases = build_psi_basis(&knots, &projection)
            .map_err(|e| Error::ModelDocument(e.to_string()))?;
        for b in &doc.blocks {
            if b.covariates.iter().any(|&j| j >= p_inc) {
                return Err(Error::ModelDocument(
                    "block references a covariate outside the model".to_string(),
                ));
            }
            if b.covariates.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::ModelDocument(
                    "block covariates must be strictly increasing".to_string(),
                ));
            }
            if b.means.len() != b.beta.len() {
                return Err(Error::ModelDocument(
                    "block means and coefficients have different lengths".to_string(),
                ));
            }
            let want = block_column_nus(&bases, &b.covariates).len();
            if b.beta.len() != want {
                return Err(Error::ModelDocument(format!(
                    "block has {} coefficient(s), its column layout requires {want}",
                    b.beta.len()
                )));
            }
        }
        Ok(FittedModel {
            loss,
            m: doc.m,
            max_order: doc.max_order,
            projection,
            covariate_names: doc.covariate_names,
            included: doc.included,
            n_input_columns: doc.n_input_columns,
            marginal_knots: doc.marginal_knots,
            intercept: doc.intercept,
            blocks: doc
                .blocks
                .into_iter()
                .map(|b| BlockCoefficients {
                    covariates: b.covariates,
                    means: b.means,
                    beta: b.beta,
                })
                .collect(),
            rho: doc.rho,
            lambda: doc.lambda,
            objective: doc.objective,
            warnings: doc.warnings,
            tune_table: doc.tune_table,
            n_training_rows: doc.n_training_rows,
        })
    }
}

/// Linear predictor at each row of `x` (free-function form of
/// [`FittedModel::predict`]).
pub fn predict(model: &FittedModel, x: ArrayView2<f64>) -> Result<Array1<f64>> {
    model.predict(x)
}

/// Fitted probabilities (free-function form of
/// [`FittedModel::predict_probability`]).
pub fn predict_probability(model: &FittedModel, x: ArrayView2<f64>) -> Result<Array1<f64>> {
    model.predict_probability(x)
}

/// Evenly spaced query axes spanning each covariate's knot range.
pub fn default_pdp_axes(
    model: &FittedModel,
    covariates: &[usize],
    points_per_axis: usize,
) -> Result<Vec<Vec<f64>>> {
    if points_per_axis < 2 {
        return Err(Error::InvalidConfig(
            "partial dependence needs at least 2 grid points per axis".to_string(),
        ));
    }
    let mut axes = Vec::with_capacity(covariates.len());
    for &j in covariates {
        let pos = included_position(model, j)?;
        let knots = &model.marginal_knots[pos];
        let (lo, hi) = (knots[0], *knots.last().unwrap());
        axes.push(
            (0..points_per_axis)
                .map(|i| lo + (hi - lo) * i as f64 / (points_per_axis - 1) as f64)
                .collect(),
        );
    }
    Ok(axes)
}

fn included_position(model: &FittedModel, j: usize) -> Result<usize> {
    if j >= model.n_input_columns {
        return Err(Error::DimensionMismatch(format!(
            "covariate index {j} is out of range for a model with {} input column(s)",
            model.n_input_columns
        )));
    }
    model.included.iter().position(|&i| i == j).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "covariate index {j} was excluded from the model and has no effect"
        ))
    })
}

/// Partial dependence of the fitted function on the covariates `s`: for each
/// grid point the chosen columns of the training matrix are overwritten and
/// the predictions averaged. Output is ordered row-major over `axes` with the
/// last axis fastest.
pub fn partial_dependence(
    model: &FittedModel,
    s: &[usize],
    axes: &[Vec<f64>],
    x_train: ArrayView2<f64>,
) -> Result<PdpGrid> {
    if s.is_empty() || s.len() > 2 {
        return Err(Error::UnsupportedCase(format!(
            "partial dependence supports 1 or 2 covariates, got {}",
            s.len()
        )));
    }
    if s.len() == 2 && s[0] == s[1] {
        return Err(Error::InvalidConfig(
            "partial dependence covariates must be distinct".to_string(),
        ));
    }
    if axes.len() != s.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} axis grid(s) supplied for {} covariate(s)",
            axes.len(),
            s.len()
        )));
    }
    for axis in axes {
        if axis.is_empty() || axis.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "partial dependence axes must be nonempty and finite".to_string(),
            ));
        }
    }
    let positions: Vec<usize> = s
        .iter()
        .map(|&j| included_position(model, j))
        .collect::<Result<_>>()?;
    if x_train.nrows() == 0 {
        return Err(Error::InvalidConfig(
            "partial dependence needs at least one training row".to_string(),
        ));
    }
    let x_inc = model.restrict_input(x_train)?;
    let bases = model.build_bases()?;

    let sizes: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let total: usize = sizes.iter().product();
    let mut points = Vec::with_capacity(total);
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    let mut work = x_inc.clone();
    for _ in 0..total {
        let coord: Vec<f64> = idx.iter().zip(axes).map(|(&i, axis)| axis[i]).collect();
        for (l, &pos) in positions.iter().enumerate() {
            work.column_mut(pos).fill(coord[l]);
        }
        let pred = model.predict_restricted(&bases, work.view())?;
        values.push(pred.sum() / pred.len() as f64);
        points.push(coord);
        for l in (0..axes.len()).rev() {
            idx[l] += 1;
            if idx[l] < sizes[l] {
                break;
            }
            idx[l] = 0;
        }
    }
    Ok(PdpGrid {
        covariates: s.to_vec(),
        names: positions
            .iter()
            .map(|&pos| model.covariate_names[pos].clone())
            .collect(),
        points,
        values,
    })
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct Prepared {
    names: Vec<String>,
    included: Vec<usize>,
    n_input_columns: usize,
    marginal_knots: Vec<Vec<f64>>,
    projection: Projection,
    bases: Vec<CovariateBasis>,
    defs: Vec<Vec<usize>>,
    blocks: Vec<DesignBlock>,
    x_inc: Array2<f64>,
    max_order: usize,
    warnings: Vec<String>,
}

fn validate_response(y: ArrayView1<f64>, loss: Loss) -> Result<()> {
    match loss {
        Loss::Squared => {
            if let Some(row) = y.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteResponse { row });
            }
            let first = y[0];
            if y.iter().all(|&v| v == first) {
                return Err(Error::ConstantResponse);
            }
        }
        Loss::Logistic => {
            for (row, &v) in y.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteResponse { row });
                }
                if v != 0.0 && v != 1.0 {
                    return Err(Error::NonBinaryResponse { value: v, row });
                }
            }
            let ones = y.iter().filter(|&&v| v == 1.0).count();
            if ones == 0 || ones == y.len() {
                return Err(Error::SingleClassResponse);
            }
        }
    }
    Ok(())
}

fn prepare(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    names: Option<&[String]>,
    spec: &ModelSpec,
    loss: Loss,
) -> Result<Prepared> {
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} response value(s) for {} row(s)",
            y.len(),
            n
        )));
    }
    if n < 10 {
        return Err(Error::InvalidConfig(format!(
            "need at least 10 training rows, got {n}"
        )));
    }
    if p == 0 {
        return Err(Error::NoUsableCovariates);
    }
    if !(1..=2).contains(&spec.m) {
        return Err(Error::UnsupportedOrder {
            m: spec.m,
            reason: "fitting supports differentiation order 1 or 2".to_string(),
        });
    }
    if spec.max_order == 0 || spec.max_order > 2 {
        return Err(Error::InvalidInteractionOrder {
            k: spec.max_order,
            reason: "fitting supports interaction order 1 or 2".to_string(),
        });
    }
    if spec.max_order > p {
        return Err(Error::InvalidInteractionOrder {
            k: spec.max_order,
            reason: format!("only {p} covariate(s) available"),
        });
    }
    if spec.n_knots < spec.m + 1 {
        return Err(Error::KnotBudgetTooSmall {
            n_knots: spec.n_knots,
            m: spec.m,
        });
    }
    spec.rho_grid.validate("rho")?;
    spec.lambda_grid.validate("lambda")?;
    let names: Vec<String> = match names {
        Some(given) => {
            if given.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "{} name(s) for {} column(s)",
                    given.len(),
                    p
                )));
            }
            given.to_vec()
        }
        None => (0..p).map(|j| format!("x{}", j + 1)).collect(),
    };
    for (j, name) in names.iter().enumerate() {
        if let Some(row) = x.column(j).iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData {
                name: name.clone(),
                row,
            });
        }
    }
    validate_response(y, loss)?;

    let mut warnings = Vec::new();
    let mut included = Vec::new();
    let mut marginal_knots = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let col = x.column(j).to_vec();
        match marginal_knots_from_column(&col, spec.n_knots, spec.m, name) {
            Ok(knots) => {
                included.push(j);
                marginal_knots.push(knots);
            }
            Err(Error::TooFewDistinctValues {
                name,
                distinct,
                need,
                ..
            }) => {
                warnings.push(format!(
                    "covariate '{name}' was excluded: {distinct} distinct value(s) \
                     cannot support {need} knots"
                ));
            }
            Err(other) => return Err(other),
        }
    }
    if included.is_empty() {
        return Err(Error::NoUsableCovariates);
    }
    let mut max_order = spec.max_order;
    if max_order > included.len() {
        max_order = included.len();
        warnings.push(format!(
            "interaction order reduced to {max_order}: only {} usable covariate(s)",
            included.len()
        ));
    }

    let included_names: Vec<String> = included.iter().map(|&j| names[j].clone()).collect();
    let knot_system = KnotSystem::from_marginal_knots(spec.m, marginal_knots.clone())?;
    let projection = spec.projection.resolve(included.len());
    let bases = build_psi_basis(&knot_system, &projection)?;
    let x_inc = x.select(Axis(1), &included);

    let mut defs = Vec::new();
    let mut blocks = Vec::new();
    for def in enumerate_blocks(included.len(), max_order) {
        let block = materialize_block(&bases, &def, x_inc.view())?;
        if block.is_degenerate() {
            let label = def
                .iter()
                .map(|&ji| included_names[ji].clone())
                .collect::<Vec<_>>()
                .join("*");
            warnings.push(format!(
                "design block '{label}' is constant on the training data and was dropped"
            ));
            continue;
        }
        defs.push(def);
        blocks.push(block);
    }
    if blocks.is_empty() {
        return Err(Error::NoUsableCovariates);
    }

    Ok(Prepared {
        names: included_names,
        included,
        n_input_columns: p,
        marginal_knots,
        projection,
        bases,
        defs,
        blocks,
        x_inc,
        max_order,
        warnings,
    })
}

/// Largest lasso level with any effect: the maximum over penalized columns of
/// the absolute centered-column correlation with the centered response.
fn rho_anchor(y: &Array1<f64>, blocks: &[DesignBlock]) -> f64 {
    let n = y.len() as f64;
    let ybar = y.sum() / n;
    let yc = y.mapv(|v| v - ybar);
    let mut anchor = 0.0f64;
    for block in blocks {
        for (j, &d) in block.degrees.iter().enumerate() {
            if d == 0 {
                continue;
            }
            anchor = anchor.max((block.centered.column(j).dot(&yc) / n).abs());
        }
    }
    anchor
}

/// Smallest block-norm level that keeps every block at zero on the first
/// update cycle from the zero state (and hence forever), evaluated at `rho`.
fn lambda_anchor(
    y: &Array1<f64>,
    blocks: &[DesignBlock],
    max_order: usize,
    rho: f64,
    loss: Loss,
    options: &FitOptions,
) -> Result<f64> {
    let n = y.len() as f64;
    let ybar = y.sum() / n;
    let (target, scale) = match loss {
        Loss::Squared => (y.mapv(|v| v - ybar), 1.0),
        Loss::Logistic => (y.mapv(|v| 4.0 * (v - ybar)), 4.0),
    };
    let pen = PenaltyConfig::tied(max_order, rho, 0.0);
    let mut anchor = 0.0f64;
    for block in blocks {
        let weights: Vec<f64> = block
            .degrees
            .iter()
            .map(|&d| scale * pen.column_weight(d))
            .collect();
        let beta = solve_lasso_block(&target, block, &weights, None, options)?;
        anchor = anchor.max(empirical_norm(&block.centered.dot(&beta)) / scale);
    }
    Ok(anchor)
}

#[derive(Clone, Debug)]
struct PathRow {
    lambda: f64,
    criterion: f64,
    active: usize,
    nonzero: usize,
    converged: bool,
    failure: Option<String>,
}

/// Fit the warm-started path over `lambda_grid` (descending) at fixed `rho`,
/// scoring each state. A solver failure poisons only its own grid point.
#[allow(clippy::too_many_arguments)]
fn lambda_path<F>(
    y: &Array1<f64>,
    blocks: &[DesignBlock],
    max_order: usize,
    rho: f64,
    lambda_grid: &[f64],
    loss: Loss,
    options: &FitOptions,
    mut score: F,
) -> Vec<PathRow>
where
    F: FnMut(&FitState) -> f64,
{
    let mut rows = Vec::with_capacity(lambda_grid.len());
    let mut warm: Option<FitState> = None;
    for &lambda in lambda_grid {
        let pen = PenaltyConfig::tied(max_order, rho, lambda);
        let result = match loss {
            Loss::Squared => {
                bdt_fit_from(y, blocks, &pen, options, warm.as_ref().map(|s| &s.beta[..]))
            }
            Loss::Logistic => bdt_logit_fit_from(
                y,
                blocks,
                &pen,
                options,
                warm.as_ref().map(|s| (s.intercept, &s.beta[..])),
            ),
        };
        match result {
            Ok(state) => {
                rows.push(PathRow {
                    lambda,
                    criterion: score(&state),
                    active: state.active_blocks().len(),
                    nonzero: state
                        .beta
                        .iter()
                        .map(|b| b.iter().filter(|&&v| v != 0.0).count())
                        .sum(),
                    converged: state.converged,
                    failure: None,
                });
                warm = Some(state);
            }
            Err(e) => {
                rows.push(PathRow {
                    lambda,
                    criterion: f64::INFINITY,
                    active: 0,
                    nonzero: 0,
                    converged: false,
                    failure: Some(e.to_string()),
                });
                warm = None;
            }
        }
    }
    rows
}

/// Linear predictor on precomputed raw block designs, using the training
/// column means stored in `blocks`.
fn predictor_on_raws(
    intercept: f64,
    beta: &[Array1<f64>],
    blocks: &[DesignBlock],
    raws: &[Array2<f64>],
    n_rows: usize,
) -> Array1<f64> {
    let mut eta = Array1::from_elem(n_rows, intercept);
    for (k, raw) in raws.iter().enumerate() {
        if beta[k].iter().all(|&b| b == 0.0) {
            continue;
        }
        let shift: f64 = blocks[k]
            .means
            .iter()
            .zip(beta[k].iter())
            .map(|(m, b)| m * b)
            .sum();
        let contrib = raw.dot(&beta[k]);
        for (e, c) in eta.iter_mut().zip(contrib.iter()) {
            *e += c - shift;
        }
    }
    eta
}

fn held_out_loss_sum(eta: &Array1<f64>, y: &Array1<f64>, loss: Loss) -> f64 {
    match loss {
        Loss::Squared => eta
            .iter()
            .zip(y.iter())
            .map(|(e, v)| (v - e) * (v - e))
            .sum(),
        Loss::Logistic => eta
            .iter()
            .zip(y.iter())
            .map(|(e, v)| log1p_exp(*e) - v * e)
            .sum(),
    }
}

#[derive(Clone, Debug)]
struct Candidate {
    rho: f64,
    lambda: f64,
    criterion: f64,
    active: usize,
    nonzero: usize,
    converged: bool,
}

struct FoldData {
    blocks: Vec<DesignBlock>,
    y_train: Array1<f64>,
    raws_test: Vec<Array2<f64>>,
    y_test: Array1<f64>,
}

fn make_folds(
    prep: &Prepared,
    y: &Array1<f64>,
    k: usize,
    seed: u64,
    loss: Loss,
) -> Result<Vec<FoldData>> {
    let n = y.len();
    if k < 2 || k > n {
        return Err(Error::InvalidConfig(format!(
            "cross-validation folds must lie in [2, {n}], got {k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let lo = f * n / k;
        let hi = (f + 1) * n / k;
        let test: Vec<usize> = order[lo..hi].to_vec();
        let train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
        let y_train = Array1::from_iter(train.iter().map(|&i| y[i]));
        if loss == Loss::Logistic {
            let ones = y_train.iter().filter(|&&v| v == 1.0).count();
            if ones == 0 || ones == y_train.len() {
                return Err(Error::InvalidConfig(format!(
                    "fold {} leaves a single-class training set; use fewer folds",
                    f + 1
                )));
            }
        }
        let x_train = prep.x_inc.select(Axis(0), &train);
        let x_test = prep.x_inc.select(Axis(0), &test);
        let mut blocks = Vec::with_capacity(prep.defs.len());
        let mut raws_test = Vec::with_capacity(prep.defs.len());
        for def in &prep.defs {
            blocks.push(materialize_block(&prep.bases, def, x_train.view())?);
            raws_test.push(evaluate_block_raw(&prep.bases, def, x_test.view())?);
        }
        folds.push(FoldData {
            blocks,
            y_train,
            raws_test,
            y_test: Array1::from_iter(test.iter().map(|&i| y[i])),
        });
    }
    Ok(folds)
}

/// Fit a doubly penalized additive model.
///
/// `names` (if given) labels the columns of `x` for error messages, warnings,
/// and reports; defaults to `x1..xp`.
pub fn fit(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    names: Option<&[String]>,
    spec: &ModelSpec,
    loss: Loss,
    tuning: TuningInput,
) -> Result<FittedModel> {
    let prep = prepare(x, y, names, spec, loss)?;
    let options = spec
        .options
        .clone()
        .unwrap_or_else(|| loss.default_options());
    let y_owned = y.to_owned();
    let mut warnings = prep.warnings.clone();
    let fixed_requested = matches!(tuning, TuningInput::Fixed { .. });

    // Resolve the penalty pair, either directly or by scoring a grid.
    let (selection, tune_table) = match tuning {
        TuningInput::Fixed { rho, lambda } => {
            if !(rho.is_finite() && rho >= 0.0 && lambda.is_finite() && lambda >= 0.0) {
                return Err(Error::InvalidConfig(
                    "fixed penalty levels must be finite and nonnegative".to_string(),
                ));
            }
            ((rho, lambda), Vec::new())
        }
        TuningInput::Validation { x: xv, y: yv } => {
            if xv.nrows() != yv.len() {
                return Err(Error::DimensionMismatch(format!(
                    "validation data has {} row(s) but {} response value(s)",
                    xv.nrows(),
                    yv.len()
                )));
            }
            if xv.nrows() == 0 {
                return Err(Error::InvalidConfig(
                    "validation data must have at least one row".to_string(),
                ));
            }
            validate_finite_matrix(xv, &prep, x.ncols())?;
            if let Loss::Logistic = loss {
                for (row, &v) in yv.iter().enumerate() {
                    if v != 0.0 && v != 1.0 {
                        return Err(Error::NonBinaryResponse { value: v, row });
                    }
                }
            } else if let Some(row) = yv.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteResponse { row });
            }
            let xv_inc = xv.select(Axis(1), &prep.included);
            let raws: Vec<Array2<f64>> = prep
                .defs
                .iter()
                .map(|def| evaluate_block_raw(&prep.bases, def, xv_inc.view()))
                .collect::<Result<_>>()?;
            let yv_owned = yv.to_owned();
            let nv = yv_owned.len();

            let (rho_grid, lambda_grid) = resolve_grids(spec, &prep, &y_owned, loss, &options)?;
            let per_rho: Vec<Vec<PathRow>> = rho_grid
                .par_iter()
                .map(|&rho| {
                    lambda_path(
                        &y_owned,
                        &prep.blocks,
                        prep.max_order,
                        rho,
                        &lambda_grid,
                        loss,
                        &options,
                        |state| {
                            let eta = predictor_on_raws(
                                state.intercept,
                                &state.beta,
                                &prep.blocks,
                                &raws,
                                nv,
                            );
                            held_out_loss_sum(&eta, &yv_owned, loss) / nv as f64
                        },
                    )
                })
                .collect();
            let mut candidates = Vec::new();
            for (ri, rows) in per_rho.iter().enumerate() {
                for row in rows {
                    if let Some(msg) = &row.failure {
                        warnings.push(format!(
                            "tuning point (rho {:.6e}, lambda {:.6e}) failed: {msg}",
                            rho_grid[ri], row.lambda
                        ));
                        continue;
                    }
                    candidates.push(Candidate {
                        rho: rho_grid[ri],
                        lambda: row.lambda,
                        criterion: row.criterion,
                        active: row.active,
                        nonzero: row.nonzero,
                        converged: row.converged,
                    });
                }
            }
            select_candidate(candidates)?
        }
        TuningInput::KFold(k) => {
            let folds = make_folds(&prep, &y_owned, k, spec.seed, loss)?;
            let (rho_grid, lambda_grid) = resolve_grids(spec, &prep, &y_owned, loss, &options)?;
            let work: Vec<(usize, usize)> = (0..folds.len())
                .flat_map(|f| (0..rho_grid.len()).map(move |r| (f, r)))
                .collect();
            let results: Vec<Vec<PathRow>> = work
                .par_iter()
                .map(|&(f, r)| {
                    let fold = &folds[f];
                    let n_test = fold.y_test.len();
                    lambda_path(
                        &fold.y_train,
                        &fold.blocks,
                        prep.max_order,
                        rho_grid[r],
                        &lambda_grid,
                        loss,
                        &options,
                        |state| {
                            let eta = predictor_on_raws(
                                state.intercept,
                                &state.beta,
                                &fold.blocks,
                                &fold.raws_test,
                                n_test,
                            );
                            held_out_loss_sum(&eta, &fold.y_test, loss)
                        },
                    )
                })
                .collect();
            let n_total = y_owned.len() as f64;
            let mut candidates = Vec::new();
            for (r, &rho_r) in rho_grid.iter().enumerate() {
                for l in 0..lambda_grid.len() {
                    let mut sum = 0.0;
                    let mut active = 0usize;
                    let mut nonzero = 0usize;
                    let mut converged = true;
                    let mut failed = false;
                    for (w, rows) in work.iter().zip(&results) {
                        if w.1 != r {
                            continue;
                        }
                        let row = &rows[l];
                        if let Some(msg) = &row.failure {
                            warnings.push(format!(
                                "tuning point (rho {:.6e}, lambda {:.6e}) failed in a fold: {msg}",
                                rho_r, row.lambda
                            ));
                            failed = true;
                            break;
                        }
                        sum += row.criterion;
                        active += row.active;
                        nonzero += row.nonzero;
                        converged &= row.converged;
                    }
                    if failed {
                        continue;
                    }
                    let k_f = folds.len() as f64;
                    candidates.push(Candidate {
                        rho: rho_r,
                        lambda: lambda_grid[l],
                        criterion: sum / n_total,
                        active: ((active as f64 / k_f).round()) as usize,
                        nonzero: ((nonzero as f64 / k_f).round()) as usize,
                        converged,
                    });
                }
            }
            select_candidate(candidates)?
        }
    };

    let (rho_star, lambda_star) = selection;
    let pen = PenaltyConfig::tied(prep.max_order, rho_star, lambda_star);
    let state = match loss {
        Loss::Squared => bdt_fit(&y_owned, &prep.blocks, &pen, &options)?,
        Loss::Logistic => bdt_logit_fit(&y_owned, &prep.blocks, &pen, &options)?,
    };
    warnings.extend(state.warnings.iter().cloned());

    let mut tune_table = tune_table;
    if tune_table.is_empty() && fixed_requested {
        tune_table.push(TuneRow {
            rho: rho_star,
            lambda: lambda_star,
            criterion: state.objective(),
            active_blocks: state.active_blocks().len(),
            nonzero_coefficients: state
                .beta
                .iter()
                .map(|b| b.iter().filter(|&&v| v != 0.0).count())
                .sum(),
            converged: state.converged,
        });
    }

    let mut blocks_out = Vec::new();
    for (k, def) in prep.defs.iter().enumerate() {
        if state.beta[k].iter().any(|&v| v != 0.0) {
            blocks_out.push(BlockCoefficients {
                covariates: def.clone(),
                means: prep.blocks[k].means.clone(),
                beta: state.beta[k].to_vec(),
            });
        }
    }

    Ok(FittedModel {
        loss,
        m: spec.m,
        max_order: prep.max_order,
        projection: prep.projection,
        covariate_names: prep.names,
        included: prep.included,
        n_input_columns: prep.n_input_columns,
        marginal_knots: prep.marginal_knots,
        intercept: state.intercept,
        blocks: blocks_out,
        rho: rho_star,
        lambda: lambda_star,
        objective: state.objective(),
        warnings,
        tune_table,
        n_training_rows: y_owned.len(),
    })
}

fn validate_finite_matrix(xv: ArrayView2<f64>, prep: &Prepared, p: usize) -> Result<()> {
    if xv.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "validation data has {} column(s), training data has {p}",
            xv.ncols()
        )));
    }
    for (pos, &j) in prep.included.iter().enumerate() {
        if let Some(row) = xv.column(j).iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData {
                name: prep.names[pos].clone(),
                row,
            });
        }
    }
    Ok(())
}

fn resolve_grids(
    spec: &ModelSpec,
    prep: &Prepared,
    y: &Array1<f64>,
    loss: Loss,
    options: &FitOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let rho_grid = match &spec.rho_grid {
        GridSpec::Explicit(_) => spec.rho_grid.resolve(f64::NAN, "rho")?,
        GridSpec::Auto { .. } => {
            let anchor = rho_anchor(y, &prep.blocks);
            spec.rho_grid.resolve(anchor, "rho")?
        }
    };
    let lambda_grid = match &spec.lambda_grid {
        GridSpec::Explicit(_) => spec.lambda_grid.resolve(f64::NAN, "lambda")?,
        GridSpec::Auto { .. } => {
            let rho_mid = rho_grid[rho_grid.len() / 2];
            let anchor = lambda_anchor(y, &prep.blocks, prep.max_order, rho_mid, loss, options)?;
            spec.lambda_grid.resolve(anchor, "lambda")?
        }
    };
    Ok((rho_grid, lambda_grid))
}

/// Pick the best candidate (smallest criterion; ties prefer stronger
/// penalties) and return it with the table sorted best-first.
fn select_candidate(mut candidates: Vec<Candidate>) -> Result<((f64, f64), Vec<TuneRow>)> {
    candidates.retain(|c| c.criterion.is_finite());
    if candidates.is_empty() {
        return Err(Error::InvalidConfig(
            "tuning failed at every grid point".to_string(),
        ));
    }
    candidates.sort_by(|a, b| {
        a.criterion
            .total_cmp(&b.criterion)
            .then(b.lambda.total_cmp(&a.lambda))
            .then(b.rho.total_cmp(&a.rho))
    });
    let best = (candidates[0].rho, candidates[0].lambda);
    let table = candidates
        .into_iter()
        .map(|c| TuneRow {
            rho: c.rho,
            lambda: c.lambda,
            criterion: c.criterion,
            active_blocks: c.active,
            nonzero_coefficients: c.nonzero,
            converged: c.converged,
        })
        .collect();
    Ok((best, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn toy_data(n: usize, p: usize, seed: u64) -> (Array2<f64>, Array1<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>());
        let y = Array1::from_shape_fn(n, |i| {
            let z = x[(i, 0)];
            let w = x[(i, 1.min(p - 1))];
            let noise: f64 = StandardNormal.sample(&mut rng);
            (2.0 * z - 1.0) + (2.0 * w - 1.0) * (2.0 * w - 1.0) + 0.05 * noise
        });
        (x, y)
    }

    fn small_spec() -> ModelSpec {
        ModelSpec {
            n_knots: 5,
            ..ModelSpec::default()
        }
    }

    fn fixed(rho: f64, lambda: f64) -> TuningInput<'static> {
        TuningInput::Fixed { rho, lambda }
    }

    /// Recompute the training objective of a fitted model from scratch.
    fn recompute_objective(model: &FittedModel, x: ArrayView2<f64>, y: ArrayView1<f64>) -> f64 {
        let x_inc = x.select(Axis(1), &model.included);
        let knots = KnotSystem::from_marginal_knots(model.m, model.marginal_knots.clone()).unwrap();
        let bases = build_psi_basis(&knots, &model.projection).unwrap();
        let pen = PenaltyConfig::tied(model.max_order, model.rho, model.lambda);
        let n = y.len() as f64;
        let mut eta = Array1::from_elem(y.len(), model.intercept);
        let mut penalty = 0.0;
        for bc in &model.blocks {
            let block = materialize_block(&bases, &bc.covariates, x_inc.view()).unwrap();
            let beta = Array1::from_vec(bc.beta.clone());
            let fitted = block.centered.dot(&beta);
            eta += &fitted;
            for (j, &b) in beta.iter().enumerate() {
                penalty += pen.column_weight(block.degrees[j]) * b.abs();
            }
            penalty += pen.block_lambda(bc.covariates.len()) * (fitted.dot(&fitted) / n).sqrt();
        }
        let data_term = match model.loss {
            Loss::Squared => {
                let r = &y.to_owned() - &eta;
                0.5 * r.dot(&r) / n
            }
            Loss::Logistic => {
                eta.iter()
                    .zip(y.iter())
                    .map(|(e, v)| log1p_exp(*e) - v * e)
                    .sum::<f64>()
                    / n
            }
        };
        data_term + penalty
    }

    #[test]
    fn grid_spec_auto_resolves_log_spaced_descending() {
        let grid = GridSpec::Auto {
            points: 5,
            min_ratio: 0.01,
        }
        .resolve(2.0, "rho")
        .unwrap();
        assert_eq!(grid.len(), 5);
        assert_abs_diff_eq!(grid[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(grid[4], 0.02, epsilon = 1e-12);
        for w in grid.windows(2) {
            assert!(w[0] > w[1]);
            // log spacing: constant ratio
            assert_abs_diff_eq!(w[1] / w[0], 0.01f64.powf(0.25), epsilon = 1e-12);
        }
        assert_eq!(
            GridSpec::Auto {
                points: 1,
                min_ratio: 0.5
            }
            .resolve(3.0, "rho")
            .unwrap(),
            vec![3.0]
        );
    }

    #[test]
    fn grid_spec_explicit_sorts_and_dedups() {
        let grid = GridSpec::Explicit(vec![0.1, 0.3, 0.1, 0.2])
            .resolve(f64::NAN, "lambda")
            .unwrap();
        assert_eq!(grid, vec![0.3, 0.2, 0.1]);
    }

    #[test]
    fn grid_spec_rejects_bad_inputs() {
        assert!(GridSpec::Explicit(vec![]).validate("rho").is_err());
        assert!(GridSpec::Explicit(vec![-0.1]).validate("rho").is_err());
        assert!(GridSpec::Auto {
            points: 0,
            min_ratio: 0.1
        }
        .validate("rho")
        .is_err());
        assert!(GridSpec::Auto {
            points: 4,
            min_ratio: 1.5
        }
        .validate("rho")
        .is_err());
        // Auto grid with an unusable anchor is a config error.
        let err = GridSpec::Auto {
            points: 4,
            min_ratio: 0.1,
        }
        .resolve(0.0, "rho")
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn fit_rejects_bad_shapes_and_configs() {
        let (x, y) = toy_data(40, 2, 1);
        let spec = small_spec();

        let small = x.slice(ndarray::s![..8, ..]);
        let ys = y.slice(ndarray::s![..8]);
        assert!(matches!(
            fit(small, ys, None, &spec, Loss::Squared, fixed(0.1, 0.1)),
            Err(Error::InvalidConfig(_))
        ));

        let yl = y.slice(ndarray::s![..30]);
        assert!(matches!(
            fit(x.view(), yl, None, &spec, Loss::Squared, fixed(0.1, 0.1)),
            Err(Error::DimensionMismatch(_))
        ));

        let names = vec!["a".to_string()];
        assert!(matches!(
            fit(
                x.view(),
                y.view(),
                Some(&names),
                &spec,
                Loss::Squared,
                fixed(0.1, 0.1)
            ),
            Err(Error::DimensionMismatch(_))
        ));

        let mut bad = x.clone();
        bad[(3, 1)] = f64::NAN;
        let err = fit(
            bad.view(),
            y.view(),
            None,
            &spec,
            Loss::Squared,
            fixed(0.1, 0.1),
        )
        .unwrap_err();
        match err {
            Error::NonFiniteData { name, row } => {
                assert_eq!(name, "x2");
                assert_eq!(row, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }

        let flat = Array1::from_elem(40, 2.5);
        assert!(matches!(
            fit(
                x.view(),
                flat.view(),
                None,
                &spec,
                Loss::Squared,
                fixed(0.1, 0.1)
            ),
            Err(Error::ConstantResponse)
        ));

        let mut spec_m3 = small_spec();
        spec_m3.m = 3;
        assert!(matches!(
            fit(
                x.view(),
                y.view(),
                None,
                &spec_m3,
                Loss::Squared,
                fixed(0.1, 0.1)
            ),
            Err(Error::UnsupportedOrder { m: 3, .. })
        ));

        let mut spec_k3 = small_spec();
        spec_k3.max_order = 3;
        assert!(matches!(
            fit(
                x.view(),
                y.view(),
                None,
                &spec_k3,
                Loss::Squared,
                fixed(0.1, 0.1)
            ),
            Err(Error::InvalidInteractionOrder { k: 3, .. })
        ));

        let one_col = x.slice(ndarray::s![.., ..1]);
        let mut spec_k2 = small_spec();
        spec_k2.max_order = 2;
        assert!(matches!(
            fit(
                one_col,
                y.view(),
                None,
                &spec_k2,
                Loss::Squared,
                fixed(0.1, 0.1)
            ),
            Err(Error::InvalidInteractionOrder { k: 2, .. })
        ));

        let mut spec_knots = small_spec();
        spec_knots.n_knots = 2;
        assert!(matches!(
            fit(
                x.view(),
                y.view(),
                None,
                &spec_knots,
                Loss::Squared,
                fixed(0.1, 0.1)
            ),
            Err(Error::KnotBudgetTooSmall { n_knots: 2, m: 2 })
        ));
    }

    #[test]
    fn fit_rejects_bad_binary_response() {
        let (x, _) = toy_data(20, 2, 2);
        let spec = small_spec();
        let mut y = Array1::zeros(20);
        y[0] = 0.5;
        assert!(matches!(
            fit(
                x.view(),
                y.view(),
                None,
                &spec,
                Loss::Logistic,
                fixed(0.1, 0.1)
            ),
            Err(Error::NonBinaryResponse { row: 0, .. })
        ));
        let zeros = Array1::zeros(20);
        assert!(matches!(
            fit(
                x.view(),
                zeros.view(),
                None,
                &spec,
                Loss::Logistic,
                fixed(0.1, 0.1)
            ),
            Err(Error::SingleClassResponse)
        ));
        let mut nan_y = Array1::zeros(20);
        nan_y[1] = 1.0;
        nan_y[5] = f64::NAN;
        assert!(matches!(
            fit(
                x.view(),
                nan_y.view(),
                None,
                &spec,
                Loss::Logistic,
                fixed(0.1, 0.1)
            ),
            Err(Error::NonFiniteResponse { row: 5 })
        ));
    }

    #[test]
    fn constant_covariate_is_excluded_with_warning() {
        let (mut x, y) = toy_data(40, 3, 3);
        x.column_mut(2).fill(7.0);
        let names: Vec<String> = ["age", "bmi", "flag"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let model = fit(
            x.view(),
            y.view(),
            Some(&names),
            &small_spec(),
            Loss::Squared,
            fixed(0.01, 0.001),
        )
        .unwrap();
        assert_eq!(model.included, vec![0, 1]);
        assert_eq!(model.covariate_names, vec!["age", "bmi"]);
        assert_eq!(model.n_input_columns, 3);
        assert!(model.warnings.iter().any(|w| w.contains("flag")));
        // Prediction still takes the full three-column matrix, and the
        // excluded column may hold anything (even NaN).
        let mut xq = x.slice(ndarray::s![..5, ..]).to_owned();
        xq[(0, 2)] = f64::NAN;
        assert!(model.predict(xq.view()).is_ok());
        assert!(model.predict(x.slice(ndarray::s![.., ..2])).is_err());
    }

    #[test]
    fn interaction_order_clamps_to_usable_covariates() {
        let (mut x, y) = toy_data(30, 2, 4);
        x.column_mut(1).fill(0.0);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Squared,
            fixed(0.01, 0.001),
        )
        .unwrap();
        assert_eq!(model.max_order, 1);
        assert!(model
            .warnings
            .iter()
            .any(|w| w.contains("interaction order reduced")));
    }

    #[test]
    fn components_sum_to_prediction_minus_intercept() {
        let (x, y) = toy_data(60, 3, 5);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Squared,
            fixed(0.002, 0.002),
        )
        .unwrap();
        assert!(!model.blocks.is_empty());
        // Query points both inside and beyond the knot range.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let xq = Array2::from_shape_fn((1000, 3), |_| rng.random::<f64>() * 1.6 - 0.3);
        let pred = model.predict(xq.view()).unwrap();
        let comps = model.anova_components(xq.view()).unwrap();
        assert_eq!(comps.len(), model.blocks.len());
        for i in 0..1000 {
            let total: f64 = comps.iter().map(|c| c.values[i]).sum();
            assert_abs_diff_eq!(total, pred[i] - model.intercept, epsilon = 1e-10);
        }
    }

    #[test]
    fn stored_objective_matches_recomputation_squared() {
        let (x, y) = toy_data(50, 2, 6);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Squared,
            fixed(0.005, 0.003),
        )
        .unwrap();
        let recomputed = recompute_objective(&model, x.view(), y.view());
        assert_abs_diff_eq!(recomputed, model.objective, epsilon = 1e-8);
    }

    #[test]
    fn stored_objective_matches_recomputation_logistic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = Array2::from_shape_fn((80, 2), |_| rng.random::<f64>());
        let y = Array1::from_shape_fn(80, |i| {
            let p = expit(3.0 * x[(i, 0)] - 1.5);
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        });
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Logistic,
            fixed(0.01, 0.005),
        )
        .unwrap();
        let recomputed = recompute_objective(&model, x.view(), y.view());
        assert_abs_diff_eq!(recomputed, model.objective, epsilon = 1e-8);
        let probs = model.predict_probability(x.view()).unwrap();
        assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn probability_prediction_requires_logistic_loss() {
        let (x, y) = toy_data(30, 2, 8);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Squared,
            fixed(0.01, 0.01),
        )
        .unwrap();
        assert!(matches!(
            model.predict_probability(x.view()),
            Err(Error::UnsupportedCase(_))
        ));
    }

    #[test]
    fn validation_tuning_scores_full_grid_sorted() {
        let (x, y) = toy_data(60, 2, 9);
        let (xv, yv) = toy_data(40, 2, 10);
        let mut spec = small_spec();
        spec.rho_grid = GridSpec::Explicit(vec![0.1, 0.02, 0.004]);
        spec.lambda_grid = GridSpec::Explicit(vec![0.05, 0.01, 0.002]);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &spec,
            Loss::Squared,
            TuningInput::Validation {
                x: xv.view(),
                y: yv.view(),
            },
        )
        .unwrap();
        assert_eq!(model.tune_table.len(), 9);
        for w in model.tune_table.windows(2) {
            assert!(w[0].criterion <= w[1].criterion);
        }
        assert_eq!(model.rho, model.tune_table[0].rho);
        assert_eq!(model.lambda, model.tune_table[0].lambda);
        // The selected model should beat predicting the training mean.
        let pred = model.predict(xv.view()).unwrap();
        let mse: f64 = pred
            .iter()
            .zip(yv.iter())
            .map(|(p, v)| (p - v) * (p - v))
            .sum::<f64>()
            / yv.len() as f64;
        let ybar = yv.sum() / yv.len() as f64;
        let var: f64 = yv.iter().map(|v| (v - ybar) * (v - ybar)).sum::<f64>() / yv.len() as f64;
        assert!(mse < var, "mse {mse} should beat variance {var}");
    }

    #[test]
    fn automatic_lambda_anchor_zeroes_every_block_at_mid_rho() {
        let (x, y) = toy_data(60, 2, 11);
        let (xv, yv) = toy_data(30, 2, 12);
        let mut spec = small_spec();
        spec.rho_grid = GridSpec::Auto {
            points: 5,
            min_ratio: 0.02,
        };
        spec.lambda_grid = GridSpec::Auto {
            points: 5,
            min_ratio: 0.02,
        };
        let model = fit(
            x.view(),
            y.view(),
            None,
            &spec,
            Loss::Squared,
            TuningInput::Validation {
                x: xv.view(),
                y: yv.view(),
            },
        )
        .unwrap();
        let mut rhos: Vec<f64> = model.tune_table.iter().map(|r| r.rho).collect();
        rhos.sort_by(|a, b| b.total_cmp(a));
        rhos.dedup();
        assert_eq!(rhos.len(), 5);
        let rho_mid = rhos[2];
        let lambda_max = model
            .tune_table
            .iter()
            .map(|r| r.lambda)
            .fold(f64::NEG_INFINITY, f64::max);
        let row = model
            .tune_table
            .iter()
            .find(|r| r.rho == rho_mid && r.lambda == lambda_max)
            .expect("anchor row present");
        assert_eq!(row.active_blocks, 0);
        assert_eq!(row.nonzero_coefficients, 0);
    }

    #[test]
    fn serialization_round_trips_bit_for_bit() {
        let (x, y) = toy_data(50, 2, 13);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Squared,
            fixed(0.004, 0.002),
        )
        .unwrap();
        let json = model.to_json();
        let back = FittedModel::from_json(&json).unwrap();
        assert_eq!(back.loss, model.loss);
        assert_eq!(back.m, model.m);
        assert_eq!(back.max_order, model.max_order);
        assert_eq!(back.projection, model.projection);
        assert_eq!(back.covariate_names, model.covariate_names);
        assert_eq!(back.included, model.included);
        assert_eq!(back.n_input_columns, model.n_input_columns);
        assert_eq!(back.n_training_rows, model.n_training_rows);
        assert_eq!(back.intercept.to_bits(), model.intercept.to_bits());
        assert_eq!(back.rho.to_bits(), model.rho.to_bits());
        assert_eq!(back.lambda.to_bits(), model.lambda.to_bits());
        assert_eq!(back.objective.to_bits(), model.objective.to_bits());
        assert_eq!(back.marginal_knots.len(), model.marginal_knots.len());
        for (a, b) in back.marginal_knots.iter().zip(&model.marginal_knots) {
            for (u, v) in a.iter().zip(b) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
        }
        assert_eq!(back.blocks.len(), model.blocks.len());
        for (a, b) in back.blocks.iter().zip(&model.blocks) {
            assert_eq!(a.covariates, b.covariates);
            for (u, v) in a.means.iter().zip(&b.means) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
            for (u, v) in a.beta.iter().zip(&b.beta) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
        }
        // Re-serializing the parsed model reproduces the document exactly,
        // and predictions agree bitwise.
        assert_eq!(back.to_json(), json);
        let p1 = model.predict(x.view()).unwrap();
        let p2 = back.predict(x.view()).unwrap();
        for (a, b) in p1.iter().zip(p2.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn from_json_rejects_malformed_documents() {
        assert!(matches!(
            FittedModel::from_json("not json"),
            Err(Error::ModelDocument(_))
        ));
        let (x, y) = toy_data(30, 2, 14);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Squared,
            fixed(0.01, 0.01),
        )
        .unwrap();
        let json = model.to_json();
        let bumped = json.replacen("\"format_version\": 1", "\"format_version\": 99", 1);
        assert!(matches!(
            FittedModel::from_json(&bumped),
            Err(Error::ModelDocument(_))
        ));
    }

    /// Corrupted documents must be rejected at parse time, never panic later
    /// inside prediction.
    #[test]
    fn from_json_rejects_inconsistent_documents() {
        let (x, y) = toy_data(30, 2, 14);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Squared,
            fixed(0.0005, 0.0005),
        )
        .unwrap();
        assert!(!model.blocks.is_empty(), "fixture needs an active block");
        let corrupt = |edit: fn(&mut FittedModel)| {
            let mut m = model.clone();
            edit(&mut m);
            FittedModel::from_json(&m.to_json())
        };
        // An included column beyond the declared input width would make
        // column selection panic at predict time.
        assert!(matches!(
            corrupt(|m| m.included[0] = m.n_input_columns),
            Err(Error::ModelDocument(_))
        ));
        assert!(matches!(
            corrupt(|m| m.included[1] = m.included[0]),
            Err(Error::ModelDocument(_))
        ));
        // A coefficient vector that disagrees with the block's column layout
        // would make the prediction dot product panic.
        assert!(matches!(
            corrupt(|m| {
                m.blocks[0].beta.push(1.0);
                m.blocks[0].means.push(0.0);
            }),
            Err(Error::ModelDocument(_))
        ));
        assert!(matches!(
            corrupt(|m| m.blocks[0].beta.push(1.0)),
            Err(Error::ModelDocument(_))
        ));
        // Knots must stay strictly increasing.
        assert!(matches!(
            corrupt(|m| m.marginal_knots[0][0] = *m.marginal_knots[0].last().unwrap()),
            Err(Error::ModelDocument(_))
        ));
        assert!(matches!(corrupt(|m| m.m = 3), Err(Error::ModelDocument(_))));
    }

    #[test]
    fn partial_dependence_matches_brute_force_average() {
        let (x, y) = toy_data(40, 2, 15);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Squared,
            fixed(0.002, 0.001),
        )
        .unwrap();
        let axis0: Vec<f64> = vec![0.1, 0.4, 0.9];
        let axis1: Vec<f64> = vec![0.2, 0.8];
        let grid =
            partial_dependence(&model, &[0, 1], &[axis0.clone(), axis1.clone()], x.view()).unwrap();
        assert_eq!(grid.values.len(), 6);
        assert_eq!(grid.points.len(), 6);
        // Row-major with the last axis fastest.
        let mut k = 0;
        for &a in &axis0 {
            for &b in &axis1 {
                assert_eq!(grid.points[k], vec![a, b]);
                let mut xq = x.clone();
                xq.column_mut(0).fill(a);
                xq.column_mut(1).fill(b);
                let pred = model.predict(xq.view()).unwrap();
                let mean = pred.sum() / pred.len() as f64;
                assert_abs_diff_eq!(grid.values[k], mean, epsilon = 1e-12);
                k += 1;
            }
        }
        // Single-covariate grids work the same way.
        let g1 = partial_dependence(&model, &[1], std::slice::from_ref(&axis1), x.view()).unwrap();
        assert_eq!(g1.values.len(), 2);
        let mut xq = x.clone();
        xq.column_mut(1).fill(axis1[0]);
        let pred = model.predict(xq.view()).unwrap();
        assert_abs_diff_eq!(
            g1.values[0],
            pred.sum() / pred.len() as f64,
            epsilon = 1e-12
        );
    }

    #[test]
    fn partial_dependence_validates_inputs() {
        let (x, y) = toy_data(30, 3, 16);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Squared,
            fixed(0.01, 0.01),
        )
        .unwrap();
        let axis = vec![0.5];
        assert!(matches!(
            partial_dependence(&model, &[], &[], x.view()),
            Err(Error::UnsupportedCase(_))
        ));
        assert!(matches!(
            partial_dependence(
                &model,
                &[0, 1, 2],
                &[axis.clone(), axis.clone(), axis.clone()],
                x.view()
            ),
            Err(Error::UnsupportedCase(_))
        ));
        assert!(matches!(
            partial_dependence(&model, &[0, 0], &[axis.clone(), axis.clone()], x.view()),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            partial_dependence(&model, &[0], &[axis.clone(), axis.clone()], x.view()),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            partial_dependence(&model, &[0], &[vec![f64::NAN]], x.view()),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            partial_dependence(&model, &[7], std::slice::from_ref(&axis), x.view()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn partial_dependence_of_single_block_model_is_its_component() {
        // A model whose only block involves covariate 0 has a partial
        // dependence on covariate 0 equal to intercept + component, because
        // the average over training rows leaves nothing else behind.
        let (x, y) = toy_data(40, 2, 17);
        let mut spec = small_spec();
        spec.max_order = 1;
        let model = fit(
            x.view(),
            y.view(),
            None,
            &spec,
            Loss::Squared,
            fixed(0.002, 0.001),
        )
        .unwrap();
        let only_first: Vec<_> = model
            .blocks
            .iter()
            .filter(|b| b.covariates == vec![0])
            .collect();
        assert_eq!(
            only_first.len(),
            1,
            "expected covariate 1 block to be active"
        );
        // Build a stripped model that keeps just that block.
        let mut stripped = model.clone();
        stripped.blocks = vec![only_first[0].clone()];
        let axis: Vec<f64> = vec![0.05, 0.3, 0.65, 0.95];
        let grid =
            partial_dependence(&stripped, &[0], std::slice::from_ref(&axis), x.view()).unwrap();
        let mut xq = Array2::zeros((axis.len(), 2));
        for (i, &a) in axis.iter().enumerate() {
            xq[(i, 0)] = a;
            xq[(i, 1)] = 0.42;
        }
        let comps = stripped.anova_components(xq.view()).unwrap();
        for (i, &v) in grid.values.iter().enumerate() {
            assert_abs_diff_eq!(v, stripped.intercept + comps[0].values[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn default_pdp_axes_span_the_knot_range() {
        let (x, y) = toy_data(30, 2, 18);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Squared,
            fixed(0.01, 0.01),
        )
        .unwrap();
        let axes = default_pdp_axes(&model, &[0], 7).unwrap();
        assert_eq!(axes.len(), 1);
        assert_eq!(axes[0].len(), 7);
        let knots = &model.marginal_knots[0];
        assert_abs_diff_eq!(axes[0][0], knots[0], epsilon = 1e-15);
        assert_abs_diff_eq!(axes[0][6], *knots.last().unwrap(), epsilon = 1e-15);
        assert!(default_pdp_axes(&model, &[0], 1).is_err());
    }

    #[test]
    fn kfold_tuning_is_deterministic_and_validates_k() {
        let (x, y) = toy_data(40, 2, 19);
        let mut spec = small_spec();
        spec.rho_grid = GridSpec::Explicit(vec![0.05, 0.01]);
        spec.lambda_grid = GridSpec::Explicit(vec![0.02, 0.004]);
        spec.seed = 42;
        let m1 = fit(
            x.view(),
            y.view(),
            None,
            &spec,
            Loss::Squared,
            TuningInput::KFold(5),
        )
        .unwrap();
        let m2 = fit(
            x.view(),
            y.view(),
            None,
            &spec,
            Loss::Squared,
            TuningInput::KFold(5),
        )
        .unwrap();
        assert_eq!(m1.to_json(), m2.to_json());
        assert_eq!(m1.tune_table.len(), 4);
        for (a, b) in m1.tune_table.iter().zip(&m2.tune_table) {
            assert_eq!(a.criterion.to_bits(), b.criterion.to_bits());
        }
        assert!(matches!(
            fit(
                x.view(),
                y.view(),
                None,
                &spec,
                Loss::Squared,
                TuningInput::KFold(1)
            ),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            fit(
                x.view(),
                y.view(),
                None,
                &spec,
                Loss::Squared,
                TuningInput::KFold(41)
            ),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn kfold_rejects_single_class_training_folds() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let x = Array2::from_shape_fn((12, 1), |_| rng.random::<f64>());
        let mut y = Array1::zeros(12);
        y[3] = 1.0;
        let mut spec = small_spec();
        spec.max_order = 1;
        spec.rho_grid = GridSpec::Explicit(vec![0.05]);
        spec.lambda_grid = GridSpec::Explicit(vec![0.02]);
        let err = fit(
            x.view(),
            y.view(),
            None,
            &spec,
            Loss::Logistic,
            TuningInput::KFold(12),
        )
        .unwrap_err();
        match err {
            Error::InvalidConfig(msg) => assert!(msg.contains("single-class")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn validation_inputs_are_checked() {
        let (x, y) = toy_data(30, 2, 21);
        let (xv, yv) = toy_data(10, 2, 22);
        let spec = small_spec();
        let wide = Array2::zeros((10, 3));
        assert!(matches!(
            fit(
                x.view(),
                y.view(),
                None,
                &spec,
                Loss::Squared,
                TuningInput::Validation {
                    x: wide.view(),
                    y: yv.view()
                }
            ),
            Err(Error::DimensionMismatch(_))
        ));
        let mut bad = xv.clone();
        bad[(2, 0)] = f64::INFINITY;
        assert!(matches!(
            fit(
                x.view(),
                y.view(),
                None,
                &spec,
                Loss::Squared,
                TuningInput::Validation {
                    x: bad.view(),
                    y: yv.view()
                }
            ),
            Err(Error::NonFiniteData { .. })
        ));
        let short = yv.slice(ndarray::s![..5]);
        assert!(matches!(
            fit(
                x.view(),
                y.view(),
                None,
                &spec,
                Loss::Squared,
                TuningInput::Validation {
                    x: xv.view(),
                    y: short
                }
            ),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn fixed_tuning_records_one_row_and_rejects_bad_levels() {
        let (x, y) = toy_data(30, 2, 23);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Squared,
            fixed(0.01, 0.005),
        )
        .unwrap();
        assert_eq!(model.tune_table.len(), 1);
        assert_eq!(model.tune_table[0].rho, 0.01);
        assert_eq!(model.tune_table[0].lambda, 0.005);
        assert_abs_diff_eq!(
            model.tune_table[0].criterion,
            model.objective,
            epsilon = 1e-15
        );
        assert!(matches!(
            fit(
                x.view(),
                y.view(),
                None,
                &small_spec(),
                Loss::Squared,
                fixed(-0.1, 0.1)
            ),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            fit(
                x.view(),
                y.view(),
                None,
                &small_spec(),
                Loss::Squared,
                fixed(0.1, f64::NAN)
            ),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn predictions_extend_beyond_the_knot_range() {
        let (x, y) = toy_data(40, 2, 24);
        let model = fit(
            x.view(),
            y.view(),
            None,
            &small_spec(),
            Loss::Squared,
            fixed(0.002, 0.001),
        )
        .unwrap();
        let xq = array![[-0.5, 1.5], [2.0, -1.0]];
        let pred = model.predict(xq.view()).unwrap();
        assert!(pred.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn block_labels_use_covariate_names() {
        let (x, y) = toy_data(40, 2, 25);
        let names: Vec<String> = vec!["left".into(), "right".into()];
        let model = fit(
            x.view(),
            y.view(),
            Some(&names),
            &small_spec(),
            Loss::Squared,
            fixed(0.001, 0.0005),
        )
        .unwrap();
        let labels: Vec<String> = model.blocks.iter().map(|b| model.block_label(b)).collect();
        assert!(labels
            .iter()
            .all(|l| l.split('*').all(|part| part == "left" || part == "right")));
        if let Some(pair) = model.blocks.iter().find(|b| b.covariates.len() == 2) {
            assert_eq!(model.block_label(pair), "left*right");
        }
    }
}
