use thiserror::Error;

/// Errors surfaced by knot construction, basis evaluation, solvers, and model fitting.
#[derive(Error, Debug)]
pub enum Error {
    #[error("covariate {name}: non-finite value at row {row}")]
    NonFiniteData { name: String, row: usize },

    #[error("covariate {name}: {distinct} distinct value(s) leave too few knots for order m={m} (need at least {need})")]
    TooFewDistinctValues {
        name: String,
        distinct: usize,
        m: usize,
        need: usize,
    },

    #[error("response: non-finite value at row {row}")]
    NonFiniteResponse { row: usize },

    #[error("response is constant; nothing to fit")]
    ConstantResponse,

    #[error("binary response must contain both classes (0 and 1)")]
    SingleClassResponse,

    #[error("binary response must be coded 0/1; found {value} at row {row}")]
    NonBinaryResponse { value: f64, row: usize },

    #[error("interaction order {k} not supported: {reason}")]
    InvalidInteractionOrder { k: usize, reason: String },

    #[error("knot budget {n_knots} too small for order m={m} (need at least m+1)")]
    KnotBudgetTooSmall { n_knots: usize, m: usize },

    #[error("spline order m={m} not supported here: {reason}")]
    UnsupportedOrder { m: usize, reason: String },

    #[error("fixed projection knot index {index} out of range for covariate {name} ({n} knots)")]
    FixedKnotOutOfRange {
        name: String,
        index: usize,
        n: usize,
    },

    #[error("non-finite basis value at row {row}, column {col} of block {block}")]
    NonFiniteBasisValue {
        block: String,
        row: usize,
        col: usize,
    },

    #[error("grid function is empty or has a zero-length coordinate")]
    EmptyGrid,

    #[error("grid has {got} value(s) but the knot layout requires {want}")]
    GridShapeMismatch { got: usize, want: usize },

    #[error("grid knots for coordinate {coord} must be finite and strictly increasing")]
    BadGridKnots { coord: usize },

    #[error("total-variation functional undefined for this case: {0}")]
    UnsupportedCase(String),

    #[error("weight vector length {got} does not match {want} column(s)")]
    WeightLengthMismatch { got: usize, want: usize },

    #[error(
        "lasso solver stopped after {sweeps} sweeps with stationarity gap {gap:.3e} (tolerance {tol:.3e})"
    )]
    LassoNoConvergence {
        sweeps: usize,
        gap: f64,
        tol: f64,
        /// Best iterate reached before giving up.
        best: Vec<f64>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no usable covariates remain after validation")]
    NoUsableCovariates,

    #[error("{0}")]
    InvalidConfig(String),

    #[error("model document error: {0}")]
    ModelDocument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
