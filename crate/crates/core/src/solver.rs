//! Block descent with thresholding for doubly penalized additive models.
//!
//! The squared-error objective over blocks `k` with centered designs `X_k`,
//! centered response `y - ybar`, empirical norm `||v||_n = sqrt(mean(v^2))`,
//! per-column weights `w_kj` (zero for unpenalized columns) and per-order
//! empirical-norm levels `lambda_k` is
//!
//! ```text
//! 1/2 ||y - ybar - sum_k X_k b_k||_n^2
//!     + sum_k [ sum_j w_kj |b_kj| + lambda_k ||X_k b_k||_n ].
//! ```
//!
//! Each block update solves the weighted lasso in its partial residual and
//! then applies a vector soft threshold `b <- (1 - lambda_k / ||X_k b||_n)_+ b`,
//! which solves the block subproblem exactly; cycling over blocks descends the
//! objective monotonically. After a full cycle the iteration continues on the
//! active blocks only until stable, then re-checks with a full cycle.
//!
//! For Bernoulli responses the same machinery runs inside a majorization loop
//! with curvature bound 1/4: each block update forms the working response
//! `eta = mu + X_k b_k + 4 (y - p)`, recenters `mu <- mean(eta)`, and solves
//! the quadratic subproblem with weights and threshold level scaled by 4,
//! which never increases the penalized negative log-likelihood.

use ndarray::Array1;

use crate::basis::DesignBlock;
use crate::error::{Error, Result};

/// Penalty levels per interaction order: a column of non-differentiation
/// degree `l >= 1` gets lasso weight `rho[l-1]` (degree 0 columns are
/// unpenalized), and an order-k block gets empirical-norm level `lambda[k-1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyConfig {
    pub rho: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl PenaltyConfig {
    /// Same `rho` and `lambda` at every interaction order up to `max_order`.
    pub fn tied(max_order: usize, rho: f64, lambda: f64) -> Self {
        PenaltyConfig {
            rho: vec![rho; max_order],
            lambda: vec![lambda; max_order],
        }
    }

    pub fn column_weight(&self, degree: u8) -> f64 {
        if degree == 0 {
            0.0
        } else {
            self.rho[degree as usize - 1]
        }
    }

    pub fn block_lambda(&self, order: usize) -> f64 {
        self.lambda[order - 1]
    }

    fn validate(&self, max_order: usize) -> Result<()> {
        if self.rho.len() < max_order || self.lambda.len() < max_order {
            return Err(Error::InvalidConfig(format!(
                "penalty levels cover {} order(s) but blocks reach order {}",
                self.rho.len().min(self.lambda.len()),
                max_order
            )));
        }
        if self
            .rho
            .iter()
            .chain(&self.lambda)
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::InvalidConfig(
                "penalty levels must be finite and nonnegative".to_string(),
            ));
        }
        Ok(())
    }
}

/// Iteration controls for the block descent loops.
#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Stop when the relative objective change over a cycle falls below this.
    pub tol_rel_obj: f64,
    /// Hard cap on block cycles; exceeding it leaves a warning, not an error.
    pub max_cycles: usize,
    /// Stationarity tolerance for the inner weighted lasso.
    pub inner_kkt_tol: f64,
    /// Hard cap on coordinate-descent sweeps per lasso solve.
    pub max_inner_sweeps: usize,
}

impl FitOptions {
    pub fn squared() -> Self {
        FitOptions {
            tol_rel_obj: 1e-7,
            max_cycles: 200,
            inner_kkt_tol: 1e-8,
            max_inner_sweeps: 50_000,
        }
    }

    pub fn logistic() -> Self {
        FitOptions {
            tol_rel_obj: 1e-6,
            ..FitOptions::squared()
        }
    }
}

/// State of a block-descent fit.
#[derive(Clone, Debug)]
pub struct FitState {
    /// `ybar` for squared error; the intercept `mu` for the Bernoulli loss.
    pub intercept: f64,
    /// Coefficients per block, aligned with the block list.
    pub beta: Vec<Array1<f64>>,
    /// Per-block fitted vectors `X_k b_k` on the training rows.
    pub block_fitted: Vec<Array1<f64>>,
    /// Objective after the initial state and after every block update.
    pub objective_trace: Vec<f64>,
    pub cycles: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl FitState {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap()
    }

    /// Indices of blocks with any nonzero coefficient.
    pub fn active_blocks(&self) -> Vec<usize> {
        self.beta
            .iter()
            .enumerate()
            .filter(|(_, b)| b.iter().any(|&v| v != 0.0))
            .map(|(k, _)| k)
            .collect()
    }

    /// Total fitted vector `sum_k X_k b_k`.
    pub fn fitted(&self) -> Array1<f64> {
        let n = self.block_fitted.first().map(|f| f.len()).unwrap_or(0);
        let mut out = Array1::zeros(n);
        for f in &self.block_fitted {
            out += f;
        }
        out
    }

    /// Largest deviation between the maintained per-block fits and a fresh
    /// recomputation from the coefficients.
    pub fn verify_fitted(&self, blocks: &[DesignBlock]) -> f64 {
        let mut worst = 0.0f64;
        for (k, block) in blocks.iter().enumerate() {
            let fresh = block.centered.dot(&self.beta[k]);
            for (a, b) in fresh.iter().zip(self.block_fitted[k].iter()) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }
}

pub(crate) fn empirical_norm(v: &Array1<f64>) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn soft(z: f64, w: f64) -> f64 {
    if z > w {
        z - w
    } else if z < -w {
        z + w
    } else {
        0.0
    }
}

/// Exact minimizer of
/// `1/2 ||r - X b||_n^2 + sum_j weights_j |b_j|`
/// over the block's centered design, by coordinate descent to a stationarity
/// tolerance: every coordinate satisfies
/// `|g_j - w_j sign(b_j)| <= tol` (active) or `|g_j| <= w_j + tol` (inactive),
/// with `g_j = (1/n) X_j . (r - X b)`.
pub fn solve_lasso_block(
    residual: &Array1<f64>,
    block: &DesignBlock,
    weights: &[f64],
    warm_start: Option<&Array1<f64>>,
    options: &FitOptions,
) -> Result<Array1<f64>> {
    let x = &block.centered;
    let (n, cols) = (x.nrows(), x.ncols());
    if residual.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "residual has {} row(s), block has {}",
            residual.len(),
            n
        )));
    }
    if weights.len() != cols {
        return Err(Error::WeightLengthMismatch {
            got: weights.len(),
            want: cols,
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidConfig(
            "lasso weights must be finite and nonnegative".to_string(),
        ));
    }
    let inv_n = 1.0 / n as f64;
    let col_sq: &[f64] = &block.col_sq_norm_n;
    let mut beta = match warm_start {
        Some(b) if b.len() == cols => b.clone(),
        Some(b) => {
            return Err(Error::DimensionMismatch(format!(
                "warm start has {} value(s), block has {} column(s)",
                b.len(),
                cols
            )))
        }
        None => Array1::zeros(cols),
    };
    // Residual of the current iterate.
    let mut res = residual.clone();
    if beta.iter().any(|&b| b != 0.0) {
        res -= &x.dot(&beta);
    }

    let xs = x.as_slice().expect("design stored row-major");
    let rs = res.as_slice_mut().expect("contiguous residual");

    // One coordinate-descent pass over `set`; returns the largest coefficient
    // move scaled by the column norm (a cheap progress measure).
    let sweep = |beta: &mut Array1<f64>, rs: &mut [f64], set: &[usize]| -> f64 {
        let mut max_move = 0.0f64;
        for &j in set {
            let a = col_sq[j];
            if a <= 0.0 {
                continue;
            }
            let mut dot = 0.0;
            for i in 0..n {
                dot += xs[i * cols + j] * rs[i];
            }
            let z = dot * inv_n + a * beta[j];
            let new = soft(z, weights[j]) / a;
            let delta = new - beta[j];
            if delta != 0.0 {
                for i in 0..n {
                    rs[i] -= delta * xs[i * cols + j];
                }
                beta[j] = new;
                max_move = max_move.max(delta.abs() * a.sqrt());
            }
        }
        max_move
    };

    let kkt_gap = |beta: &Array1<f64>, rs: &[f64]| -> f64 {
        let mut gap = 0.0f64;
        for j in 0..cols {
            let mut dot = 0.0;
            for i in 0..n {
                dot += xs[i * cols + j] * rs[i];
            }
            let g = dot * inv_n;
            let viol = if beta[j] != 0.0 {
                (g - weights[j] * beta[j].signum()).abs()
            } else {
                (g.abs() - weights[j]).max(0.0)
            };
            gap = gap.max(viol);
        }
        gap
    };

    let all: Vec<usize> = (0..cols).collect();
    let mut sweeps = 0usize;
    loop {
        sweep(&mut beta, rs, &all);
        sweeps += 1;
        let gap = kkt_gap(&beta, rs);
        if gap <= options.inner_kkt_tol {
            return Ok(beta);
        }
        if sweeps >= options.max_inner_sweeps {
            return Err(Error::LassoNoConvergence {
                sweeps,
                gap,
                tol: options.inner_kkt_tol,
                best: beta.to_vec(),
            });
        }
        // Work the active set (nonzero or unpenalized columns) until it is
        // internally stable, then re-check every column.
        let active: Vec<usize> = (0..cols)
            .filter(|&j| beta[j] != 0.0 || weights[j] == 0.0)
            .collect();
        if active.len() < cols {
            loop {
                let moved = sweep(&mut beta, rs, &active);
                sweeps += 1;
                if moved <= options.inner_kkt_tol * 0.1 || sweeps >= options.max_inner_sweeps {
                    break;
                }
            }
        }
    }
}

/// Vector soft threshold: scale the block coefficients by
/// `(1 - lambda / ||X b||_n)_+`, returning the new coefficients and the
/// empirical norm of the unthresholded fit. A zero fit stays zero.
pub fn threshold_block(
    beta: &Array1<f64>,
    block: &DesignBlock,
    lambda: f64,
) -> Result<(Array1<f64>, f64)> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidConfig(
            "threshold level must be finite and nonnegative".to_string(),
        ));
    }
    let fitted = block.centered.dot(beta);
    let norm = empirical_norm(&fitted);
    if norm <= 0.0 || norm <= lambda {
        return Ok((Array1::zeros(beta.len()), norm));
    }
    let factor = 1.0 - lambda / norm;
    Ok((beta.mapv(|b| factor * b), norm))
}

/// Per-block weights and threshold level, with an optional uniform rescale
/// (used by the Bernoulli majorization, which scales both by 4).
fn block_penalties(block: &DesignBlock, pen: &PenaltyConfig, scale: f64) -> (Vec<f64>, f64) {
    let weights = block
        .degrees
        .iter()
        .map(|&d| scale * pen.column_weight(d))
        .collect();
    (weights, scale * pen.block_lambda(block.order()))
}

fn penalty_value(
    blocks: &[DesignBlock],
    pen: &PenaltyConfig,
    beta: &[Array1<f64>],
    block_fitted: &[Array1<f64>],
) -> f64 {
    let mut total = 0.0;
    for (k, block) in blocks.iter().enumerate() {
        if beta[k].iter().all(|&b| b == 0.0) {
            continue;
        }
        let mut l1 = 0.0;
        for (j, &d) in block.degrees.iter().enumerate() {
            l1 += pen.column_weight(d) * beta[k][j].abs();
        }
        total += l1 + pen.block_lambda(block.order()) * empirical_norm(&block_fitted[k]);
    }
    total
}

fn validate_blocks(y_len: usize, blocks: &[DesignBlock], pen: &PenaltyConfig) -> Result<()> {
    let max_order = blocks.iter().map(|b| b.order()).max().unwrap_or(0);
    pen.validate(max_order)?;
    for block in blocks {
        if block.n_rows() != y_len {
            return Err(Error::DimensionMismatch(format!(
                "block {} has {} row(s), response has {}",
                block.label(),
                block.n_rows(),
                y_len
            )));
        }
    }
    Ok(())
}

fn rel_change(before: f64, after: f64) -> f64 {
    (before - after).abs() / before.abs().max(1e-12)
}

enum Pass {
    Full,
    ActiveOnly,
}

/// Coefficients used to start the block descent somewhere other than zero
/// (e.g. the previous solution along a penalty path).
fn initial_beta(blocks: &[DesignBlock], init: Option<&[Array1<f64>]>) -> Result<Vec<Array1<f64>>> {
    match init {
        None => Ok(blocks
            .iter()
            .map(|b| Array1::zeros(b.n_columns()))
            .collect()),
        Some(given) => {
            if given.len() != blocks.len() {
                return Err(Error::DimensionMismatch(format!(
                    "warm start covers {} block(s), model has {}",
                    given.len(),
                    blocks.len()
                )));
            }
            for (b, g) in blocks.iter().zip(given) {
                if g.len() != b.n_columns() {
                    return Err(Error::DimensionMismatch(format!(
                        "warm start for block {} has {} value(s), expected {}",
                        b.label(),
                        g.len(),
                        b.n_columns()
                    )));
                }
            }
            Ok(given.to_vec())
        }
    }
}

fn fitted_from_beta(blocks: &[DesignBlock], beta: &[Array1<f64>], n: usize) -> Vec<Array1<f64>> {
    blocks
        .iter()
        .zip(beta)
        .map(|(b, bk)| {
            if bk.iter().any(|&v| v != 0.0) {
                b.centered.dot(bk)
            } else {
                Array1::zeros(n)
            }
        })
        .collect()
}

/// Block descent with thresholding for the squared-error objective.
pub fn bdt_fit(
    y: &Array1<f64>,
    blocks: &[DesignBlock],
    pen: &PenaltyConfig,
    options: &FitOptions,
) -> Result<FitState> {
    bdt_fit_from(y, blocks, pen, options, None)
}

/// As [`bdt_fit`], starting from the given per-block coefficients.
pub fn bdt_fit_from(
    y: &Array1<f64>,
    blocks: &[DesignBlock],
    pen: &PenaltyConfig,
    options: &FitOptions,
    init: Option<&[Array1<f64>]>,
) -> Result<FitState> {
    if let Some(row) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteResponse { row });
    }
    validate_blocks(y.len(), blocks, pen)?;
    let n = y.len();
    let ybar = y.sum() / n as f64;
    let beta = initial_beta(blocks, init)?;
    let block_fitted = fitted_from_beta(blocks, &beta, n);
    let mut res = y.mapv(|v| v - ybar);
    for fit in &block_fitted {
        res -= fit;
    }
    let mut state = FitState {
        intercept: ybar,
        beta,
        block_fitted,
        objective_trace: Vec::new(),
        cycles: 0,
        converged: false,
        warnings: Vec::new(),
    };
    let objective = |res: &Array1<f64>, state: &FitState| {
        0.5 * empirical_norm(res).powi(2)
            + penalty_value(blocks, pen, &state.beta, &state.block_fitted)
    };
    state.objective_trace.push(objective(&res, &state));

    let mut run_cycle = |state: &mut FitState, res: &mut Array1<f64>, pass: &Pass| -> Result<()> {
        for (k, block) in blocks.iter().enumerate() {
            if matches!(pass, Pass::ActiveOnly) && state.beta[k].iter().all(|&b| b == 0.0) {
                continue;
            }
            let (weights, lambda) = block_penalties(block, pen, 1.0);
            let partial = &*res + &state.block_fitted[k];
            let tilde =
                solve_lasso_block(&partial, block, &weights, Some(&state.beta[k]), options)?;
            let (hat, _) = threshold_block(&tilde, block, lambda)?;
            let new_fit = if hat.iter().all(|&b| b == 0.0) {
                Array1::zeros(n)
            } else {
                block.centered.dot(&hat)
            };
            *res = partial - &new_fit;
            state.block_fitted[k] = new_fit;
            state.beta[k] = hat;
            state.objective_trace.push(objective(res, state));
        }
        Ok(())
    };

    descend(&mut state, &mut res, options, &mut run_cycle)?;
    Ok(state)
}

/// One sweep over the blocks, updating the state and residual in place.
type CycleFn<'a> = dyn FnMut(&mut FitState, &mut Array1<f64>, &Pass) -> Result<()> + 'a;

/// Shared outer loop: full cycles with active-only refinement in between.
fn descend(
    state: &mut FitState,
    res: &mut Array1<f64>,
    options: &FitOptions,
    run_cycle: &mut CycleFn<'_>,
) -> Result<()> {
    loop {
        let before = state.objective();
        let active_before = state.active_blocks();
        run_cycle(state, res, &Pass::Full)?;
        state.cycles += 1;
        let stable = rel_change(before, state.objective()) < options.tol_rel_obj
            && state.active_blocks() == active_before;
        if stable {
            state.converged = true;
            return Ok(());
        }
        if state.cycles >= options.max_cycles {
            state.warnings.push(format!(
                "stopped after {} cycle(s) without meeting the objective tolerance",
                state.cycles
            ));
            return Ok(());
        }
        loop {
            let b = state.objective();
            run_cycle(state, res, &Pass::ActiveOnly)?;
            state.cycles += 1;
            if rel_change(b, state.objective()) < options.tol_rel_obj {
                break;
            }
            if state.cycles >= options.max_cycles {
                state.warnings.push(format!(
                    "stopped after {} cycle(s) without meeting the objective tolerance",
                    state.cycles
                ));
                return Ok(());
            }
        }
    }
}

/// Numerically stable logistic function `1 / (1 + exp(-x))`.
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Block descent with thresholding for a Bernoulli response via quadratic
/// majorization with curvature 1/4.
pub fn bdt_logit_fit(
    y: &Array1<f64>,
    blocks: &[DesignBlock],
    pen: &PenaltyConfig,
    options: &FitOptions,
) -> Result<FitState> {
    bdt_logit_fit_from(y, blocks, pen, options, None)
}

/// As [`bdt_logit_fit`], starting from the given intercept and coefficients.
pub fn bdt_logit_fit_from(
    y: &Array1<f64>,
    blocks: &[DesignBlock],
    pen: &PenaltyConfig,
    options: &FitOptions,
    init: Option<(f64, &[Array1<f64>])>,
) -> Result<FitState> {
    for (row, &v) in y.iter().enumerate() {
        if v != 0.0 && v != 1.0 {
            return Err(Error::NonBinaryResponse { value: v, row });
        }
    }
    let n = y.len();
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == n {
        return Err(Error::SingleClassResponse);
    }
    validate_blocks(n, blocks, pen)?;

    let (init_mu, init_beta) = match init {
        Some((mu, beta)) => (mu, Some(beta)),
        None => (0.0, None),
    };
    if !init_mu.is_finite() {
        return Err(Error::InvalidConfig(
            "warm-start intercept must be finite".to_string(),
        ));
    }
    let beta = initial_beta(blocks, init_beta)?;
    let block_fitted = fitted_from_beta(blocks, &beta, n);
    let mut state = FitState {
        intercept: init_mu,
        beta,
        block_fitted,
        objective_trace: Vec::new(),
        cycles: 0,
        converged: false,
        warnings: Vec::new(),
    };
    // Total fit is maintained alongside the per-block fits.
    let mut total_fit: Array1<f64> = Array1::zeros(n);
    for fit in &state.block_fitted {
        total_fit += fit;
    }

    let objective = |intercept: f64, total_fit: &Array1<f64>, state: &FitState| {
        let mut loss = 0.0;
        for i in 0..n {
            let eta = intercept + total_fit[i];
            loss += log1p_exp(eta) - y[i] * eta;
        }
        loss / n as f64 + penalty_value(blocks, pen, &state.beta, &state.block_fitted)
    };
    state
        .objective_trace
        .push(objective(state.intercept, &total_fit, &state));

    if blocks.is_empty() {
        // Pure intercept: iterate mu <- mu + 4 (ybar - mean(p)) to the same
        // tolerance the block loop would use.
        let ybar = y.sum() / n as f64;
        loop {
            state.intercept += 4.0 * (ybar - expit(state.intercept));
            state
                .objective_trace
                .push(objective(state.intercept, &total_fit, &state));
            state.cycles += 1;
            let t = &state.objective_trace;
            if rel_change(t[t.len() - 2], t[t.len() - 1]) < options.tol_rel_obj {
                state.converged = true;
                break;
            }
            if state.cycles >= options.max_cycles {
                state
                    .warnings
                    .push(format!("stopped after {} cycle(s)", state.cycles));
                break;
            }
        }
        return Ok(state);
    }

    let mut working = Array1::<f64>::zeros(n);
    let mut run_cycle = |state: &mut FitState, _res: &mut Array1<f64>, pass: &Pass| -> Result<()> {
        for (k, block) in blocks.iter().enumerate() {
            let was_zero = state.beta[k].iter().all(|&b| b == 0.0);
            if matches!(pass, Pass::ActiveOnly) && was_zero {
                continue;
            }
            // Working response from the curvature-1/4 bound at the current fit.
            let mut mean = 0.0;
            for i in 0..n {
                let p = expit(state.intercept + total_fit[i]);
                working[i] = state.intercept + state.block_fitted[k][i] + 4.0 * (y[i] - p);
                mean += working[i];
            }
            mean /= n as f64;
            state.intercept = mean;
            let partial = working.mapv(|v| v - mean);
            let (weights, lambda) = block_penalties(block, pen, 4.0);
            let tilde =
                solve_lasso_block(&partial, block, &weights, Some(&state.beta[k]), options)?;
            let (hat, _) = threshold_block(&tilde, block, lambda)?;
            let new_fit = if hat.iter().all(|&b| b == 0.0) {
                Array1::zeros(n)
            } else {
                block.centered.dot(&hat)
            };
            total_fit += &new_fit;
            total_fit -= &state.block_fitted[k];
            state.block_fitted[k] = new_fit;
            state.beta[k] = hat;
            state
                .objective_trace
                .push(objective(state.intercept, &total_fit, state));
        }
        Ok(())
    };

    let mut unused = Array1::zeros(0);
    descend(&mut state, &mut unused, options, &mut run_cycle)?;

    let max_abs_eta = (0..n)
        .map(|i| (state.intercept + total_fit[i]).abs())
        .fold(0.0f64, f64::max);
    if max_abs_eta > 30.0 {
        state.warnings.push(format!(
            "fitted log-odds reach {max_abs_eta:.1} in absolute value; classes may be separable"
        ));
    }
    Ok(state)
}
