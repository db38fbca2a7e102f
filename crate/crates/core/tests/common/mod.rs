//! Shared helpers for integration tests: slow but independent reference
//! solvers for the penalized objectives, implemented with a primal-dual
//! splitting method that never reuses the crate's descent code paths.

#![allow(dead_code)]

use anovatv::{log1p_exp, DesignBlock};
use ndarray::{Array1, Array2};

/// Upper bound on the spectral norm of a matrix (Frobenius norm).
pub fn spectral_bound(x: &Array2<f64>) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
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

/// Single-block squared-error objective with a fixed mean intercept:
/// `(1/2)||y - ybar - X b||_n^2 + sum_j w_j |b_j| + lambda ||X b||_n`.
pub fn squared_objective(
    y: &Array1<f64>,
    block: &DesignBlock,
    beta: &Array1<f64>,
    weights: &[f64],
    lambda: f64,
) -> f64 {
    let n = y.len() as f64;
    let ybar = y.sum() / n;
    let fitted = block.centered.dot(beta);
    let r = y - &fitted.mapv(|f| f + ybar);
    let l1: f64 = weights
        .iter()
        .zip(beta.iter())
        .map(|(w, b)| w * b.abs())
        .sum();
    0.5 * r.dot(&r) / n + l1 + lambda * (fitted.dot(&fitted) / n).sqrt()
}

/// Single-block Bernoulli objective:
/// `(1/n) sum_i [log(1 + exp(eta_i)) - y_i eta_i] + sum_j w_j |b_j|
///  + lambda ||X b||_n` with `eta = mu + X b`.
pub fn logistic_objective(
    y: &Array1<f64>,
    block: &DesignBlock,
    mu: f64,
    beta: &Array1<f64>,
    weights: &[f64],
    lambda: f64,
) -> f64 {
    let n = y.len() as f64;
    let fitted = block.centered.dot(beta);
    let data: f64 = fitted
        .iter()
        .zip(y.iter())
        .map(|(f, v)| {
            let eta = mu + f;
            log1p_exp(eta) - v * eta
        })
        .sum();
    let l1: f64 = weights
        .iter()
        .zip(beta.iter())
        .map(|(w, b)| w * b.abs())
        .sum();
    data / n + l1 + lambda * (fitted.dot(&fitted) / n).sqrt()
}

/// Reference minimizer of the single-block squared-error objective by a
/// primal-dual splitting iteration: the smooth quadratic enters through its
/// gradient, the weighted l1 through its proximal map, and the empirical-norm
/// term through projection of its dual variable onto a ball.
pub fn squared_reference(
    y: &Array1<f64>,
    block: &DesignBlock,
    weights: &[f64],
    lambda: f64,
    max_iters: usize,
) -> (Array1<f64>, f64) {
    let x = &block.centered;
    let (n, p) = (x.nrows(), x.ncols());
    let nf = n as f64;
    let ybar = y.sum() / nf;
    let yc = y.mapv(|v| v - ybar);

    let norm_k = spectral_bound(x).max(1e-12);
    let lip = norm_k * norm_k / nf;
    let sigma = 1.0 / norm_k;
    let tau = 1.0 / (lip / 2.0 + sigma * norm_k * norm_k + 1e-12);
    let radius = lambda / nf.sqrt();

    let mut beta = Array1::<f64>::zeros(p);
    let mut dual = Array1::<f64>::zeros(n);
    let mut best = squared_objective(y, block, &beta, weights, lambda);
    let mut last_check = best;
    for iter in 0..max_iters {
        let fitted = x.dot(&beta);
        let grad = x.t().dot(&(&fitted - &yc)).mapv(|g| g / nf);
        let pull = x.t().dot(&dual);
        let prev = beta.clone();
        for j in 0..p {
            beta[j] = soft(beta[j] - tau * (grad[j] + pull[j]), tau * weights[j]);
        }
        let ahead = x.dot(&(&beta * 2.0 - &prev));
        let mut u = &dual + &ahead.mapv(|v| sigma * v);
        let u_norm = u.dot(&u).sqrt();
        if u_norm > radius {
            u.mapv_inplace(|v| v * radius / u_norm);
        }
        dual = u;
        if iter % 500 == 499 {
            let obj = squared_objective(y, block, &beta, weights, lambda);
            best = best.min(obj);
            if (last_check - obj).abs() < 1e-14 * (1.0 + obj.abs()) {
                break;
            }
            last_check = obj;
        }
    }
    let obj = squared_objective(y, block, &beta, weights, lambda);
    (beta, obj.min(best))
}

/// Reference minimizer of the single-block Bernoulli objective with a free
/// intercept, by the same primal-dual splitting (the intercept is an
/// unpenalized primal coordinate).
pub fn logistic_reference(
    y: &Array1<f64>,
    block: &DesignBlock,
    weights: &[f64],
    lambda: f64,
    max_iters: usize,
) -> (f64, Array1<f64>, f64) {
    let x = &block.centered;
    let (n, p) = (x.nrows(), x.ncols());
    let nf = n as f64;

    // The smooth term acts on (mu, beta); its Hessian is bounded by 1/4 times
    // the Gram matrix of [1 X].
    let norm_aug = (spectral_bound(x).powi(2) + nf).sqrt().max(1e-12);
    let lip = 0.25 * norm_aug * norm_aug / nf;
    let norm_k = spectral_bound(x).max(1e-12);
    let sigma = 1.0 / norm_k;
    let tau = 1.0 / (lip / 2.0 + sigma * norm_k * norm_k + 1e-12);
    let radius = lambda / nf.sqrt();

    let mut mu = 0.0f64;
    let mut beta = Array1::<f64>::zeros(p);
    let mut dual = Array1::<f64>::zeros(n);
    let mut best = logistic_objective(y, block, mu, &beta, weights, lambda);
    let mut last_check = best;
    for iter in 0..max_iters {
        let eta = x.dot(&beta).mapv(|f| f + mu);
        let resid = eta.mapv(|e| 1.0 / (1.0 + (-e).exp())) - y;
        let grad_mu = resid.sum() / nf;
        let grad = x.t().dot(&resid).mapv(|g| g / nf);
        let pull = x.t().dot(&dual);
        let prev = beta.clone();
        mu -= tau * grad_mu;
        for j in 0..p {
            beta[j] = soft(beta[j] - tau * (grad[j] + pull[j]), tau * weights[j]);
        }
        let ahead = x.dot(&(&beta * 2.0 - &prev));
        let mut u = &dual + &ahead.mapv(|v| sigma * v);
        let u_norm = u.dot(&u).sqrt();
        if u_norm > radius {
            u.mapv_inplace(|v| v * radius / u_norm);
        }
        dual = u;
        if iter % 500 == 499 {
            let obj = logistic_objective(y, block, mu, &beta, weights, lambda);
            best = best.min(obj);
            if (last_check - obj).abs() < 1e-14 * (1.0 + obj.abs()) {
                break;
            }
            last_check = obj;
        }
    }
    let obj = logistic_objective(y, block, mu, &beta, weights, lambda);
    (mu, beta, obj.min(best))
}

/// Reference weighted lasso by proximal gradient descent with a conservative
/// step size.
pub fn lasso_reference(
    target: &Array1<f64>,
    block: &DesignBlock,
    weights: &[f64],
    max_iters: usize,
) -> Array1<f64> {
    let x = &block.centered;
    let (n, p) = (x.nrows(), x.ncols());
    let nf = n as f64;
    let step = nf / spectral_bound(x).powi(2).max(1e-12);
    let mut beta = Array1::<f64>::zeros(p);
    for _ in 0..max_iters {
        let grad = x.t().dot(&(&x.dot(&beta) - target)).mapv(|g| g / nf);
        let mut max_move = 0.0f64;
        for j in 0..p {
            let new = soft(beta[j] - step * grad[j], step * weights[j]);
            max_move = max_move.max((new - beta[j]).abs());
            beta[j] = new;
        }
        if max_move < 1e-14 {
            break;
        }
    }
    beta
}
