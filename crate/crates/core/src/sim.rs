//! Synthetic benchmark scenarios, evaluation metrics, and a replication
//! driver, used by the integration tests and the command-line `simulate`
//! command.
//!
//! All generators are deterministic in their seed. Training and validation
//! blocks are drawn from the seed-specific stream; the test block is drawn
//! from one fixed stream shared by every seed, so replications of the same
//! scenario are always scored against identical test points.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::solver::expit;

/// Noise standard deviation of the ten-covariate regression scenario,
/// calibrated so the variance of the signal is nine times the noise variance.
pub const REGRESSION_NOISE_SD: f64 = 0.2546;

/// Noise standard deviation of the two-covariate lattice scenario.
pub const LATTICE_NOISE_SD: f64 = 0.1;

/// Number of covariates in the regression and classification scenarios
/// (four informative plus six spurious).
pub const SCENARIO_DIM: usize = 10;

/// Seed of the fixed stream from which test blocks are drawn.
const TEST_STREAM_SEED: u64 = 0x5EED_7E57;

// ---------------------------------------------------------------------------
// Component functions of the synthetic signals
// ---------------------------------------------------------------------------

/// Identity ramp on `[0, 1]`.
pub fn linear_component(z: f64) -> f64 {
    z
}

/// Symmetric parabola `(2z - 1)^2`.
pub fn quadratic_component(z: f64) -> f64 {
    let u = 2.0 * z - 1.0;
    u * u
}

/// Skewed oscillation `sin(2 pi z) / (2 - sin(2 pi z))`.
pub fn sine_ratio_component(z: f64) -> f64 {
    let s = (2.0 * PI * z).sin();
    s / (2.0 - s)
}

/// Mixed trigonometric bump.
pub fn trig_mix_component(z: f64) -> f64 {
    let s = (2.0 * PI * z).sin();
    let c = (2.0 * PI * z).cos();
    0.1 * s + 0.2 * c + 0.3 * s * s + 0.4 * c * c * c + 0.5 * s * s * s
}

/// Mean of [`linear_component`] under the uniform distribution on `[0, 1]`.
pub fn linear_component_mean() -> f64 {
    0.5
}

/// Mean of [`quadratic_component`] under the uniform distribution.
pub fn quadratic_component_mean() -> f64 {
    1.0 / 3.0
}

/// Mean of [`sine_ratio_component`] under the uniform distribution.
pub fn sine_ratio_component_mean() -> f64 {
    2.0 / 3f64.sqrt() - 1.0
}

/// Mean of [`trig_mix_component`] under the uniform distribution.
pub fn trig_mix_component_mean() -> f64 {
    0.15
}

/// Regression signal: four main effects plus three two-way interactions,
/// touching only the first four of the row's covariates.
pub fn regression_truth(row: &[f64]) -> f64 {
    assert!(
        row.len() >= 4,
        "scenario signal needs at least 4 covariates, got {}",
        row.len()
    );
    linear_component(row[0])
        + quadratic_component(row[1])
        + sine_ratio_component(row[2])
        + trig_mix_component(row[3])
        + linear_component(row[2] * row[3])
        + quadratic_component((row[0] + row[2]) / 2.0)
        + sine_ratio_component(row[0] * row[1])
}

/// Classification signal on the logit scale: the same structure as
/// [`regression_truth`] but with each component centered to mean zero under
/// the uniform distribution, keeping class probabilities away from 0 and 1.
pub fn classification_logit(row: &[f64]) -> f64 {
    assert!(
        row.len() >= 4,
        "scenario signal needs at least 4 covariates, got {}",
        row.len()
    );
    let c1 = |z: f64| linear_component(z) - linear_component_mean();
    let c2 = |z: f64| quadratic_component(z) - quadratic_component_mean();
    let c3 = |z: f64| sine_ratio_component(z) - sine_ratio_component_mean();
    let c4 = |z: f64| trig_mix_component(z) - trig_mix_component_mean();
    c1(row[0])
        + c2(row[1])
        + c3(row[2])
        + c4(row[3])
        + c1(row[2] * row[3])
        + c2((row[0] + row[2]) / 2.0)
        + c3(row[0] * row[1])
}

/// True class-one probability of the classification scenario.
pub fn classification_probability(row: &[f64]) -> f64 {
    expit(classification_logit(row))
}

/// Tent surface `1 - |a - b|` of the two-covariate lattice scenario.
pub fn lattice_truth(a: f64, b: f64) -> f64 {
    1.0 - (a - b).abs()
}

// ---------------------------------------------------------------------------
// Scenario generators
// ---------------------------------------------------------------------------

/// One generated data set. `truth_test` holds the noiseless signal at the
/// test points (regression, lattice) or the true class-one probability
/// (classification); `y_test` holds noisy responses or sampled labels drawn
/// from the fixed test stream.
#[derive(Clone, Debug)]
pub struct ScenarioData {
    pub x_train: Array2<f64>,
    pub y_train: Array1<f64>,
    pub x_valid: Array2<f64>,
    pub y_valid: Array1<f64>,
    pub x_test: Array2<f64>,
    pub y_test: Array1<f64>,
    pub truth_test: Array1<f64>,
}

fn uniform_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.random::<f64>())
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn row_signal(x: &Array2<f64>, f: impl Fn(&[f64]) -> f64) -> Array1<f64> {
    Array1::from_iter(
        x.rows()
            .into_iter()
            .map(|r| f(r.as_slice().expect("rows are contiguous"))),
    )
}

/// Ten-covariate regression scenario: uniform covariates, the signal of
/// [`regression_truth`], and independent Gaussian noise with standard
/// deviation `sigma`.
pub fn generate_regression(
    n_train: usize,
    n_valid: usize,
    n_test: usize,
    sigma: f64,
    seed: u64,
) -> ScenarioData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_train = uniform_matrix(&mut rng, n_train, SCENARIO_DIM);
    let f_train = row_signal(&x_train, regression_truth);
    let y_train = f_train.mapv(|f| f + sigma * standard_normal(&mut rng));
    let x_valid = uniform_matrix(&mut rng, n_valid, SCENARIO_DIM);
    let f_valid = row_signal(&x_valid, regression_truth);
    let y_valid = f_valid.mapv(|f| f + sigma * standard_normal(&mut rng));

    let mut test_rng = ChaCha8Rng::seed_from_u64(TEST_STREAM_SEED);
    let x_test = uniform_matrix(&mut test_rng, n_test, SCENARIO_DIM);
    let truth_test = row_signal(&x_test, regression_truth);
    let y_test = truth_test.mapv(|f| f + sigma * standard_normal(&mut test_rng));

    ScenarioData {
        x_train,
        y_train,
        x_valid,
        y_valid,
        x_test,
        y_test,
        truth_test,
    }
}

fn bernoulli_labels(rng: &mut ChaCha8Rng, probs: &Array1<f64>) -> Array1<f64> {
    probs.mapv(|p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
}

/// Ten-covariate classification scenario: uniform covariates and Bernoulli
/// labels with probability [`classification_probability`].
pub fn generate_classification(
    n_train: usize,
    n_valid: usize,
    n_test: usize,
    seed: u64,
) -> ScenarioData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_train = uniform_matrix(&mut rng, n_train, SCENARIO_DIM);
    let p_train = row_signal(&x_train, classification_probability);
    let y_train = bernoulli_labels(&mut rng, &p_train);
    let x_valid = uniform_matrix(&mut rng, n_valid, SCENARIO_DIM);
    let p_valid = row_signal(&x_valid, classification_probability);
    let y_valid = bernoulli_labels(&mut rng, &p_valid);

    let mut test_rng = ChaCha8Rng::seed_from_u64(TEST_STREAM_SEED);
    let x_test = uniform_matrix(&mut test_rng, n_test, SCENARIO_DIM);
    let truth_test = row_signal(&x_test, classification_probability);
    let y_test = bernoulli_labels(&mut test_rng, &truth_test);

    ScenarioData {
        x_train,
        y_train,
        x_valid,
        y_valid,
        x_test,
        y_test,
        truth_test,
    }
}

/// Two-covariate lattice scenario: uniform pairs, the tent signal of
/// [`lattice_truth`], Gaussian noise with standard deviation `sigma`, and a
/// deterministic `grid_side x grid_side` test grid on the unit square
/// (row-major, second coordinate fastest).
pub fn generate_lattice(
    n_train: usize,
    n_valid: usize,
    grid_side: usize,
    sigma: f64,
    seed: u64,
) -> ScenarioData {
    assert!(
        grid_side >= 2,
        "lattice test grid needs at least 2 points per side"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_train = uniform_matrix(&mut rng, n_train, 2);
    let f_train = row_signal(&x_train, |r| lattice_truth(r[0], r[1]));
    let y_train = f_train.mapv(|f| f + sigma * standard_normal(&mut rng));
    let x_valid = uniform_matrix(&mut rng, n_valid, 2);
    let f_valid = row_signal(&x_valid, |r| lattice_truth(r[0], r[1]));
    let y_valid = f_valid.mapv(|f| f + sigma * standard_normal(&mut rng));

    let n_test = grid_side * grid_side;
    let step = 1.0 / (grid_side - 1) as f64;
    let mut x_test = Array2::zeros((n_test, 2));
    for i in 0..grid_side {
        for j in 0..grid_side {
            x_test[(i * grid_side + j, 0)] = i as f64 * step;
            x_test[(i * grid_side + j, 1)] = j as f64 * step;
        }
    }
    let truth_test = row_signal(&x_test, |r| lattice_truth(r[0], r[1]));
    let mut test_rng = ChaCha8Rng::seed_from_u64(TEST_STREAM_SEED);
    let y_test = truth_test.mapv(|f| f + sigma * standard_normal(&mut test_rng));

    ScenarioData {
        x_train,
        y_train,
        x_valid,
        y_valid,
        x_test,
        y_test,
        truth_test,
    }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Mean squared difference between predictions and the noiseless truth.
pub fn mise(predicted: &Array1<f64>, truth: &Array1<f64>) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} prediction(s) against {} truth value(s)",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::InvalidConfig(
            "mean squared error needs at least one point".to_string(),
        ));
    }
    Ok(predicted
        .iter()
        .zip(truth.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / predicted.len() as f64)
}

/// Classification quality of predicted probabilities against 0/1 labels.
#[derive(Clone, Copy, Debug)]
pub struct ClassificationMetrics {
    /// Fraction misclassified by thresholding at 1/2.
    pub error_rate: f64,
    /// Mean Bernoulli negative log-likelihood (probabilities clipped to
    /// `[1e-12, 1 - 1e-12]` inside the logarithms only).
    pub log_loss: f64,
    /// Area under the ROC curve, computed from midranks so ties contribute
    /// one half.
    pub auc: f64,
}

/// Area under the ROC curve via the rank-sum formula with midranks for ties.
pub fn auc(scores: &Array1<f64>, labels: &Array1<f64>) -> Result<f64> {
    let n = scores.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} score(s) against {} label(s)",
            n,
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&v| v == 1.0).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassResponse);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j + 2) as f64 / 2.0;
        for k in i..=j {
            ranks[order[k]] = mid;
        }
        i = j + 1;
    }
    let rank_sum: f64 = labels
        .iter()
        .zip(&ranks)
        .filter(|(&v, _)| v == 1.0)
        .map(|(_, &r)| r)
        .sum();
    Ok((rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos as f64 * n_neg as f64))
}

/// Error rate, log loss, and AUC of predicted probabilities.
pub fn classification_metrics(
    probabilities: &Array1<f64>,
    labels: &Array1<f64>,
) -> Result<ClassificationMetrics> {
    let n = probabilities.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} probability value(s) against {} label(s)",
            n,
            labels.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidConfig(
            "classification metrics need at least one point".to_string(),
        ));
    }
    for (row, &v) in labels.iter().enumerate() {
        if v != 0.0 && v != 1.0 {
            return Err(Error::NonBinaryResponse { value: v, row });
        }
    }
    if let Some(row) = probabilities.iter().position(|p| !p.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "probability at row {row} is not finite"
        )));
    }
    let clip = |p: f64| p.clamp(1e-12, 1.0 - 1e-12);
    let mut errors = 0usize;
    let mut loss = 0.0;
    for (&p, &y) in probabilities.iter().zip(labels.iter()) {
        let predicted = if p > 0.5 { 1.0 } else { 0.0 };
        if predicted != y {
            errors += 1;
        }
        let pc = clip(p);
        loss -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
    }
    Ok(ClassificationMetrics {
        error_rate: errors as f64 / n as f64,
        log_loss: loss / n as f64,
        auc: auc(probabilities, labels)?,
    })
}

/// Monte Carlo estimate of the best achievable classification metrics in the
/// classification scenario, scoring the true probabilities on fresh draws.
pub fn classification_oracle(n: usize, seed: u64) -> Result<ClassificationMetrics> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = uniform_matrix(&mut rng, n, SCENARIO_DIM);
    let p = row_signal(&x, classification_probability);
    let y = bernoulli_labels(&mut rng, &p);
    classification_metrics(&p, &y)
}

// ---------------------------------------------------------------------------
// Replications
// ---------------------------------------------------------------------------

/// Run `reps` independent replications in parallel; the runner receives the
/// replication index (callers derive per-replication seeds as
/// `base_seed + index`). The first failure aborts the whole run.
pub fn run_replications<T, F>(reps: usize, runner: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..reps).into_par_iter().map(runner).collect()
}

/// Mean and standard error of replication values.
#[derive(Clone, Copy, Debug)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation divided by the square root of the count;
    /// `NaN` with fewer than two values.
    pub standard_error: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary {
            mean: f64::NAN,
            standard_error: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Summary {
            mean,
            standard_error: f64::NAN,
        };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    Summary {
        mean,
        standard_error: (var / n as f64).sqrt(),
    }
}
