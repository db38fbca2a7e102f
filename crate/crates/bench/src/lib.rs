//! Shared fixtures for the benchmark suite: deterministic design matrices,
//! responses with a sparse additive signal, and fully materialized spline
//! blocks at benchmark-realistic sizes.

use anovatv::{
    build_knots, build_psi_basis, enumerate_blocks, materialize_block, DesignBlock, Projection,
};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn uniform_matrix(n: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, p), |_| rng.random::<f64>())
}

/// Response with two nonlinear main effects, one interaction, and noise.
pub fn noisy_response(x: &Array2<f64>, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    Array1::from_shape_fn(x.nrows(), |i| {
        x[(i, 0)]
            + (2.0 * x[(i, 1)] - 1.0).powi(2)
            + 0.5 * x[(i, 0)] * x[(i, 2)]
            + 0.1 * (rng.random::<f64>() - 0.5)
    })
}

/// All interaction blocks up to `max_order`, materialized on `x` with
/// `n_knots` marginal knots per covariate and the averaging projection.
pub fn spline_blocks(
    x: &Array2<f64>,
    m: usize,
    n_knots: usize,
    max_order: usize,
) -> Vec<DesignBlock> {
    let (n, p) = (x.nrows(), x.ncols());
    let knots = build_knots(x.as_slice().unwrap(), n, p, n_knots, m).unwrap();
    let bases = build_psi_basis(&knots, &Projection::Averaging).unwrap();
    enumerate_blocks(p, max_order)
        .iter()
        .map(|block| materialize_block(&bases, block, x.view()).unwrap())
        .collect()
}
