//! Univariate spline bases, their tensor-product blocks, and design matrices.
//!
//! For each covariate `j` with marginal knots `z_1 < ... < z_n` and order `m`,
//! the raw basis over indices `nu = 2..=n` is
//!
//! - `phi_nu(z) = z^(nu-1) / (nu-1)!` for `nu <= m`,
//! - `phi_nu(z) = (z - t_(nu-m))_+^(m-1) / (m-1)!` for `nu >= m+1`,
//!
//! where `t_1 < ... < t_(n-m)` are the interior truncation knots. The working
//! basis applies a transform `T` built from differentiation `D`, its
//! antiderivative, and the marginalization `H` (knot average or fixed-knot
//! value), then removes the `H`-projection:
//!
//! - `T phi_2 = z`,
//! - order 1: `T` is the identity,
//! - order `m >= 2`, `nu >= 3`: `T phi_nu = (1 - z (H o D)) Int T' D phi_nu`,
//!   where `T'` is the transform at order `m - 1` and `Int` antidifferentiates.
//!
//! The result `psi_nu = (1 - H) T phi_nu` is the raw truncated power (or
//! monomial) plus an explicit polynomial correction of degree `<= m - 1`,
//! constructed symbolically, and satisfies `H psi_nu = 0`. Columns with
//! `nu >= m + 1` carry a total-variation penalty; the `m - 1` columns with
//! `2 <= nu <= m` are unpenalized.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::knots::{KnotSystem, Projection};
use crate::piecewise::PiecewisePoly;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// The order-`m` transform applied to `phi_nu`; `knots` are the marginal knots
/// of the covariate the projection acts on.
fn t_transform(
    m: usize,
    nu: usize,
    phi: &PiecewisePoly,
    knots: &[f64],
    projection: &Projection,
    covariate: usize,
) -> PiecewisePoly {
    if m == 1 {
        return phi.clone();
    }
    if nu == 2 {
        return PiecewisePoly::monomial(1, 1.0);
    }
    let inner = t_transform(
        m - 1,
        nu - 1,
        &phi.derivative(),
        knots,
        projection,
        covariate,
    );
    let mut g = inner.antiderivative();
    let slope_projection = inner.project(knots, projection, covariate);
    g.add_monomial(1, -slope_projection);
    g
}

/// Working basis functions for one covariate.
#[derive(Clone, Debug)]
pub struct CovariateBasis {
    pub m: usize,
    /// Marginal knots (strictly increasing).
    pub knots: Vec<f64>,
    /// Interior truncation knots (`n - m` of them).
    pub superset: Vec<f64>,
    /// `psi_nu` for `nu = 2..=n`, stored at index `nu - 2`.
    psi: Vec<PiecewisePoly>,
}

impl CovariateBasis {
    /// Number of basis functions (`n - 1`).
    pub fn n_functions(&self) -> usize {
        self.knots.len() - 1
    }

    /// Raw basis function for index `nu` in `2..=n`.
    pub fn phi(&self, nu: usize) -> PiecewisePoly {
        assert!((2..=self.knots.len()).contains(&nu));
        if nu <= self.m {
            PiecewisePoly::monomial(nu - 1, 1.0 / factorial(nu - 1))
        } else {
            PiecewisePoly::truncated(
                self.superset[nu - self.m - 1],
                (self.m - 1) as u32,
                1.0 / factorial(self.m - 1),
            )
        }
    }

    /// Working basis function for index `nu` in `2..=n`.
    pub fn psi(&self, nu: usize) -> &PiecewisePoly {
        &self.psi[nu - 2]
    }

    /// Whether column index `nu` carries a total-variation penalty.
    pub fn is_penalized(&self, nu: usize) -> bool {
        nu > self.m
    }

    /// Evaluate every basis function at `z`: returns `psi_nu(z)` for
    /// `nu = 2..=n` in order.
    pub fn eval_all(&self, z: f64) -> Vec<f64> {
        self.psi.iter().map(|f| f.eval(z)).collect()
    }
}

/// Build the working basis for every covariate of a knot system.
pub fn build_psi_basis(knots: &KnotSystem, projection: &Projection) -> Result<Vec<CovariateBasis>> {
    let m = knots.m;
    if !(1..=3).contains(&m) {
        return Err(Error::UnsupportedOrder {
            m,
            reason: "basis construction supports orders 1 through 3".to_string(),
        });
    }
    let mut out = Vec::with_capacity(knots.dim());
    for j in 0..knots.dim() {
        let marginal = knots.marginal[j].clone();
        if let Some(i) = projection.fixed_index(j) {
            if i >= marginal.len() {
                return Err(Error::FixedKnotOutOfRange {
                    name: format!("x{}", j + 1),
                    index: i,
                    n: marginal.len(),
                });
            }
        }
        let superset = knots.superset(j);
        let mut basis = CovariateBasis {
            m,
            knots: marginal,
            superset,
            psi: Vec::new(),
        };
        let n = basis.knots.len();
        for nu in 2..=n {
            let phi = basis.phi(nu);
            let mut t = t_transform(m, nu, &phi, &basis.knots, projection, j);
            let projected = t.project(&basis.knots, projection, j);
            t.add_monomial(0, -projected);
            basis.psi.push(t);
        }
        out.push(basis);
    }
    Ok(out)
}

/// All covariate subsets up to `max_order`, size-major then lexicographic.
pub fn enumerate_blocks(p: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut blocks = Vec::new();
    for k in 1..=max_order.min(p) {
        let mut current: Vec<usize> = (0..k).collect();
        'size: loop {
            blocks.push(current.clone());
            // Next k-combination of 0..p in lexicographic order.
            let mut i = k;
            loop {
                if i == 0 {
                    break 'size;
                }
                i -= 1;
                if current[i] < p - k + i {
                    current[i] += 1;
                    for l in (i + 1)..k {
                        current[l] = current[l - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
    blocks
}

/// Column multi-indices for a block: one `nu` per block covariate, each in
/// `2..=n_j`, ordered with the first covariate slowest and the last fastest.
pub fn block_column_nus(bases: &[CovariateBasis], block: &[usize]) -> Vec<Vec<usize>> {
    let sizes: Vec<usize> = block.iter().map(|&j| bases[j].n_functions()).collect();
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; block.len()];
    for _ in 0..total {
        out.push(idx.iter().map(|&i| i + 2).collect());
        for l in (0..block.len()).rev() {
            idx[l] += 1;
            if idx[l] < sizes[l] {
                break;
            }
            idx[l] = 0;
        }
    }
    out
}

/// Non-differentiation degree of a column: how many of its factors carry a
/// total-variation penalty (`nu > m`). Degree-0 columns are unpenalized.
pub fn column_degree(m: usize, nus: &[usize]) -> u8 {
    nus.iter().filter(|&&nu| nu > m).count() as u8
}

/// Design matrix for one interaction block.
#[derive(Clone, Debug)]
pub struct DesignBlock {
    /// Covariate indices (sorted) this block crosses.
    pub covariates: Vec<usize>,
    /// Per-column basis multi-indices (empty for ad-hoc matrices).
    pub nus: Vec<Vec<usize>>,
    /// Per-column non-differentiation degree.
    pub degrees: Vec<u8>,
    /// Uncentered basis evaluations, rows = observations.
    pub raw: Array2<f64>,
    /// Column means of `raw`.
    pub means: Vec<f64>,
    /// `raw` minus its column means.
    pub centered: Array2<f64>,
    /// `(1/n) ||centered column||^2`, cached for coordinate descent.
    pub col_sq_norm_n: Vec<f64>,
}

impl DesignBlock {
    pub fn n_columns(&self) -> usize {
        self.raw.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.raw.nrows()
    }

    /// Order of the block (number of covariates crossed).
    pub fn order(&self) -> usize {
        self.covariates.len()
    }

    /// Human-readable label, e.g. `x1*x3`.
    pub fn label(&self) -> String {
        self.covariates
            .iter()
            .map(|&j| format!("x{}", j + 1))
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Whether every centered column is numerically zero.
    pub fn is_degenerate(&self) -> bool {
        let scale = self
            .raw
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()))
            .max(1.0);
        self.centered.iter().all(|&v| v.abs() <= 1e-12 * scale)
    }

    /// Wrap an arbitrary matrix as a block (used by solver-level callers and
    /// tests); computes means and the centered copy.
    pub fn from_matrix(covariates: Vec<usize>, raw: Array2<f64>, degrees: Vec<u8>) -> Self {
        assert_eq!(degrees.len(), raw.ncols());
        let (means, centered) = center_columns(&raw);
        let col_sq_norm_n = column_sq_norms(&centered);
        DesignBlock {
            covariates,
            nus: Vec::new(),
            degrees,
            raw,
            means,
            centered,
            col_sq_norm_n,
        }
    }
}

fn column_sq_norms(centered: &Array2<f64>) -> Vec<f64> {
    let n = centered.nrows() as f64;
    (0..centered.ncols())
        .map(|c| centered.column(c).iter().map(|v| v * v).sum::<f64>() / n)
        .collect()
}

fn center_columns(raw: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = raw.nrows() as f64;
    let means: Vec<f64> = (0..raw.ncols()).map(|c| raw.column(c).sum() / n).collect();
    let mut centered = raw.clone();
    for (c, &mu) in means.iter().enumerate() {
        centered.column_mut(c).mapv_inplace(|v| v - mu);
    }
    (means, centered)
}

/// Evaluate the raw (uncentered) block design at arbitrary points.
///
/// Each column is the product over the block's covariates of the univariate
/// basis values, so a two-covariate column equals the elementwise product of
/// the corresponding main-effect columns.
pub fn evaluate_block_raw(
    bases: &[CovariateBasis],
    block: &[usize],
    x: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    let n = x.nrows();
    let nus = block_column_nus(bases, block);
    let mut raw = Array2::<f64>::ones((n, nus.len()));
    // Univariate values per block covariate, reused across columns.
    let mut uni: Vec<Vec<f64>> = Vec::with_capacity(block.len());
    for &j in block {
        let basis = &bases[j];
        let mut vals = Vec::with_capacity(n * basis.n_functions());
        for i in 0..n {
            vals.extend(basis.eval_all(x[(i, j)]));
        }
        uni.push(vals);
    }
    for (c, nu) in nus.iter().enumerate() {
        for i in 0..n {
            let mut v = 1.0;
            for (l, &nu_l) in nu.iter().enumerate() {
                let nf = bases[block[l]].n_functions();
                v *= uni[l][i * nf + (nu_l - 2)];
            }
            raw[(i, c)] = v;
        }
    }
    if let Some(((i, c), _)) = raw.indexed_iter().find(|(_, v)| !v.is_finite()) {
        let label = block
            .iter()
            .map(|&j| format!("x{}", j + 1))
            .collect::<Vec<_>>()
            .join("*");
        return Err(Error::NonFiniteBasisValue {
            block: label,
            row: i,
            col: c,
        });
    }
    Ok(raw)
}

/// Materialize the design block for `block` at the training points `x`
/// (full matrix, column means, centered matrix, and per-column penalty degree).
pub fn materialize_block(
    bases: &[CovariateBasis],
    block: &[usize],
    x: ArrayView2<f64>,
) -> Result<DesignBlock> {
    let m = bases[block[0]].m;
    let nus = block_column_nus(bases, block);
    let degrees: Vec<u8> = nus.iter().map(|nu| column_degree(m, nu)).collect();
    let raw = evaluate_block_raw(bases, block, x)?;
    let (means, centered) = center_columns(&raw);
    let col_sq_norm_n = column_sq_norms(&centered);
    Ok(DesignBlock {
        covariates: block.to_vec(),
        nus,
        degrees,
        raw,
        means,
        centered,
        col_sq_norm_n,
    })
}
