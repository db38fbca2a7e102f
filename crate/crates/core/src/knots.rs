//! Marginal knot construction and the projection operator choice.
//!
//! Each covariate gets a sorted list of marginal knots (evenly spaced sample
//! quantiles with duplicates collapsed) plus a derived interior "superset"
//! of truncation knots that depends on the spline order `m`:
//!
//! - odd `m`: knots `(m-1)/2 + 2 ..= n_j - (m-1)/2` (1-based),
//! - even `m`: knots `m/2 + 1 ..= n_j - m/2`,
//!
//! which leaves exactly `n_j - m` truncation knots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the marginalization operator `H_j` acts on a function of coordinate `j`.
///
/// `Averaging` replaces the function by its mean over the marginal knots;
/// `FixedPoint` replaces it by its value at one designated knot per covariate
/// (index into that covariate's marginal knots). `FixedPoint` at the minimum
/// corner of the knot grid is index 0 for every covariate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    Averaging,
    FixedPoint(Vec<usize>),
}

impl Projection {
    /// Fixed-point projection at the minimum corner of the knot grid.
    pub fn fixed_min_corner(p: usize) -> Self {
        Projection::FixedPoint(vec![0; p])
    }

    /// The fixed knot index for covariate `j`, if this is a fixed-point projection.
    pub fn fixed_index(&self, j: usize) -> Option<usize> {
        match self {
            Projection::Averaging => None,
            Projection::FixedPoint(idx) => idx.get(j).copied(),
        }
    }

    pub fn validate(&self, knots: &KnotSystem, names: &[String]) -> Result<()> {
        if let Projection::FixedPoint(idx) = self {
            if idx.len() != knots.marginal.len() {
                return Err(Error::DimensionMismatch(format!(
                    "fixed projection has {} index(es) for {} covariate(s)",
                    idx.len(),
                    knots.marginal.len()
                )));
            }
            for (j, (&i, m)) in idx.iter().zip(&knots.marginal).enumerate() {
                if i >= m.len() {
                    return Err(Error::FixedKnotOutOfRange {
                        name: names
                            .get(j)
                            .cloned()
                            .unwrap_or_else(|| format!("x{}", j + 1)),
                        index: i,
                        n: m.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Marginal knots for every covariate at a common spline order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnotSystem {
    pub m: usize,
    /// Sorted, strictly increasing marginal knots per covariate.
    pub marginal: Vec<Vec<f64>>,
}

impl KnotSystem {
    /// Build from explicit marginal knots (must be finite and strictly increasing).
    pub fn from_marginal_knots(m: usize, marginal: Vec<Vec<f64>>) -> Result<Self> {
        for (j, ks) in marginal.iter().enumerate() {
            if ks.is_empty() || ks.iter().any(|v| !v.is_finite()) {
                return Err(Error::BadGridKnots { coord: j });
            }
            if ks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::BadGridKnots { coord: j });
            }
            if ks.len() < m + 1 {
                return Err(Error::TooFewDistinctValues {
                    name: format!("x{}", j + 1),
                    distinct: ks.len(),
                    m,
                    need: m + 1,
                });
            }
        }
        Ok(KnotSystem { m, marginal })
    }

    pub fn dim(&self) -> usize {
        self.marginal.len()
    }

    /// Number of marginal knots for covariate `j`.
    pub fn n_knots(&self, j: usize) -> usize {
        self.marginal[j].len()
    }

    /// Interior truncation knots for covariate `j` under order `m`
    /// (`n_j - m` of them).
    pub fn superset(&self, j: usize) -> Vec<f64> {
        superset_knots(&self.marginal[j], self.m)
    }
}

/// Interior truncation knots selected from sorted marginal knots for order `m`.
pub fn superset_knots(marginal: &[f64], m: usize) -> Vec<f64> {
    let n = marginal.len();
    if n <= m {
        return Vec::new();
    }
    // 1-based bounds from the selection rule, converted to a 0-based range.
    let (lo, hi) = if m % 2 == 1 {
        ((m - 1) / 2 + 2, n - (m - 1) / 2)
    } else {
        (m / 2 + 1, n - m / 2)
    };
    marginal[(lo - 1)..hi].to_vec()
}

/// Sample quantile by linear interpolation of order statistics, `h = (N-1)p`.
pub fn sample_quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Marginal knots for a single data column: `n_knots` evenly spaced quantiles
/// (probabilities `i/(n_knots-1)`) with duplicate values collapsed.
///
/// Errors when the column has non-finite entries, fewer than 2 distinct values,
/// or when collapsing leaves fewer than `m + 1` knots.
pub fn marginal_knots_from_column(
    column: &[f64],
    n_knots: usize,
    m: usize,
    name: &str,
) -> Result<Vec<f64>> {
    if n_knots < m + 1 {
        return Err(Error::KnotBudgetTooSmall { n_knots, m });
    }
    if let Some(row) = column.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteData {
            name: name.to_string(),
            row,
        });
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut distinct = sorted.clone();
    distinct.dedup();
    // Quantile interpolation can invent values between two observed levels,
    // so the distinct-value requirement is checked on the data itself: a
    // covariate with d distinct values supports at most d genuine knots.
    if distinct.len() < (m + 1).max(2) {
        return Err(Error::TooFewDistinctValues {
            name: name.to_string(),
            distinct: distinct.len(),
            m,
            need: m + 1,
        });
    }
    // A column with at most `n_knots` distinct values gets a knot at every
    // observed level; interpolated quantiles would otherwise place knots
    // between levels, where they separate no data and duplicate basis
    // columns. Richer columns get evenly spaced sample quantiles.
    if distinct.len() <= n_knots {
        return Ok(distinct);
    }
    let mut knots: Vec<f64> = (0..n_knots)
        .map(|i| sample_quantile(&sorted, i as f64 / (n_knots - 1) as f64))
        .collect();
    knots.dedup();
    if knots.len() < m + 1 {
        return Err(Error::TooFewDistinctValues {
            name: name.to_string(),
            distinct: distinct.len(),
            m,
            need: m + 1,
        });
    }
    Ok(knots)
}

/// Build a [`KnotSystem`] from a data matrix laid out row-major
/// (`x[row * p + j]`), failing on the first unusable covariate.
pub fn build_knots(x: &[f64], n: usize, p: usize, n_knots: usize, m: usize) -> Result<KnotSystem> {
    if x.len() != n * p {
        return Err(Error::DimensionMismatch(format!(
            "data has {} value(s), expected {} x {}",
            x.len(),
            n,
            p
        )));
    }
    let mut marginal = Vec::with_capacity(p);
    for j in 0..p {
        let col: Vec<f64> = (0..n).map(|i| x[i * p + j]).collect();
        marginal.push(marginal_knots_from_column(
            &col,
            n_knots,
            m,
            &format!("x{}", j + 1),
        )?);
    }
    Ok(KnotSystem { m, marginal })
}
