//! Grid-level total-variation functionals and the ANOVA decomposition.
//!
//! A [`GridFn`] holds values of a function on a full tensor grid of marginal
//! knots. [`raw_tv`] is the d-way total variation: the sum over grid cells of
//! the absolute alternating corner sum, which vanishes for functions of fewer
//! than d of the coordinates. [`htv`] is the hierarchical total variation: a
//! weighted sum of raw total variations of marginalized (order 1) or
//! differentiated-and-marginalized (order 2) pieces, with the order-k weight
//! `rho[k-1]` applied to the k-variate pieces. [`anova_decompose`] splits a
//! grid function into its 2^d projection components, and
//! [`htv_via_components`] evaluates the order-1 functional component by
//! component, which agrees with [`htv`].

use crate::error::{Error, Result};
use crate::knots::Projection;

/// Function values on a full tensor grid, row-major with the last coordinate
/// fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    knots: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl GridFn {
    pub fn new(knots: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.iter().any(|k| k.is_empty()) {
            return Err(Error::EmptyGrid);
        }
        for (j, ks) in knots.iter().enumerate() {
            if ks.iter().any(|v| !v.is_finite()) || ks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::BadGridKnots { coord: j });
            }
        }
        let want: usize = knots.iter().map(|k| k.len()).product();
        if values.len() != want {
            return Err(Error::GridShapeMismatch {
                got: values.len(),
                want,
            });
        }
        Ok(GridFn { knots, values })
    }

    /// Evaluate `f` at every grid point.
    pub fn from_fn(knots: Vec<Vec<f64>>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let dims: Vec<usize> = knots.iter().map(|k| k.len()).collect();
        let total: usize = dims.iter().product();
        let d = knots.len();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        let mut point = vec![0.0f64; d];
        for _ in 0..total {
            for j in 0..d {
                point[j] = knots[j][idx[j]];
            }
            values.push(f(&point));
            for j in (0..d).rev() {
                idx[j] += 1;
                if idx[j] < dims[j] {
                    break;
                }
                idx[j] = 0;
            }
        }
        GridFn::new(knots, values)
    }

    pub fn dim(&self) -> usize {
        self.knots.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.knots.iter().map(|k| k.len()).collect()
    }

    pub fn knots(&self) -> &[Vec<f64>] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn strides(&self) -> Vec<usize> {
        let dims = self.dims();
        let d = dims.len();
        let mut s = vec![1usize; d];
        for j in (0..d.saturating_sub(1)).rev() {
            s[j] = s[j + 1] * dims[j + 1];
        }
        s
    }

    pub fn value(&self, idx: &[usize]) -> f64 {
        let strides = self.strides();
        let flat: usize = idx.iter().zip(&strides).map(|(&i, &s)| i * s).sum();
        self.values[flat]
    }

    /// Replace values along `axis` by the projection `H_axis` (knot mean or
    /// the value at the fixed knot), keeping the grid shape.
    pub fn apply_h(&self, axis: usize, projection: &Projection) -> GridFn {
        self.transform_axis(axis, projection, false)
    }

    /// Apply `I - H_axis` along `axis`, keeping the grid shape.
    pub fn apply_one_minus_h(&self, axis: usize, projection: &Projection) -> GridFn {
        self.transform_axis(axis, projection, true)
    }

    fn transform_axis(&self, axis: usize, projection: &Projection, subtract: bool) -> GridFn {
        let dims = self.dims();
        let strides = self.strides();
        let n_axis = dims[axis];
        let stride = strides[axis];
        let mut values = self.values.clone();
        let total = self.values.len();
        let outer = total / n_axis;
        // Enumerate the start of every line along `axis`.
        for o in 0..outer {
            // Decompose o over the remaining axes to get the base offset.
            let mut rem = o;
            let mut base = 0usize;
            for (j, &stride_j) in strides.iter().enumerate() {
                if j == axis {
                    continue;
                }
                let extent: usize = dims
                    .iter()
                    .enumerate()
                    .skip(j + 1)
                    .filter(|(jj, _)| *jj != axis)
                    .map(|(_, &d)| d)
                    .product();
                let pos = rem / extent.max(1);
                rem %= extent.max(1);
                base += pos * stride_j;
            }
            let h = match projection.fixed_index(axis) {
                Some(i) => self.values[base + i * stride],
                None => {
                    let mut s = 0.0;
                    for i in 0..n_axis {
                        s += self.values[base + i * stride];
                    }
                    s / n_axis as f64
                }
            };
            for i in 0..n_axis {
                let v = &mut values[base + i * stride];
                if subtract {
                    *v = self.values[base + i * stride] - h;
                } else {
                    *v = h;
                }
            }
        }
        GridFn {
            knots: self.knots.clone(),
            values,
        }
    }

    /// Restrict to the coordinates in `subset` (the function must be constant
    /// in the others; they are sliced at index 0).
    pub fn restrict(&self, subset: &[usize]) -> GridFn {
        if subset.is_empty() {
            return GridFn {
                knots: vec![vec![0.0]],
                values: vec![self.values[0]],
            };
        }
        let dims = self.dims();
        let strides = self.strides();
        let sub_dims: Vec<usize> = subset.iter().map(|&j| dims[j]).collect();
        let total: usize = sub_dims.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; subset.len()];
        for _ in 0..total {
            let flat: usize = idx.iter().zip(subset).map(|(&i, &j)| i * strides[j]).sum();
            values.push(self.values[flat]);
            for l in (0..subset.len()).rev() {
                idx[l] += 1;
                if idx[l] < sub_dims[l] {
                    break;
                }
                idx[l] = 0;
            }
        }
        GridFn {
            knots: subset.iter().map(|&j| self.knots[j].clone()).collect(),
            values,
        }
    }
}

/// d-way total variation: sum over grid cells of the absolute alternating
/// corner sum. Grids with fewer than two knots in some coordinate have no
/// cells and zero variation.
pub fn raw_tv(g: &GridFn) -> Result<f64> {
    let dims = g.dims();
    let d = dims.len();
    if d == 0 {
        return Err(Error::EmptyGrid);
    }
    if dims.iter().any(|&n| n < 2) {
        return Ok(0.0);
    }
    let strides = g.strides();
    let cells: usize = dims.iter().map(|&n| n - 1).product();
    let corners = 1usize << d;
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    for _ in 0..cells {
        let base: usize = idx.iter().zip(&strides).map(|(&i, &s)| i * s).sum();
        let mut delta = 0.0;
        for corner in 0..corners {
            let mut offset = 0usize;
            let mut ups = 0u32;
            for (j, &stride_j) in strides.iter().enumerate() {
                if corner >> j & 1 == 1 {
                    offset += stride_j;
                    ups += 1;
                }
            }
            let sign = if (d as u32 - ups) % 2 == 0 { 1.0 } else { -1.0 };
            delta += sign * g.values()[base + offset];
        }
        total += delta.abs();
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < dims[j] - 1 {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(total)
}

/// A fixed-point projection must name a valid knot index for every grid
/// coordinate.
fn validate_projection(g: &GridFn, projection: &Projection) -> Result<()> {
    if let Projection::FixedPoint(idx) = projection {
        if idx.len() < g.dim() {
            return Err(Error::DimensionMismatch(format!(
                "fixed projection has {} index(es) for {} coordinate(s)",
                idx.len(),
                g.dim()
            )));
        }
        for (j, (&i, ks)) in idx.iter().zip(g.knots()).enumerate() {
            if i >= ks.len() {
                return Err(Error::FixedKnotOutOfRange {
                    name: format!("x{}", j + 1),
                    index: i,
                    n: ks.len(),
                });
            }
        }
    }
    Ok(())
}

/// All 2^d projection components of a grid function, size-major then
/// lexicographic (the empty subset first). Component `S` applies `I - H_j`
/// for `j` in `S` and `H_j` for the rest; it is constant in the non-`S`
/// coordinates and `H_j`-degenerate in each `j` of `S`, and the components
/// sum to the original function.
pub fn anova_decompose(g: &GridFn, projection: &Projection) -> Result<Vec<(Vec<usize>, GridFn)>> {
    validate_projection(g, projection)?;
    let d = g.dim();
    let mut subsets: Vec<Vec<usize>> = vec![Vec::new()];
    subsets.extend(crate::basis::enumerate_blocks(d, d));
    Ok(subsets
        .into_iter()
        .map(|s| {
            let mut h = g.clone();
            for j in 0..d {
                h = if s.contains(&j) {
                    h.apply_one_minus_h(j, projection)
                } else {
                    h.apply_h(j, projection)
                };
            }
            (s, h)
        })
        .collect())
}

/// First-difference slopes along `axis` of the grid interpolant; output has
/// one fewer index along that axis.
fn slopes(
    values: &[f64],
    dims: &[usize],
    knots: &[Vec<f64>],
    axis: usize,
) -> (Vec<f64>, Vec<usize>) {
    let d = dims.len();
    let mut strides = vec![1usize; d];
    for j in (0..d - 1).rev() {
        strides[j] = strides[j + 1] * dims[j + 1];
    }
    let mut out_dims = dims.to_vec();
    out_dims[axis] -= 1;
    let total: usize = out_dims.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let base: usize = idx.iter().zip(&strides).map(|(&i, &s)| i * s).sum();
        let step = knots[axis][idx[axis] + 1] - knots[axis][idx[axis]];
        out.push((values[base + strides[axis]] - values[base]) / step);
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < out_dims[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    (out, out_dims)
}

/// Project a sequence indexed by cells of a coordinate onto that coordinate's
/// marginal knots and apply `H`: knot `i` reads cell `min(i, n_cells - 1)`
/// (first derivatives of the grid interpolant are right-continuous, so the
/// last knot takes the last cell's value).
fn h_over_cells(
    cell_value: impl Fn(usize) -> f64,
    n_knots: usize,
    n_cells: usize,
    projection: &Projection,
    axis: usize,
) -> f64 {
    match projection.fixed_index(axis) {
        Some(i) => cell_value(i.min(n_cells - 1)),
        None => {
            let mut s = 0.0;
            for i in 0..n_knots {
                s += cell_value(i.min(n_cells - 1));
            }
            s / n_knots as f64
        }
    }
}

fn h_over_knots(
    knot_value: impl Fn(usize) -> f64,
    n_knots: usize,
    projection: &Projection,
    axis: usize,
) -> f64 {
    match projection.fixed_index(axis) {
        Some(i) => knot_value(i),
        None => (0..n_knots).map(&knot_value).sum::<f64>() / n_knots as f64,
    }
}

fn tv1(seq: &[f64]) -> f64 {
    seq.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

fn tv2(field: &[f64], n1: usize, n2: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..n1.saturating_sub(1) {
        for j in 0..n2.saturating_sub(1) {
            let a = field[i * n2 + j];
            let b = field[i * n2 + j + 1];
            let c = field[(i + 1) * n2 + j];
            let e = field[(i + 1) * n2 + j + 1];
            total += (e - c - b + a).abs();
        }
    }
    total
}

/// Hierarchical total variation of a grid function at order `m` with
/// interaction weights `rho[k-1]` for order-k pieces.
///
/// Order 1 is supported for up to three coordinates: the weighted sum over
/// nonempty subsets `S` of the |S|-way variation of the function marginalized
/// (via `H_j`) over the other coordinates. Order 2 is supported for up to two
/// coordinates and evaluates variation of first-derivative fields of the grid
/// interpolant, computed by exact divided differences:
///
/// - one coordinate: `rho[0] * TV(D g)`;
/// - two coordinates: `rho[1] * TV2(D1 D2 g)` plus `rho[0]` times the four
///   one-way variations `TV1(H1 D1D2 g)`, `TV1(H2 D1D2 g)`, `TV1(H1 D2 g)`,
///   `TV1(H2 D1 g)`, where derivative fields are projected onto marginal
///   knots right-continuously before applying `H`.
pub fn htv(g: &GridFn, m: usize, rho: &[f64], projection: &Projection) -> Result<f64> {
    let d = g.dim();
    let dims = g.dims();
    if rho.len() < d {
        return Err(Error::DimensionMismatch(format!(
            "need {} interaction weight(s), got {}",
            d,
            rho.len()
        )));
    }
    validate_projection(g, projection)?;
    match m {
        1 => {
            if d > 3 {
                return Err(Error::UnsupportedCase(format!(
                    "order-1 functional implemented for up to 3 coordinates, got {d}"
                )));
            }
            let mut total = 0.0;
            for subset in crate::basis::enumerate_blocks(d, d) {
                let mut h = g.clone();
                for j in 0..d {
                    if !subset.contains(&j) {
                        h = h.apply_h(j, projection);
                    }
                }
                total += rho[subset.len() - 1] * raw_tv(&h.restrict(&subset))?;
            }
            Ok(total)
        }
        2 => match d {
            1 => {
                if dims[0] < 2 {
                    return Ok(0.0);
                }
                let (s, _) = slopes(g.values(), &dims, g.knots(), 0);
                Ok(rho[0] * tv1(&s))
            }
            2 => {
                if dims.iter().any(|&n| n < 2) {
                    return Err(Error::UnsupportedCase(
                        "order-2 functional needs at least two knots per coordinate".to_string(),
                    ));
                }
                let (n1, n2) = (dims[0], dims[1]);
                let (s1, s1_dims) = slopes(g.values(), &dims, g.knots(), 0); // (n1-1) x n2
                let (s2, _) = slopes(g.values(), &dims, g.knots(), 1); // n1 x (n2-1)
                let (cross, _) = slopes(&s1, &s1_dims, g.knots(), 1); // (n1-1) x (n2-1)

                let mut total = rho[1] * tv2(&cross, n1 - 1, n2 - 1);

                // H over the first coordinate of the cross field, then TV in
                // the second coordinate's cells.
                let h1_cross: Vec<f64> = (0..n2 - 1)
                    .map(|j| h_over_cells(|i| cross[i * (n2 - 1) + j], n1, n1 - 1, projection, 0))
                    .collect();
                total += rho[0] * tv1(&h1_cross);

                let h2_cross: Vec<f64> = (0..n1 - 1)
                    .map(|i| h_over_cells(|j| cross[i * (n2 - 1) + j], n2, n2 - 1, projection, 1))
                    .collect();
                total += rho[0] * tv1(&h2_cross);

                // H over the non-differentiated coordinate of each slope field.
                let h1_s2: Vec<f64> = (0..n2 - 1)
                    .map(|j| h_over_knots(|i| s2[i * (n2 - 1) + j], n1, projection, 0))
                    .collect();
                total += rho[0] * tv1(&h1_s2);

                let h2_s1: Vec<f64> = (0..n1 - 1)
                    .map(|i| h_over_knots(|j| s1[i * n2 + j], n2, projection, 1))
                    .collect();
                total += rho[0] * tv1(&h2_s1);

                Ok(total)
            }
            _ => Err(Error::UnsupportedCase(format!(
                "order-2 functional implemented for up to 2 coordinates, got {d}"
            ))),
        },
        _ => Err(Error::UnsupportedCase(format!(
            "hierarchical total variation implemented for orders 1 and 2, got {m}"
        ))),
    }
}

/// Order-1 hierarchical total variation evaluated through the ANOVA
/// decomposition: the weighted sum over nonempty subsets of the raw variation
/// of each component. Agrees with [`htv`] at order 1.
pub fn htv_via_components(g: &GridFn, rho: &[f64], projection: &Projection) -> Result<f64> {
    let d = g.dim();
    if d > 3 {
        return Err(Error::UnsupportedCase(format!(
            "order-1 functional implemented for up to 3 coordinates, got {d}"
        )));
    }
    if rho.len() < d {
        return Err(Error::DimensionMismatch(format!(
            "need {} interaction weight(s), got {}",
            d,
            rho.len()
        )));
    }
    validate_projection(g, projection)?;
    let mut total = 0.0;
    for (subset, component) in anova_decompose(g, projection)? {
        if subset.is_empty() {
            continue;
        }
        total += rho[subset.len() - 1] * raw_tv(&component.restrict(&subset))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{
        block_column_nus, build_psi_basis, column_degree, enumerate_blocks, evaluate_block_raw,
    };
    use crate::knots::KnotSystem;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_quarters() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
        ]
    }

    #[test]
    fn one_dim_variation_sums_absolute_moves() {
        let g = GridFn::new(vec![vec![0.0, 1.0, 2.0]], vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(raw_tv(&g).unwrap(), 3.0);
    }

    #[test]
    fn additive_function_has_zero_two_way_variation() {
        let g = GridFn::from_fn(grid_quarters(), |z| z[0] + z[1]).unwrap();
        assert_eq!(raw_tv(&g).unwrap(), 0.0);
    }

    #[test]
    fn simple_interactions_have_unit_two_way_variation() {
        let product = GridFn::from_fn(grid_quarters(), |z| z[0] * z[1]).unwrap();
        assert_eq!(raw_tv(&product).unwrap(), 1.0);
        let corner = GridFn::from_fn(grid_quarters(), |z| {
            if z[0] >= 0.5 && z[1] >= 0.5 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        assert_eq!(raw_tv(&corner).unwrap(), 1.0);
    }

    #[test]
    fn variation_ignores_lower_dimensional_additions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let knots: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                let mut k: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
                k.sort_by(|a, b| a.partial_cmp(b).unwrap());
                k.dedup();
                while k.len() < 4 {
                    k.push(k.last().unwrap() + rng.random::<f64>() + 0.1);
                }
                k
            })
            .collect();
        let base = GridFn::from_fn(knots.clone(), |z| {
            (3.1 * z[0]).sin() * (2.0 + z[1]).ln() * z[2]
        })
        .unwrap();
        let tv0 = raw_tv(&base).unwrap();
        // Add a function that ignores the last coordinate.
        let bumped = GridFn::from_fn(knots, |z| {
            (3.1 * z[0]).sin() * (2.0 + z[1]).ln() * z[2] + 5.0 * z[0] * z[0] - 2.0 * z[1]
        })
        .unwrap();
        let tv1 = raw_tv(&bumped).unwrap();
        assert!((tv0 - tv1).abs() < 1e-10, "{tv0} vs {tv1}");
    }

    #[test]
    fn variation_is_absolutely_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let knots = grid_quarters();
        let vals: Vec<f64> = (0..25).map(|_| rng.random::<f64>()).collect();
        let g = GridFn::new(knots.clone(), vals.clone()).unwrap();
        let scaled = GridFn::new(knots, vals.iter().map(|v| -2.5 * v).collect()).unwrap();
        let a = raw_tv(&g).unwrap();
        let b = raw_tv(&scaled).unwrap();
        assert!((b - 2.5 * a).abs() < 1e-12);
    }

    #[test]
    fn decomposition_of_additive_function_has_no_interaction() {
        let g = GridFn::from_fn(grid_quarters(), |z| 2.0 * z[0] - z[1] + 1.0).unwrap();
        for projection in [Projection::Averaging, Projection::FixedPoint(vec![0, 0])] {
            let comps = anova_decompose(&g, &projection).unwrap();
            let inter = comps
                .iter()
                .find(|(s, _)| s.as_slice() == [0, 1])
                .map(|(_, c)| c)
                .unwrap();
            assert!(inter.values().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn decomposition_of_constant_is_only_the_mean_term() {
        let g = GridFn::from_fn(grid_quarters(), |_| 4.25).unwrap();
        let comps = anova_decompose(&g, &Projection::Averaging).unwrap();
        for (s, c) in comps {
            if s.is_empty() {
                assert!(c.values().iter().all(|&v| (v - 4.25).abs() < 1e-12));
            } else {
                assert!(c.values().iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn decomposition_components_satisfy_side_conditions_and_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let knots = vec![vec![0.0, 0.2, 0.7, 1.0], vec![-1.0, 0.0, 0.5, 2.0]];
        let vals: Vec<f64> = (0..16).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let g = GridFn::new(knots, vals).unwrap();
        for projection in [Projection::Averaging, Projection::FixedPoint(vec![1, 2])] {
            let comps = anova_decompose(&g, &projection).unwrap();
            // The components sum back to the function.
            let mut sum = vec![0.0; g.values().len()];
            for (_, c) in &comps {
                for (acc, v) in sum.iter_mut().zip(c.values()) {
                    *acc += v;
                }
            }
            for (a, b) in sum.iter().zip(g.values()) {
                assert!((a - b).abs() < 1e-12);
            }
            // H_j annihilates each component containing j.
            for (s, c) in &comps {
                for &j in s {
                    let h = c.apply_h(j, &projection);
                    assert!(
                        h.values().iter().all(|v| v.abs() < 1e-12),
                        "subset {s:?} axis {j}"
                    );
                }
                // Components are constant in coordinates outside the subset.
                for j in 0..2 {
                    if !s.contains(&j) {
                        let centered = c.apply_one_minus_h(j, &projection);
                        assert!(centered.values().iter().all(|v| v.abs() < 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn order_one_single_coordinate_is_plain_variation() {
        let g = GridFn::new(vec![vec![0.0, 0.5, 1.0, 1.5]], vec![0.0, 2.0, 1.0, 1.0]).unwrap();
        let h = htv(&g, 1, &[0.7], &Projection::Averaging).unwrap();
        assert!((h - 0.7 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn order_two_single_coordinate_tracks_slope_changes() {
        // Hat function on [0, 1]: slopes +2 then -2.
        let g = GridFn::new(vec![vec![0.0, 0.5, 1.0]], vec![0.0, 1.0, 0.0]).unwrap();
        let h = htv(&g, 2, &[1.0], &Projection::Averaging).unwrap();
        assert!((h - 4.0).abs() < 1e-12);
    }

    #[test]
    fn order_one_matches_component_sum_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..60 {
            let d = 2 + (trial % 2);
            let knots: Vec<Vec<f64>> = (0..d)
                .map(|_| {
                    let n = rng.random_range(3..=5);
                    let mut cur = rng.random::<f64>();
                    (0..n)
                        .map(|_| {
                            cur += 0.05 + rng.random::<f64>();
                            cur
                        })
                        .collect()
                })
                .collect();
            let total: usize = knots.iter().map(|k| k.len()).product();
            let vals: Vec<f64> = (0..total)
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect();
            let g = GridFn::new(knots.clone(), vals).unwrap();
            let rho: Vec<f64> = (0..d).map(|_| 0.5 + rng.random::<f64>()).collect();
            let projection = if trial % 3 == 0 {
                Projection::Averaging
            } else {
                Projection::FixedPoint(knots.iter().map(|k| rng.random_range(0..k.len())).collect())
            };
            let a = htv(&g, 1, &rho, &projection).unwrap();
            let b = htv_via_components(&g, &rho, &projection).unwrap();
            assert!((a - b).abs() < 1e-9, "trial {trial}: {a} vs {b}");
        }
    }

    #[test]
    fn order_one_additive_function_pays_only_main_effect_weights() {
        let g = GridFn::from_fn(grid_quarters(), |z| 3.0 * z[0] - 2.0 * z[1]).unwrap();
        let h = htv(&g, 1, &[1.0, 10.0], &Projection::Averaging).unwrap();
        // TV of each marginalized main effect, no interaction term.
        assert!((h - 5.0).abs() < 1e-12, "{h}");
    }

    /// Evaluate a coefficient vector on the working tensor basis at every grid
    /// point and return both the grid function and the weighted l1 penalty
    /// implied by the per-column degrees.
    fn basis_expansion_on_grid(
        m: usize,
        knots: &[Vec<f64>],
        projection: &Projection,
        rho: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> (GridFn, f64) {
        let ks = KnotSystem::from_marginal_knots(m, knots.to_vec()).unwrap();
        let bases = build_psi_basis(&ks, projection).unwrap();
        let d = knots.len();
        let grid_points: usize = knots.iter().map(|k| k.len()).product();
        // Grid points in row-major order, one row per point.
        let mut x = Array2::<f64>::zeros((grid_points, d));
        let dims: Vec<usize> = knots.iter().map(|k| k.len()).collect();
        let mut idx = vec![0usize; d];
        for r in 0..grid_points {
            for j in 0..d {
                x[(r, j)] = knots[j][idx[j]];
            }
            for j in (0..d).rev() {
                idx[j] += 1;
                if idx[j] < dims[j] {
                    break;
                }
                idx[j] = 0;
            }
        }
        let intercept = rng.random::<f64>();
        let mut values = vec![intercept; grid_points];
        let mut penalty = 0.0;
        for block in enumerate_blocks(d, d) {
            let raw = evaluate_block_raw(&bases, &block, x.view()).unwrap();
            let nus = block_column_nus(&bases, &block);
            for (c, nu) in nus.iter().enumerate() {
                let beta = rng.random::<f64>() * 2.0 - 1.0;
                let degree = column_degree(m, nu);
                if degree > 0 {
                    penalty += rho[degree as usize - 1] * beta.abs();
                }
                for r in 0..grid_points {
                    values[r] += beta * raw[(r, c)];
                }
            }
        }
        (GridFn::new(knots.to_vec(), values).unwrap(), penalty)
    }

    #[test]
    fn functional_matches_weighted_l1_of_basis_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for m in 1..=2usize {
            for trial in 0..10 {
                let knots: Vec<Vec<f64>> = (0..2)
                    .map(|_| {
                        let n = rng.random_range(3..=5);
                        let mut cur = rng.random::<f64>() * 0.2;
                        (0..n)
                            .map(|_| {
                                cur += 0.1 + rng.random::<f64>() * 0.5;
                                cur
                            })
                            .collect()
                    })
                    .collect();
                let projection = if trial % 2 == 0 {
                    Projection::Averaging
                } else {
                    Projection::FixedPoint(vec![0, 0])
                };
                let rho = [0.6 + rng.random::<f64>(), 0.6 + rng.random::<f64>()];
                let (g, want) = basis_expansion_on_grid(m, &knots, &projection, &rho, &mut rng);
                let got = htv(&g, m, &rho, &projection).unwrap();
                assert!(
                    (got - want).abs() < 1e-8 * want.max(1.0),
                    "m={m} trial={trial}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn unsupported_cases_error_cleanly() {
        let g4 = GridFn::from_fn(vec![vec![0.0, 1.0]; 4], |z| z.iter().sum()).unwrap();
        assert!(matches!(
            htv(&g4, 1, &[1.0; 4], &Projection::Averaging),
            Err(Error::UnsupportedCase(_))
        ));
        let g3 = GridFn::from_fn(vec![vec![0.0, 1.0]; 3], |z| z.iter().sum()).unwrap();
        assert!(matches!(
            htv(&g3, 2, &[1.0; 3], &Projection::Averaging),
            Err(Error::UnsupportedCase(_))
        ));
        let g1 = GridFn::new(vec![vec![0.0, 1.0]], vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            htv(&g1, 3, &[1.0], &Projection::Averaging),
            Err(Error::UnsupportedCase(_))
        ));
    }

    #[test]
    fn grid_validation_rejects_bad_shapes() {
        assert!(matches!(GridFn::new(vec![], vec![]), Err(Error::EmptyGrid)));
        assert!(matches!(
            GridFn::new(vec![vec![0.0, 1.0]], vec![1.0]),
            Err(Error::GridShapeMismatch { .. })
        ));
        assert!(matches!(
            GridFn::new(vec![vec![0.0, 0.0]], vec![1.0, 2.0]),
            Err(Error::BadGridKnots { coord: 0 })
        ));
    }
}
