//! Exact univariate function arithmetic for spline basis construction.
//!
//! A [`PiecewisePoly`] is a polynomial plus a sum of truncated-power terms
//! `c * (z - t)_+^e`, with the convention `(0)_+^0 = 1` (steps are
//! right-continuous at their knot). The basis transforms only ever need
//! differentiation, antidifferentiation, evaluation, scalar combinations, and
//! adding monomials, so everything stays closed-form.

use crate::knots::Projection;

/// One truncated-power term `coef * (z - knot)_+^exp`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncTerm {
    pub knot: f64,
    pub exp: u32,
    pub coef: f64,
}

/// Polynomial part (coefficients of `z^k`) plus truncated-power terms.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PiecewisePoly {
    pub poly: Vec<f64>,
    pub trunc: Vec<TruncTerm>,
}

impl PiecewisePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(power: usize, coef: f64) -> Self {
        let mut poly = vec![0.0; power + 1];
        poly[power] = coef;
        PiecewisePoly {
            poly,
            trunc: Vec::new(),
        }
    }

    pub fn truncated(knot: f64, exp: u32, coef: f64) -> Self {
        PiecewisePoly {
            poly: Vec::new(),
            trunc: vec![TruncTerm { knot, exp, coef }],
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        let mut v = 0.0;
        for &c in self.poly.iter().rev() {
            v = v * z + c;
        }
        for t in &self.trunc {
            let d = z - t.knot;
            if d >= 0.0 {
                v += t.coef * d.powi(t.exp as i32);
            }
        }
        v
    }

    /// Pointwise derivative; exponent-0 truncated terms differentiate to zero
    /// almost everywhere and are dropped.
    pub fn derivative(&self) -> Self {
        let poly = if self.poly.len() <= 1 {
            Vec::new()
        } else {
            self.poly[1..]
                .iter()
                .enumerate()
                .map(|(k, &c)| c * (k as f64 + 1.0))
                .collect()
        };
        let trunc = self
            .trunc
            .iter()
            .filter(|t| t.exp >= 1)
            .map(|t| TruncTerm {
                knot: t.knot,
                exp: t.exp - 1,
                coef: t.coef * t.exp as f64,
            })
            .collect();
        PiecewisePoly { poly, trunc }
    }

    /// Antiderivative vanishing at the knot for truncated terms and with zero
    /// constant term for the polynomial part.
    pub fn antiderivative(&self) -> Self {
        let mut poly = vec![0.0; self.poly.len() + 1];
        for (k, &c) in self.poly.iter().enumerate() {
            poly[k + 1] = c / (k as f64 + 1.0);
        }
        if self.poly.is_empty() {
            poly.clear();
        }
        let trunc = self
            .trunc
            .iter()
            .map(|t| TruncTerm {
                knot: t.knot,
                exp: t.exp + 1,
                coef: t.coef / (t.exp as f64 + 1.0),
            })
            .collect();
        PiecewisePoly { poly, trunc }
    }

    pub fn add_monomial(&mut self, power: usize, coef: f64) {
        if self.poly.len() <= power {
            self.poly.resize(power + 1, 0.0);
        }
        self.poly[power] += coef;
    }

    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        if self.poly.len() < other.poly.len() {
            self.poly.resize(other.poly.len(), 0.0);
        }
        for (k, &c) in other.poly.iter().enumerate() {
            self.poly[k] += scale * c;
        }
        for t in &other.trunc {
            self.trunc.push(TruncTerm {
                knot: t.knot,
                exp: t.exp,
                coef: scale * t.coef,
            });
        }
    }

    /// Projection value `H f`: mean over the marginal knots, or the value at
    /// the fixed knot.
    pub fn project(&self, knots: &[f64], projection: &Projection, covariate: usize) -> f64 {
        match projection.fixed_index(covariate) {
            Some(i) => self.eval(knots[i]),
            None => knots.iter().map(|&z| self.eval(z)).sum::<f64>() / knots.len() as f64,
        }
    }
}
