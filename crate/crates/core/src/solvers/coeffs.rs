//! Coefficients of the divergence and nondivergence operators.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{frob, sym_eigenvalues, Grid2, MatrixField, Region, ScalarFn, TensorFn, VectorFn, M2, P2};

/// `A`, the divergence lower-order term `a⃗`, the conormal zeroth-order term
/// `a⁰`, and the drift/potential `b⃗`, `c`. `λ` and `Λ` are the declared
/// ellipticity and Frobenius bounds.
#[derive(Clone)]
pub struct CoefficientField {
    pub a: TensorFn,
    pub a_vec: Option<VectorFn>,
    pub a0: Option<ScalarFn>,
    pub b: Option<VectorFn>,
    pub c: Option<ScalarFn>,
    pub lambda: f64,
    pub big_lambda: f64,
    pub symmetric: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EllipticitySummary {
    pub min_eigenvalue: f64,
    pub max_frobenius: f64,
    pub max_asymmetry: f64,
    pub nodes: usize,
}

impl CoefficientField {
    /// Principal part only; `λ`, `Λ` are taken from `a(origin)` with a
    /// factor-two margin and should be tightened with [`Self::with_bounds`].
    pub fn new(a: TensorFn) -> Self {
        let m = a([0.0, 0.0]);
        let (lo, _) = sym_eigenvalues(&m);
        let asym = (m[0][1] - m[1][0]).abs();
        Self { a, a_vec: None, a0: None, b: None, c: None, lambda: 0.5 * lo, big_lambda: 2.0 * frob(&m), symmetric: asym == 0.0 }
    }

    pub fn constant(m: M2) -> Self {
        let (lo, _) = sym_eigenvalues(&m);
        Self {
            a: Arc::new(move |_| m),
            a_vec: None,
            a0: None,
            b: None,
            c: None,
            lambda: lo,
            big_lambda: frob(&m),
            symmetric: m[0][1] == m[1][0],
        }
    }

    pub fn identity() -> Self {
        Self::constant([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn with_bounds(mut self, lambda: f64, big_lambda: f64) -> Self {
        self.lambda = lambda;
        self.big_lambda = big_lambda;
        self
    }

    pub fn with_a_vec(mut self, f: VectorFn) -> Self {
        self.a_vec = Some(f);
        self
    }

    pub fn with_a0(mut self, f: ScalarFn) -> Self {
        self.a0 = Some(f);
        self
    }

    pub fn with_b(mut self, f: VectorFn) -> Self {
        self.b = Some(f);
        self
    }

    pub fn with_c(mut self, f: ScalarFn) -> Self {
        self.c = Some(f);
        self
    }

    #[inline]
    pub fn a_at(&self, p: P2) -> M2 {
        (self.a)(p)
    }

    #[inline]
    pub fn a_vec_at(&self, p: P2) -> P2 {
        self.a_vec.as_ref().map_or([0.0; 2], |f| f(p))
    }

    #[inline]
    pub fn a0_at(&self, p: P2) -> f64 {
        self.a0.as_ref().map_or(0.0, |f| f(p))
    }

    #[inline]
    pub fn b_at(&self, p: P2) -> P2 {
        self.b.as_ref().map_or([0.0; 2], |f| f(p))
    }

    #[inline]
    pub fn c_at(&self, p: P2) -> f64 {
        self.c.as_ref().map_or(0.0, |f| f(p))
    }

    /// True when no lower-order term is present, so that a pure conormal
    /// problem is determined only up to constants.
    pub fn principal_only(&self) -> bool {
        self.a_vec.is_none() && self.a0.is_none() && self.b.is_none() && self.c.is_none()
    }

    /// Samples `A` on the nodes of `grid` inside `region`.
    pub fn sample(&self, grid: Grid2, region: &dyn Region) -> MatrixField {
        MatrixField::from_fn_in(grid, region, |p| self.a_at(p))
    }

    /// Checks `ξᵀAξ ≥ λ|ξ|²`, `|A| ≤ Λ` and, if declared, symmetry at every
    /// node of `grid` inside `region`.
    pub fn validate(&self, grid: Grid2, region: &dyn Region) -> Result<EllipticitySummary> {
        let mut s = EllipticitySummary { min_eigenvalue: f64::INFINITY, max_frobenius: 0.0, max_asymmetry: 0.0, nodes: 0 };
        for (_, _, p) in grid.nodes() {
            if !region.contains(p) {
                continue;
            }
            let m = self.a_at(p);
            let (lo, _) = sym_eigenvalues(&m);
            s.min_eigenvalue = s.min_eigenvalue.min(lo);
            s.max_frobenius = s.max_frobenius.max(frob(&m));
            s.max_asymmetry = s.max_asymmetry.max((m[0][1] - m[1][0]).abs());
            s.nodes += 1;
            if !(lo >= self.lambda * (1.0 - 1e-12)) {
                return Err(Error::param(format!("ellipticity {lo} < λ = {} at {p:?}", self.lambda)));
            }
            if !(frob(&m) <= self.big_lambda * (1.0 + 1e-12)) {
                return Err(Error::param(format!("|A| = {} > Λ = {} at {p:?}", frob(&m), self.big_lambda)));
            }
            if self.symmetric && (m[0][1] - m[1][0]).abs() > 1e-14 {
                return Err(Error::param(format!("A is not symmetric at {p:?}")));
            }
        }
        Ok(s)
    }
}

impl std::fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientField")
            .field("a0", &self.a_at([0.0, 0.0]))
            .field("lambda", &self.lambda)
            .field("big_lambda", &self.big_lambda)
            .field("symmetric", &self.symmetric)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Rect;

    #[test]
    fn constant_bounds() {
        let c = CoefficientField::constant([[2.0, 0.0], [0.0, 1.0]]);
        assert_eq!(c.lambda, 1.0);
        assert!((c.big_lambda - 5f64.sqrt()).abs() < 1e-15);
        let g = Grid2::square([0.0, 0.0], [1.0, 1.0], 4);
        let s = c.validate(g, &Rect { lo: [0.0, 0.0], hi: [1.0, 1.0] }).unwrap();
        assert_eq!(s.nodes, 25);
        assert!(c.principal_only());
    }

    #[test]
    fn ellipticity_violation_is_reported() {
        let c = CoefficientField::new(Arc::new(|p: P2| [[1.0 + p[0], 0.0], [0.0, 1.0]])).with_bounds(0.5, 3.0);
        let g = Grid2::square([-1.0, -1.0], [1.0, 1.0], 4);
        assert!(c.validate(g, &Rect { lo: [-1.0, -1.0], hi: [1.0, 1.0] }).is_err());
        assert!(c.validate(g, &Rect { lo: [0.0, -1.0], hi: [1.0, 1.0] }).is_ok());
    }
}
