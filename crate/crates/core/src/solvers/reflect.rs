//! Reflection of a constant-coefficient mixed problem to the full ball:
//! after normalizing `a^{nn} = 1`, the mixed entries `a^{1n}`, `a^{n1}` change
//! sign below the flat part and the data are extended evenly.

use std::sync::Arc;

use serde::Serialize;

use super::coeffs::CoefficientField;
use super::mixed::{solve_nd, NdDomain};
use super::solution::{DiscreteSolution, NodeTag};
use crate::error::{Error, Result};
use crate::field::{ScalarFn, M2, P2};

#[derive(Clone)]
pub struct Reflected {
    /// Normalized matrix used on `{xⁿ ≥ 0}`.
    pub upper: M2,
    pub a: CoefficientField,
    pub f: ScalarFn,
    /// Factor the equation was divided by.
    pub scale: f64,
}

/// Builds `Â` and the even extension `f̂` on `B(0, 1)`.
pub fn reflect_extend(a: M2, f: ScalarFn) -> Result<Reflected> {
    if a[1][1] <= 0.0 {
        return Err(Error::param(format!("a^nn = {} must be positive", a[1][1])));
    }
    if (a[0][1] - a[1][0]).abs() > 1e-14 {
        return Err(Error::param("reflection expects a symmetric matrix"));
    }
    let scale = a[1][1];
    let upper = [[a[0][0] / scale, a[0][1] / scale], [a[1][0] / scale, 1.0]];
    let lower = [[upper[0][0], -upper[0][1]], [-upper[1][0], 1.0]];
    let ahat = CoefficientField::new(Arc::new(move |p: P2| if p[1] >= 0.0 { upper } else { lower }));
    let lam = crate::field::sym_eigenvalues(&upper).0;
    let ahat = ahat.with_bounds(lam, crate::field::frob(&upper));
    let fhat: ScalarFn = Arc::new(move |p: P2| f([p[0], p[1].abs()]) / scale);
    Ok(Reflected { upper, a: CoefficientField { symmetric: true, ..ahat }, f: fhat, scale })
}

/// `max |û(x′, xⁿ) − û(x′, −xⁿ)|` over node pairs of a solution on a ball grid.
pub fn asymmetry(sol: &DiscreteSolution) -> f64 {
    let g = sol.grid();
    let mid = (g.n[1] - 1) / 2;
    let mut worst = 0.0f64;
    for j in 1..=mid {
        for i in 0..g.n[0] {
            let (up, down) = (g.index(i, mid + j), g.index(i, mid - j));
            if sol.u.mask[up] && sol.u.mask[down] {
                worst = worst.max((sol.u.values[up] - sol.u.values[down]).abs());
            }
        }
    }
    worst
}

/// `max |D_n û|` on the trace `xⁿ = 0`, one-sided from the upper half.
/// The central difference vanishes for an even solution and is covered by
/// [`asymmetry`].
pub fn flat_trace_normal_derivative(sol: &DiscreteSolution) -> f64 {
    let g = sol.grid();
    let mid = (g.n[1] - 1) / 2;
    (0..g.n[0])
        .filter_map(|i| {
            let (up, at) = (g.index(i, mid + 1), g.index(i, mid));
            (sol.u.mask[up] && sol.u.mask[at] && sol.tags[up] != NodeTag::Dirichlet && sol.tags[at] != NodeTag::Dirichlet)
                .then(|| ((sol.u.values[up] - sol.u.values[at]) / g.h[1]).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct ReflectionRow {
    pub cells: usize,
    pub h: f64,
    pub asymmetry: f64,
    /// `10·(1e−10 + h²‖f‖∞)`.
    pub asymmetry_bound: f64,
    pub trace_dn: f64,
    /// Largest difference from the directly solved mixed problem.
    pub mixed_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReflectionStudy {
    pub rows: Vec<ReflectionRow>,
    /// Ratios of `trace_dn` between consecutive refinements.
    pub trace_ratios: Vec<f64>,
    pub even: bool,
}

/// Solves the reflected problem on each grid and compares it with the
/// mixed problem on the upper half.
pub fn reflection_study(a: M2, f: ScalarFn, f_sup: f64, grids: &[usize]) -> Result<ReflectionStudy> {
    let refl = reflect_extend(a, f.clone())?;
    let mixed_coeffs = CoefficientField::constant(refl.upper);
    let f_upper: ScalarFn = {
        let s = refl.scale;
        Arc::new(move |p: P2| f(p) / s)
    };
    let mut rows = Vec::new();
    for &cells in grids {
        let full = solve_nd(&refl.a, &refl.f, NdDomain::Ball { center: [0.0, 0.0], radius: 1.0 }, cells, None)?;
        let upper = solve_nd(&mixed_coeffs, &f_upper, NdDomain::HalfBall { center: [0.0, 0.0], radius: 1.0 }, cells, None)?;
        let mid = (full.grid().n[1] - 1) / 2;
        let mut gap = 0.0f64;
        for (i, j, _, v) in upper.u.valid_nodes() {
            let k = full.grid().index(i, j + mid);
            if full.u.mask[k] {
                gap = gap.max((full.u.values[k] - v).abs());
            }
        }
        let h = full.h();
        rows.push(ReflectionRow {
            cells,
            h,
            asymmetry: asymmetry(&full),
            asymmetry_bound: 10.0 * (1e-10 + h * h * f_sup / refl.scale),
            trace_dn: flat_trace_normal_derivative(&full),
            mixed_gap: gap,
        });
    }
    let trace_ratios = rows.windows(2).map(|w| w[0].trace_dn / w[1].trace_dn).collect();
    let even = rows.iter().all(|r| r.asymmetry <= r.asymmetry_bound);
    Ok(ReflectionStudy { rows, trace_ratios, even })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_is_unchanged() {
        let r = reflect_extend([[2.0, 0.0], [0.0, 1.0]], Arc::new(|_| 1.0)).unwrap();
        assert_eq!(r.a.a_at([0.3, -0.4]), [[2.0, 0.0], [0.0, 1.0]]);
        assert_eq!(r.a.a_at([0.3, 0.4]), [[2.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn even_data_is_unchanged() {
        let f: ScalarFn = Arc::new(|p: P2| 1.0 + p[0] * p[0] + p[1] * p[1]);
        let r = reflect_extend([[1.0, 0.3], [0.3, 1.0]], f.clone()).unwrap();
        for p in [[0.1, 0.5], [0.2, -0.3], [-0.7, 0.0]] {
            assert_eq!((r.f)(p), f(p));
        }
        assert_eq!(r.a.a_at([0.0, -0.1])[0][1], -0.3);
        assert_eq!(r.a.a_at([0.0, 0.0])[0][1], 0.3);
    }

    #[test]
    fn normalization_and_rejection() {
        let r = reflect_extend([[4.0, 1.0], [1.0, 2.0]], Arc::new(|_| 2.0)).unwrap();
        assert_eq!(r.upper, [[2.0, 0.5], [0.5, 1.0]]);
        assert_eq!((r.f)([0.0, 0.5]), 1.0);
        assert!(reflect_extend([[1.0, 0.0], [0.0, -1.0]], Arc::new(|_| 0.0)).is_err());
    }

    #[test]
    fn coarse_reflection_is_nearly_even() {
        let s = reflection_study([[1.0, 0.3], [0.3, 1.0]], Arc::new(|_| 1.0), 1.0, &[16, 32]).unwrap();
        assert!(s.even, "{:?}", s.rows);
        assert!(s.rows.iter().all(|r| r.mixed_gap < 1e-10));
        assert!(s.trace_ratios[0] > 1.5, "{:?}", s.trace_ratios);
    }
}
