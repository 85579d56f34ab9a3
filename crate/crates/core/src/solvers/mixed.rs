//! Positive-type finite differences for `a^{ij}D_{ij}u + b^iD_iu + cu = f`
//! on a ball or half-ball: `u` given on the curved boundary and, on the
//! half-ball, `D_n u = 0` on the flat part by even ghost nodes.
//!
//! The principal part is split along lattice directions,
//! `(a¹¹−|a¹²|)∂²₁ + (a²²−|a¹²|)∂²₂ + |a¹²|∂²_{(1,±1)}`, and each directional
//! second difference uses Shortley–Weller weights where it is cut by the
//! curved boundary.

use serde::{Deserialize, Serialize};

use super::coeffs::CoefficientField;
use super::linsys::SparseBuilder;
use super::solution::{DiscreteSolution, NodeTag};
use crate::error::{Error, Result};
use crate::field::{Grid2, ScalarField, ScalarFn, P2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NdDomain {
    Ball { center: P2, radius: f64 },
    /// `B(c, R) ∩ {y ≥ c_y}`.
    HalfBall { center: P2, radius: f64 },
}

impl NdDomain {
    pub fn center(&self) -> P2 {
        match *self {
            NdDomain::Ball { center, .. } | NdDomain::HalfBall { center, .. } => center,
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            NdDomain::Ball { radius, .. } | NdDomain::HalfBall { radius, .. } => radius,
        }
    }

    pub fn is_half(&self) -> bool {
        matches!(self, NdDomain::HalfBall { .. })
    }

    /// Grid with `cells` intervals across the diameter (`cells/2` vertically
    /// on the half-ball).
    pub fn grid(&self, cells: usize) -> Result<Grid2> {
        if cells < 4 || cells % 2 != 0 {
            return Err(Error::param(format!("cells across the diameter must be even and ≥ 4, got {cells}")));
        }
        let [x, y] = self.center();
        let r = self.radius();
        Ok(if self.is_half() {
            Grid2::new([x - r, y], [x + r, y + r], [cells, cells / 2])
        } else {
            Grid2::new([x - r, y - r], [x + r, y + r], [cells, cells])
        })
    }
}

/// Fraction `s ∈ (0, 1]` of the step `p → p + d` at which the circle is met.
fn crossing(p: P2, d: P2, c: P2, r: f64) -> f64 {
    let w = [p[0] - c[0], p[1] - c[1]];
    let a = d[0] * d[0] + d[1] * d[1];
    let b = 2.0 * (w[0] * d[0] + w[1] * d[1]);
    let q = w[0] * w[0] + w[1] * w[1] - r * r;
    ((-b + (b * b - 4.0 * a * q).max(0.0).sqrt()) / (2.0 * a)).clamp(1e-12, 1.0)
}

/// Neighbour of a node: an unknown, or boundary data at fraction `s`.
enum Neighbour {
    Node(usize),
    Boundary { s: f64, value: f64 },
}

/// Solves the problem with `cells` intervals across the diameter. Boundary
/// values on the curved part default to zero.
pub fn solve_nd(
    coeffs: &CoefficientField,
    f: &ScalarFn,
    domain: NdDomain,
    cells: usize,
    dirichlet: Option<&ScalarFn>,
) -> Result<DiscreteSolution> {
    let grid = domain.grid(cells)?;
    let (c, r) = (domain.center(), domain.radius());
    let h = grid.h[0];
    let half = domain.is_half();
    let inside = |p: P2| (p[0] - c[0]).hypot(p[1] - c[1]) < r * (1.0 - 1e-12);
    let bval = |p: P2| {
        // Ghost points below the flat part read the data at the mirror point.
        let q = if half && p[1] < c[1] { [p[0], 2.0 * c[1] - p[1]] } else { p };
        dirichlet.map_or(0.0, |g| g(q))
    };
    let mut index = vec![None; grid.len()];
    let mut tags = vec![NodeTag::Outside; grid.len()];
    let mut n = 0usize;
    for (i, j, p) in grid.nodes() {
        let k = grid.index(i, j);
        if inside(p) {
            index[k] = Some(n);
            n += 1;
            tags[k] = if half && j == 0 { NodeTag::Neumann } else { NodeTag::Interior };
        } else if (p[0] - c[0]).hypot(p[1] - c[1]) <= r * (1.0 + 1e-12) {
            tags[k] = NodeTag::Dirichlet;
        }
    }
    let neighbour = |i: usize, j: usize, d: [isize; 2]| -> Neighbour {
        let p = grid.node(i, j);
        let (a, mut b) = (i as isize + d[0], j as isize + d[1]);
        if half && b < 0 {
            b = -b;
        }
        let target = (a >= 0 && b >= 0 && (a as usize) < grid.n[0] && (b as usize) < grid.n[1])
            .then(|| index[grid.index(a as usize, b as usize)])
            .flatten();
        match target {
            Some(k) => Neighbour::Node(k),
            None => {
                let step = [d[0] as f64 * h, d[1] as f64 * h];
                let s = crossing(p, step, c, r);
                Neighbour::Boundary { s, value: bval([p[0] + s * step[0], p[1] + s * step[1]]) }
            }
        }
    };
    let mut mat = SparseBuilder::new(n);
    let mut rhs = vec![0.0; n];
    let mut cut = 0usize;
    for (i, j, p) in grid.nodes() {
        let Some(row) = index[grid.index(i, j)] else { continue };
        let a = coeffs.a_at(p);
        let off = 0.5 * (a[0][1] + a[1][0]);
        let w1 = a[0][0] - off.abs();
        let w2 = a[1][1] - off.abs();
        if w1 < -1e-14 || w2 < -1e-14 {
            return Err(Error::param(format!("positive stencil needs a¹¹, a²² ≥ |a¹²| (A = {a:?} at {p:?})")));
        }
        let diag_dir = if off >= 0.0 { [1, 1] } else { [1, -1] };
        let b = coeffs.b_at(p);
        rhs[row] += f(p);
        mat.add(row, row, coeffs.c_at(p));
        let mut was_cut = false;
        for (d, w, bcoef) in [([1, 0], w1, b[0]), ([0, 1], w2, b[1]), (diag_dir, off.abs(), 0.0)] {
            if w == 0.0 && bcoef == 0.0 {
                continue;
            }
            let plus = neighbour(i, j, d);
            let minus = neighbour(i, j, [-d[0], -d[1]]);
            let frac = |nb: &Neighbour| match nb {
                Neighbour::Node(_) => 1.0,
                Neighbour::Boundary { s, .. } => *s,
            };
            let (sp, sm) = (frac(&plus), frac(&minus));
            was_cut |= sp < 1.0 || sm < 1.0;
            // w ∂²_d u ≈ 2w/(h²(s₊+s₋)) [(u₊−u)/s₊ + (u₋−u)/s₋]; the first
            // difference along an axis is (u₊ − u₋)/(h(s₊+s₋)).
            let k2 = 2.0 * w / (h * h * (sp + sm));
            let k1 = bcoef / (h * (sp + sm));
            mat.add(row, row, -k2 / sp - k2 / sm);
            for (nb, s, sign) in [(plus, sp, 1.0), (minus, sm, -1.0)] {
                let coef = k2 / s + sign * k1;
                match nb {
                    Neighbour::Node(k) => mat.add(row, k, coef),
                    Neighbour::Boundary { value, .. } => rhs[row] -= coef * value,
                }
            }
        }
        if was_cut {
            cut += 1;
        }
    }
    let sol = mat.solve(&rhs)?;
    let mut u = ScalarField { grid, values: vec![0.0; grid.len()], mask: vec![false; grid.len()] };
    for (k, idx) in index.iter().enumerate() {
        if let Some(d) = idx {
            u.values[k] = sol.x[*d];
            u.mask[k] = true;
        } else if tags[k] == NodeTag::Dirichlet {
            u.values[k] = bval(grid.node(k % grid.n[0], k / grid.n[0]));
            u.mask[k] = true;
        }
    }
    let log = vec![
        format!("{n} unknowns, h = {h:.4e}"),
        format!("{cut} nodes with boundary-cut stencils (first-order truncation there)"),
    ];
    Ok(DiscreteSolution { u, tags, residual: sol.residual, log })
}

/// The mixed problem on `B⁺(center, radius)`.
pub fn solve_mixed_nd(coeffs: &CoefficientField, f: &ScalarFn, center: P2, radius: f64, cells: usize) -> Result<DiscreteSolution> {
    if !coeffs.symmetric {
        return Err(Error::param("nondivergence solver expects symmetric A"));
    }
    solve_nd(coeffs, f, NdDomain::HalfBall { center, radius }, cells, None)
}
