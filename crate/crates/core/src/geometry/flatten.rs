//! Distance-based flattening `z = (x′ − x₀′, ψ(x))` and the transformed
//! equation data on the half-ball.

use rayon::prelude::*;
use serde::Serialize;

use super::{solve_monotone, DiffeoMap, RegularizedDistance};
use crate::error::{Error, Result};
use crate::fd::T3;
use crate::field::{frob, sym_eigenvalues, Grid2, HalfDisk, MatrixField, Region, ScalarField, VectorField, M2, P2};
use crate::modulus::Modulus;

/// The map `x ↦ (x¹ − x₀¹, ψ(x))` near the boundary point `x₀`.
#[derive(Clone, Debug)]
pub struct FlatteningMap {
    pub distance: RegularizedDistance,
    pub x0: P2,
    /// Validity: `|x¹ − x₀¹| ≤ half_width`, `|ψ₀(x)| ≤ depth`.
    pub half_width: f64,
    pub depth: f64,
}

impl FlatteningMap {
    pub fn new(distance: RegularizedDistance, x0_abscissa: f64, half_width: f64, depth: f64) -> Self {
        let x0 = distance.domain.boundary_point(x0_abscissa);
        Self { distance: distance.precise(), x0, half_width, depth }
    }

    fn step(&self, x: P2) -> f64 {
        (self.distance.domain.psi0(x).abs() / 20.0).max(1e-4)
    }

    /// `D²ψ` at `x`.
    pub fn psi_hessian(&self, x: P2) -> M2 {
        self.distance.hessian(x, self.step(x))
    }
}

impl DiffeoMap for FlatteningMap {
    fn forward(&self, x: P2) -> P2 {
        [x[0] - self.x0[0], self.distance.psi_unchecked(x)]
    }

    fn inverse(&self, z: P2) -> Result<P2> {
        let d = &self.distance.domain;
        let x1 = z[0] + self.x0[0];
        let g = d.gamma(x1);
        if z[1] == 0.0 {
            return Ok([x1, g]);
        }
        // 1/3 ≤ Kψ/ψ₀ ≤ 1 brackets ψ₀ between K·z² and 3K·z².
        let (a, b) = (g + 0.9 * d.k * z[1], g + 3.1 * d.k * z[1]);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let x2 = solve_monotone(&|s| self.distance.psi_unchecked([x1, s]), z[1], lo, hi, 1e-15 * (1.0 + hi.abs()))?;
        Ok([x1, x2])
    }

    fn contains(&self, x: P2) -> bool {
        (x[0] - self.x0[0]).abs() <= self.half_width && self.distance.domain.psi0(x).abs() <= self.depth
    }

    fn fd_step(&self, x: P2) -> f64 {
        self.step(x)
    }

    fn jacobian(&self, x: P2) -> M2 {
        let g = self.distance.gradient(x).expect("contraction converges");
        [[1.0, 0.0], g]
    }

    fn second(&self, x: P2) -> T3 {
        let h = self.psi_hessian(x);
        [[[0.0; 2]; 2], h]
    }
}

/// Equation data in the original coordinates: `a^{ij}D_{ij}u + bⁱD_iu + cu = f`
/// with the solution `u` and its gradient.
pub struct FlatData<'a> {
    pub a: &'a (dyn Fn(P2) -> M2 + Sync),
    pub b: &'a (dyn Fn(P2) -> P2 + Sync),
    pub c: &'a (dyn Fn(P2) -> f64 + Sync),
    pub f: &'a (dyn Fn(P2) -> f64 + Sync),
    pub u: &'a (dyn Fn(P2) -> f64 + Sync),
    pub grad_u: &'a (dyn Fn(P2) -> P2 + Sync),
}

/// Transformed data on the half-ball `B⁺(0, 4s₀)` in `z` coordinates.
#[derive(Clone, Debug)]
pub struct Flattened {
    pub map: FlatteningMap,
    pub s: f64,
    pub s0: f64,
    pub region: HalfDisk,
    pub grid: Grid2,
    /// `x(z)` at the nodes.
    pub x: VectorField,
    pub a: MatrixField,
    pub b: VectorField,
    pub c: ScalarField,
    pub f: ScalarField,
    /// `h^{ij} = D_nũ · D_{ij}ψ`.
    pub h: MatrixField,
    pub u: ScalarField,
    /// `D_nũ = D_2u / D_2ψ`.
    pub dn_u: ScalarField,
    /// Smallest Jacobian determinant `D_2ψ` met.
    pub min_det: f64,
    pub log: Vec<String>,
}

impl Flattened {
    /// Extreme eigenvalues of `ã` over the nodes.
    pub fn ellipticity_range(&self) -> (f64, f64) {
        self.a
            .valid_nodes()
            .map(|(_, _, _, m)| sym_eigenvalues(&m))
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), (l, h)| (lo.min(l), hi.max(h)))
    }
}

fn largest_s0(map: &FlatteningMap, s: f64) -> Result<f64> {
    let arc: Vec<P2> = (0..=64)
        .map(|k| {
            let th = std::f64::consts::PI * k as f64 / 64.0;
            [th.cos(), th.sin()]
        })
        .collect();
    let fits = |s0: f64| -> Result<bool> {
        let r = 4.0 * s0;
        for p in arc.iter().map(|q| [r * q[0], r * q[1]]).chain((0..=16).map(|k| [r * (k as f64 / 8.0 - 1.0), 0.0])) {
            let x = map.inverse(p)?;
            if (x[0] - map.x0[0]).hypot(x[1] - map.x0[1]) > 2.0 * s {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let (mut lo, mut hi) = (0.0, s);
    if fits(hi)? {
        return Ok(hi);
    }
    for _ in 0..40 {
        let m = 0.5 * (lo + hi);
        if fits(m)? {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(lo)
}

/// Flattens the boundary near `x₀ = (x0, γ(x0))` on the patch of radius `s`,
/// with `cells` grid cells across the half-ball radius.
pub fn flatten_by_distance(distance: &RegularizedDistance, x0: f64, s: f64, data: &FlatData, cells: usize) -> Result<Flattened> {
    let dom = &distance.domain;
    if !(s > 0.0) || (x0.abs() + 2.0 * s) > dom.extent {
        return Err(Error::param(format!("patch radius {s} at {x0} leaves the graph extent {}", dom.extent)));
    }
    let map = FlatteningMap::new(distance.clone(), x0, 2.0 * s, 2.0 * s * dom.k);
    let mut log = Vec::new();
    let s0 = largest_s0(&map, s)?;
    log.push(format!("s0 = {s0:.6e} for s = {s:.6e}"));
    let r = 4.0 * s0;
    let region = HalfDisk { center: [0.0, 0.0], radius: r };
    let grid = Grid2::new([-r, 0.0], [r, r], [2 * cells, cells]);
    let nodes: Vec<P2> = grid.nodes().map(|n| n.2).collect();
    struct NodeData {
        x: P2,
        a: M2,
        b: P2,
        c: f64,
        f: f64,
        h: M2,
        u: f64,
        dn: f64,
        det: f64,
    }
    let out: Vec<Option<NodeData>> = nodes
        .par_iter()
        .map(|&z| {
            if !region.contains(z) {
                return Ok(None);
            }
            let x = map.inverse(z)?;
            let j = map.jacobian(x);
            let det = j[1][1];
            let d2psi = map.psi_hessian(x);
            let a = (data.a)(x);
            let mut at = [[0.0; 2]; 2];
            for i in 0..2 {
                for k in 0..2 {
                    at[i][k] = (0..2).map(|p| (0..2).map(|q| j[i][p] * a[p][q] * j[k][q]).sum::<f64>()).sum();
                }
            }
            let b = (data.b)(x);
            let bt = [j[0][0] * b[0] + j[0][1] * b[1], j[1][0] * b[0] + j[1][1] * b[1]];
            let dn = (data.grad_u)(x)[1] / det;
            let h = [[dn * d2psi[0][0], dn * d2psi[0][1]], [dn * d2psi[1][0], dn * d2psi[1][1]]];
            let ah: f64 = (0..2).map(|p| (0..2).map(|q| a[p][q] * h[p][q]).sum::<f64>()).sum();
            Ok(Some(NodeData { x, a: at, b: bt, c: (data.c)(x), f: (data.f)(x) - ah, h, u: (data.u)(x), dn, det }))
        })
        .collect::<Result<_>>()?;
    let min_det = out.iter().flatten().map(|n| n.det).fold(f64::INFINITY, f64::min);
    if !(min_det > 1e-3) {
        return Err(Error::Geometry(format!("patch too large: Jacobian determinant {min_det:.3e}")));
    }
    log.push(format!("min det Dz = {min_det:.6e}"));
    let mask: Vec<bool> = out.iter().map(|o| o.is_some()).collect();
    fn collect<V: Copy + Default>(out: &[Option<NodeData>], f: impl Fn(&NodeData) -> V) -> Vec<V> {
        out.iter().map(|o| o.as_ref().map(&f).unwrap_or_default()).collect()
    }
    fn field<V>(grid: Grid2, values: Vec<V>, mask: &[bool]) -> crate::field::Field<V> {
        crate::field::Field { grid, values, mask: mask.to_vec() }
    }
    Ok(Flattened {
        map,
        s,
        s0,
        region,
        grid,
        x: field(grid, collect(&out, |n| n.x), &mask),
        a: field(grid, collect(&out, |n| n.a), &mask),
        b: field(grid, collect(&out, |n| n.b), &mask),
        c: field(grid, collect(&out, |n| n.c), &mask),
        f: field(grid, collect(&out, |n| n.f), &mask),
        h: field(grid, collect(&out, |n| n.h), &mask),
        u: field(grid, collect(&out, |n| n.u), &mask),
        dn_u: field(grid, collect(&out, |n| n.dn), &mask),
        min_det,
        log,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HFieldRow {
    pub z: P2,
    pub h: f64,
    /// `|h̃(z)| / (‖D²ũ‖ ϑ(zⁿ))`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HFieldCheck {
    pub d2u_sup: f64,
    pub sup_ratio: f64,
    /// Sup of `|h̃(z₁) − h̃(z₂)| / (‖D²ũ‖ ϑ(|z₁ − z₂|))` over node pairs.
    pub pair_ratio: f64,
    /// Same restricted to pairs with `|z₁ − z₂| ≤ z₂ⁿ/2`.
    pub near_pair_ratio: f64,
    pub pairs: usize,
    pub near_pairs: usize,
    pub pass: bool,
    pub rows: Vec<HFieldRow>,
}

impl HFieldCheck {
    /// True when both sup ratios change by less than `tol` relative to `other`.
    pub fn stable_against(&self, other: &HFieldCheck, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()) || a.max(b) < 1e-12;
        close(self.sup_ratio, other.sup_ratio) && close(self.pair_ratio, other.pair_ratio)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num <= 1e-13 {
        0.0
    } else if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Checks `|h̃(z)| ≲ ‖D²ũ‖ϑ(zⁿ)` and `|h̃(z₁) − h̃(z₂)| ≲ ‖D²ũ‖ϑ(|z₁ − z₂|)`
/// with `ϑ = theta`; `d2u_sup` is `‖D²ũ‖_∞` on the half-ball.
pub fn h_field_modulus_check(flat: &Flattened, theta: &Modulus<f64>, d2u_sup: f64) -> HFieldCheck {
    let h = &flat.h;
    let g = h.grid;
    let norm = |m: &M2| frob(m);
    let rows: Vec<HFieldRow> = h
        .valid_nodes()
        .filter(|(_, _, z, _)| z[1] > 0.0)
        .map(|(_, _, z, m)| HFieldRow { z, h: norm(&m), ratio: ratio(norm(&m), d2u_sup * theta.eval(z[1])) })
        .collect();
    let sup_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let stride = (g.n[0].max(g.n[1]) / 24).max(1);
    let valid: Vec<(usize, usize, P2, M2)> = h.valid_nodes().filter(|(i, j, _, _)| i % stride == 0 && j % stride == 0).collect();
    let (pair_ratio, near_ratio, pairs, near) = valid
        .par_iter()
        .map(|&(_, _, z1, m1)| {
            let mut acc = (0.0f64, 0.0f64, 0usize, 0usize);
            for &(_, _, z2, m2) in &valid {
                let d = (z1[0] - z2[0]).hypot(z1[1] - z2[1]);
                if d == 0.0 {
                    continue;
                }
                let diff = [[m1[0][0] - m2[0][0], m1[0][1] - m2[0][1]], [m1[1][0] - m2[1][0], m1[1][1] - m2[1][1]]];
                let r = ratio(frob(&diff), d2u_sup * theta.eval(d));
                acc.0 = acc.0.max(r);
                acc.2 += 1;
                if d <= 0.5 * z2[1] {
                    acc.1 = acc.1.max(r);
                    acc.3 += 1;
                }
            }
            acc
        })
        .reduce(|| (0.0, 0.0, 0, 0), |a, b| (a.0.max(b.0), a.1.max(b.1), a.2 + b.2, a.3 + b.3));
    HFieldCheck {
        d2u_sup,
        sup_ratio,
        pair_ratio,
        near_pair_ratio: near_ratio,
        pairs,
        near_pairs: near,
        pass: sup_ratio.is_finite() && pair_ratio.is_finite(),
        rows,
    }
}
