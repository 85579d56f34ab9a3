//! Dini extension `ũ(x) = ∫ u(x − δψ(x) y) ζ(y) dy` of boundary data.

use rayon::prelude::*;
use serde::Serialize;

use super::RegularizedDistance;
use crate::fd;
use crate::field::{frob, Grid2, Region, ScalarField, P2};
use crate::modulus::Modulus;

#[derive(Clone, Debug)]
pub struct DiniExtension {
    pub distance: RegularizedDistance,
}

impl DiniExtension {
    pub fn new(distance: RegularizedDistance) -> Self {
        Self { distance: distance.precise() }
    }

    /// `ũ(x)`.
    pub fn eval(&self, u: &dyn Fn(P2) -> f64, x: P2) -> f64 {
        let t = self.distance.domain.delta * self.distance.psi_unchecked(x);
        self.distance.mollifier.convolve(u, x, t)
    }

    /// Extends grid samples of `u`: bilinear inside the valid mask, nearest
    /// valid node elsewhere. The result is sampled on `grid` inside `region`.
    pub fn extend_field(&self, u: &ScalarField, grid: Grid2, region: &dyn Region) -> ScalarField {
        let sampled = |p: P2| sample_or_nearest(u, p);
        let nodes: Vec<P2> = grid.nodes().map(|n| n.2).collect();
        let values: Vec<(f64, bool)> = nodes
            .par_iter()
            .map(|&p| if region.contains(p) { (self.eval(&sampled, p), true) } else { (0.0, false) })
            .collect();
        ScalarField { grid, values: values.iter().map(|v| v.0).collect(), mask: values.iter().map(|v| v.1).collect() }
    }

    /// Trace agreement, `C¹` norm ratio and second-derivative growth ratios
    /// `|D²ũ|·d / (ϱ_Du(d) + ϱ_Dψ₀(d))` at interior samples.
    pub fn report(&self, u: &(dyn Fn(P2) -> f64 + Sync), rho_du: &Modulus<f64>, boundary: &[f64], samples: &[P2]) -> ExtensionReport {
        let d = &self.distance.domain;
        let rho_g = d.rho_dpsi0();
        let ext = |p: P2| self.eval(u, p);
        let trace_error = boundary
            .iter()
            .map(|&s| {
                let p = d.boundary_point(s);
                (ext(p) - u(p)).abs()
            })
            .fold(0.0, f64::max);
        let rows: Vec<ExtensionRow> = samples
            .par_iter()
            .map(|&x| {
                let (dist, _) = d.boundary_distance(x);
                let h = self.distance.psi_unchecked(x) / 20.0;
                let g = fd::gradient(&ext, x, h);
                let hs = fd::hessian(&ext, x, h);
                let gu = fd::gradient(u, x, h);
                let r = rho_du.eval(dist) + rho_g.eval(dist);
                let second_ratio = if r > 0.0 { frob(&hs) * dist / r } else { 0.0 };
                ExtensionRow {
                    x,
                    dist,
                    value: ext(x),
                    grad_norm: g[0].hypot(g[1]),
                    data_c1: u(x).abs().max(gu[0].hypot(gu[1])),
                    second_ratio,
                }
            })
            .collect();
        let ext_c1 = rows.iter().map(|r| r.value.abs()).fold(0.0, f64::max) + rows.iter().map(|r| r.grad_norm).fold(0.0, f64::max);
        let data_c1 = samples.iter().map(|&x| u(x).abs()).fold(0.0, f64::max)
            + rows.iter().map(|r| r.data_c1).fold(0.0, f64::max);
        ExtensionReport {
            trace_error,
            c1_ratio: if data_c1 > 0.0 { ext_c1 / data_c1 } else { 0.0 },
            c_second: rows.iter().map(|r| r.second_ratio).fold(0.0, f64::max),
            rows,
        }
    }
}

fn sample_or_nearest(u: &ScalarField, p: P2) -> f64 {
    if let Some(v) = u.eval(p) {
        return v;
    }
    let (i, j) = u.grid.nearest(p);
    if u.valid(i, j) {
        return u.at(i, j);
    }
    u.valid_nodes()
        .map(|(_, _, q, v)| ((q[0] - p[0]).hypot(q[1] - p[1]), v))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .map(|x| x.1)
        .unwrap_or(0.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionRow {
    pub x: P2,
    pub dist: f64,
    pub value: f64,
    pub grad_norm: f64,
    pub data_c1: f64,
    pub second_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionReport {
    pub trace_error: f64,
    /// `|ũ|₁ / |u|₁` over the samples.
    pub c1_ratio: f64,
    pub c_second: f64,
    pub rows: Vec<ExtensionRow>,
}
