//! The frozen-coefficient split `u = v + w` on a boundary patch and the
//! p-mean of the corrector's derivatives.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::coeffs::CoefficientField;
use super::conormal::{solve_conormal, ConormalData, ConormalOptions};
use super::mixed::{solve_nd, NdDomain};
use super::solution::{p_mean, DiscreteSolution};
use crate::error::{Error, Result};
use crate::field::{frob, Field, HalfDisk, NodeValue, Region, RoundedHalfDisk, ScalarFn, VectorFn, M2, P2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectorMode {
    Divergence,
    Nondivergence,
}

/// Right-hand data of the original problem: `g⃗` in divergence mode, `f` in
/// nondivergence mode.
#[derive(Clone, Default)]
pub struct CorrectorData {
    pub g: Option<VectorFn>,
    pub f: Option<ScalarFn>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrectorReport {
    pub mode: CorrectorMode,
    pub center: P2,
    pub r: f64,
    pub p: f64,
    /// `(⨍_{B⁺(x̄,r)} |Dw|^p)^{1/p}` or the same for `D²w`.
    pub p_mean: f64,
    /// `‖Du‖∞` (or `‖D²u‖∞`) over `B⁺(x̄, 2r)`.
    pub derivative_sup: f64,
    /// `⨍_{B⁺(x̄,2r)} |A − Ā|`.
    pub omega_a: f64,
    /// `⨍_{B⁺(x̄,2r)} |g⃗ − ḡ|` or `|f − f̄|`.
    pub omega_data: f64,
    /// `ω_A·sup + ω_data`.
    pub rhs: f64,
    /// `p_mean / rhs`, the empirical constant; zero when both vanish.
    pub ratio: f64,
    pub nodes: usize,
    #[serde(skip)]
    pub w: Option<DiscreteSolution>,
}

/// Bilinear value, or the nearest valid node within one cell.
pub fn sample_or_nearest<V: NodeValue>(field: &Field<V>, p: P2) -> Option<V> {
    field.eval(p).or_else(|| {
        let (i, j) = field.grid.nearest(p);
        let q = field.grid.node(i, j);
        let close = (q[0] - p[0]).abs() <= field.grid.h[0] && (q[1] - p[1]).abs() <= field.grid.h[1];
        (close && field.valid(i, j)).then(|| field.at(i, j))
    })
}

fn mean<V: NodeValue>(values: &[V]) -> V {
    let w = 1.0 / values.len().max(1) as f64;
    values.iter().fold(V::default(), |acc, &v| acc.axpy(w, v))
}

fn sub(a: M2, b: M2) -> M2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

pub fn frozen_corrector(
    u: &DiscreteSolution,
    coeffs: &CoefficientField,
    data: &CorrectorData,
    center: P2,
    r: f64,
    mode: CorrectorMode,
    p: f64,
) -> Result<CorrectorReport> {
    let h = u.h();
    if r < 4.0 * h {
        return Err(Error::Resolution(format!("radius {r} is below four grid cells ({})", 4.0 * h)));
    }
    if !(p > 0.0) {
        return Err(Error::param("p must be positive"));
    }
    let outer = HalfDisk { center, radius: 2.0 * r };
    let inner = HalfDisk { center, radius: r };
    let patch: Vec<P2> = u.u.valid_nodes().filter(|(_, _, q, _)| outer.contains(*q)).map(|(_, _, q, _)| q).collect();
    let a_nodes: Vec<M2> = patch.iter().map(|&q| coeffs.a_at(q)).collect();
    let a_bar = mean(&a_nodes);
    let omega_a = a_nodes.iter().map(|&a| frob(&sub(a, a_bar))).sum::<f64>() / patch.len().max(1) as f64;
    let frozen = CoefficientField::constant(a_bar);

    let (p_mean_value, sup, omega_data, nodes, w) = match mode {
        CorrectorMode::Divergence => {
            let g = data.g.clone().unwrap_or_else(|| Arc::new(|_| [0.0; 2]));
            let g_nodes: Vec<P2> = patch.iter().map(|&q| g(q)).collect();
            let g_bar = mean(&g_nodes);
            let omega_g = g_nodes.iter().map(|v| (v[0] - g_bar[0]).hypot(v[1] - g_bar[1])).sum::<f64>() / patch.len().max(1) as f64;
            let du = Arc::new(u.gradient());
            let sup = du.valid_nodes().filter(|(_, _, q, _)| outer.contains(*q)).map(|(_, _, _, v)| v[0].hypot(v[1])).fold(0.0, f64::max);
            let c2 = coeffs.clone();
            let rhs: VectorFn = Arc::new(move |q: P2| {
                let d = sample_or_nearest(&du, q).unwrap_or([0.0; 2]);
                let da = sub(c2.a_at(q), a_bar);
                let gq = g(q);
                [
                    -(da[0][0] * d[0] + da[0][1] * d[1]) + gq[0] - g_bar[0],
                    -(da[1][0] * d[0] + da[1][1] * d[1]) + gq[1] - g_bar[1],
                ]
            });
            let region = RoundedHalfDisk::reference(center, 2.0 * r);
            let w = solve_conormal(&frozen, &ConormalData { g: Some(rhs), ..Default::default() }, &region, u.grid(), ConormalOptions::default())
                .map_err(|e| e.in_stage("corrector"))?;
            let dw = w.gradient();
            let vals: Vec<f64> = dw.valid_nodes().filter(|(_, _, q, _)| inner.contains(*q)).map(|(_, _, _, v)| v[0].hypot(v[1])).collect();
            let n = vals.len();
            (p_mean(vals, p).unwrap_or(0.0), sup, omega_g, n, w)
        }
        CorrectorMode::Nondivergence => {
            let f = data.f.clone().unwrap_or_else(|| Arc::new(|_| 0.0));
            let f_nodes: Vec<f64> = patch.iter().map(|&q| f(q)).collect();
            let f_bar = mean(&f_nodes);
            let omega_f = f_nodes.iter().map(|v| (v - f_bar).abs()).sum::<f64>() / patch.len().max(1) as f64;
            let d2u = Arc::new(u.hessian());
            let sup = d2u.valid_nodes().filter(|(_, _, q, _)| outer.contains(*q)).map(|(_, _, _, v)| frob(&v)).fold(0.0, f64::max);
            let c2 = coeffs.clone();
            let rhs: ScalarFn = Arc::new(move |q: P2| {
                let d = sample_or_nearest(&d2u, q).unwrap_or([[0.0; 2]; 2]);
                let da = sub(c2.a_at(q), a_bar);
                f(q) - f_bar - (da[0][0] * d[0][0] + da[0][1] * d[0][1] + da[1][0] * d[1][0] + da[1][1] * d[1][1])
            });
            let cells = 2 * ((2.0 * r / h).round() as usize).max(2);
            let w = solve_nd(&frozen, &rhs, NdDomain::HalfBall { center, radius: 2.0 * r }, cells, None).map_err(|e| e.in_stage("corrector"))?;
            let d2w = w.hessian();
            let vals: Vec<f64> = d2w.valid_nodes().filter(|(_, _, q, _)| inner.contains(*q)).map(|(_, _, _, v)| frob(&v)).collect();
            let n = vals.len();
            (p_mean(vals, p).unwrap_or(0.0), sup, omega_f, n, w)
        }
    };
    let rhs = omega_a * sup + omega_data;
    let ratio = if rhs > 0.0 { p_mean_value / rhs } else if p_mean_value < 1e-10 { 0.0 } else { f64::INFINITY };
    Ok(CorrectorReport {
        mode,
        center,
        r,
        p,
        p_mean: p_mean_value,
        derivative_sup: sup,
        omega_a,
        omega_data,
        rhs,
        ratio,
        nodes,
        w: Some(w),
    })
}
