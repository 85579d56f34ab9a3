//! Global `C²` assembly on a flattened half-ball: fitted local constant, smallness
//! radius, and the final `[u]₂` bound against the measured second derivatives.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bound::Chain;
use super::excess::{DerivativeField, ExcessMode};
use crate::error::{Error, Result};
use crate::field::{Field, Grid2, HalfDisk, NodeValue, ScalarField, P2};
use crate::geometry::Flattened;
use crate::modulus::{empirical_mean_oscillation, log_grid, Modulus, Table};
use crate::solvers::{solve_nd, CoefficientField, NdDomain};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlobalConfig {
    pub kappa: f64,
    pub beta: f64,
    /// Exponent of the lower-order `t^μ` term.
    pub mu: f64,
    /// Radii at which the moduli are measured.
    pub radii: usize,
    /// Sub-ball radii (unit half-ball scale) used to fit the local constant.
    pub fit_radii: Vec<f64>,
    /// Sub-ball centres on the flat boundary (unit scale).
    pub fit_centers: Vec<f64>,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self { kappa: 0.25, beta: 0.75, mu: 0.5, radii: 8, fit_radii: vec![1.0, 0.5, 0.25], fit_centers: vec![-0.5, -0.25, 0.0, 0.25, 0.5] }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitBall {
    pub center: f64,
    pub radius: f64,
    /// `sup_{B⁺(ρ/2)} |D²u|`.
    pub measured: f64,
    /// `ρ^{-2}‖D²u‖_{L¹(B⁺_ρ)} + ∫₀^{ρ/4} ω̂_f(t)/t dt`.
    pub bracket: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulusRow {
    pub t: f64,
    pub omega_a: f64,
    pub boundary: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub omega_f: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalReport {
    /// Physical radius of the half-ball; lengths below are in units of it.
    pub radius: f64,
    pub cells: usize,
    pub solve_residual: f64,
    /// `max |u_h − ũ|` at the nodes.
    pub solve_error: f64,
    pub moduli: Vec<ModulusRow>,
    pub fits: Vec<FitBall>,
    pub fitted_c: f64,
    /// Largest dyadic `s ≤ 1/4` with `C ∫₀^s (ϑ̂₀ + ϑ̂₁)/t ≤ 1/2`.
    pub smallness_radius: Option<f64>,
    pub smallness_integral: Option<f64>,
    /// `2C(‖D²u‖_{L¹} + ∫ω̂_f/t + ‖u‖_{L¹} ∫ϑ̂₁/t)`.
    pub bound: Option<f64>,
    /// `sup |D²u|` over `B⁺_s` at the smallness radius.
    pub measured: Option<f64>,
    /// `sup |D²u|` over the whole half-ball.
    pub measured_global: f64,
    pub inconclusive: bool,
    pub dominates: bool,
}

/// Bilinear value, else the nearest valid node within two cells.
fn sample<V: NodeValue>(field: &Field<V>, p: P2) -> Option<(V, P2)> {
    if let Some(v) = field.eval(p) {
        return Some((v, p));
    }
    let g = field.grid;
    let (ci, cj) = g.nearest(p);
    let mut best: Option<(f64, usize, usize)> = None;
    for j in cj.saturating_sub(2)..=(cj + 2).min(g.n[1] - 1) {
        for i in ci.saturating_sub(2)..=(ci + 2).min(g.n[0] - 1) {
            if field.valid(i, j) {
                let q = g.node(i, j);
                let d = (q[0] - p[0]).hypot(q[1] - p[1]);
                if best.map_or(true, |b| d < b.0) {
                    best = Some((d, i, j));
                }
            }
        }
    }
    best.map(|(_, i, j)| (field.at(i, j), g.node(i, j)))
}

fn rescaled<V: Clone>(field: &Field<V>, r: f64) -> Field<V> {
    let g = field.grid;
    Field { grid: Grid2 { origin: [g.origin[0] / r, g.origin[1] / r], h: [g.h[0] / r, g.h[1] / r], n: g.n }, values: field.values.clone(), mask: field.mask.clone() }
}

/// Mean oscillation of the sum of component fields, as an envelope table on `radii`.
fn oscillation(parts: &[ScalarField], weight: f64, region: &HalfDisk, radii: &[f64]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; radii.len()];
    for part in parts {
        let m = empirical_mean_oscillation(part, region, radii)?;
        for (a, v) in acc.iter_mut().zip(&m.raw) {
            *a += weight * v;
        }
    }
    Ok(acc)
}

fn envelope(radii: &[f64], raw: &[f64]) -> Result<Modulus<f64>> {
    if raw.iter().all(|&v| v == 0.0) {
        return Ok(Modulus::zero(1.0));
    }
    Ok(Modulus::Table(Table::monotone_envelope(radii.to_vec(), raw)?))
}

/// Runs the global assembly on the flattened data of a reduced problem.
pub fn c2_global_pipeline(flat: &Flattened, cfg: &GlobalConfig) -> Result<GlobalReport> {
    let radius = flat.region.radius;
    let cells = flat.grid.n[0] - 1;
    let a_field = flat.a.clone();
    let b_field = flat.b.clone();
    let c_field = flat.c.clone();
    let f_field = flat.f.clone();
    let u_field = flat.u.clone();
    let grad_u = flat.u.gradient();
    let miss = |what: &str, p: P2| Error::Geometry(format!("no flattened {what} near ({:.4}, {:.4})", p[0], p[1]));
    for (name, ok) in [("a", sample(&a_field, [0.0, 0.0]).is_some()), ("u", sample(&u_field, [0.0, 0.0]).is_some())] {
        if !ok {
            return Err(miss(name, [0.0, 0.0]));
        }
    }
    let coeffs = CoefficientField::new(Arc::new(move |p| sample(&a_field, p).map_or([[1.0, 0.0], [0.0, 1.0]], |s| s.0)))
        .with_b(Arc::new(move |p| sample(&b_field, p).map_or([0.0; 2], |s| s.0)))
        .with_c(Arc::new(move |p| sample(&c_field, p).map_or(0.0, |s| s.0)));
    let f: crate::field::ScalarFn = Arc::new(move |p| sample(&f_field, p).map_or(0.0, |s| s.0));
    // First-order Taylor extension of ũ from the nearest node keeps boundary data second-order accurate.
    let u_data = u_field.clone();
    let dirichlet: crate::field::ScalarFn = Arc::new(move |p| match sample(&u_data, p) {
        Some((v, q)) if q == p => v,
        Some((v, q)) => {
            let (i, j) = u_data.grid.nearest(q);
            let d = if grad_u.valid(i, j) { grad_u.at(i, j) } else { [0.0; 2] };
            v + d[0] * (p[0] - q[0]) + d[1] * (p[1] - q[1])
        }
        None => 0.0,
    });
    let sol = solve_nd(&coeffs, &f, NdDomain::HalfBall { center: [0.0, 0.0], radius }, cells, Some(&dirichlet)).map_err(|e| e.in_stage("global solve"))?;
    let solve_error = sol
        .u
        .valid_nodes()
        .filter_map(|(i, j, _, v)| flat.u.valid(i, j).then(|| (v - flat.u.at(i, j)).abs()))
        .fold(0.0, f64::max);

    // Unit half-ball scale.
    let us = rescaled(&sol.u, radius);
    let hess = DerivativeField::new(&us, ExcessMode::Hessian);
    let hs = us.grid.h[0].max(us.grid.h[1]);
    let unit = HalfDisk { center: [0.0, 0.0], radius: 1.0 };
    let radii = log_grid((4.0 * hs).min(0.5), 1.0, cfg.radii.max(2));
    let comp = |field: &ScalarField| rescaled(field, radius);
    let a_parts: Vec<ScalarField> = [(0, 0), (0, 1), (1, 1)].iter().map(|&(i, k)| comp(&flat.a.map(|m| m[i][k]))).collect();
    let b_parts: Vec<ScalarField> = (0..2).map(|i| comp(&flat.b.map(|v| v[i]))).collect();
    let w_a = oscillation(&a_parts, 1.0, &unit, &radii)?;
    let w_b = oscillation(&b_parts, radius, &unit, &radii)?;
    let w_c = oscillation(&[comp(&flat.c)], radius * radius, &unit, &radii)?;
    let w_f = oscillation(&[comp(&flat.f)], radius * radius, &unit, &radii)?;
    let boundary_modulus = flat.map.distance.domain.rho_dpsi0();
    let sup_lower = radius * flat.b.valid_nodes().map(|n| n.3[0].hypot(n.3[1])).fold(0.0, f64::max)
        + radius * radius * flat.c.max_abs();
    let mut moduli = Vec::with_capacity(radii.len());
    for (k, &t) in radii.iter().enumerate() {
        let boundary = boundary_modulus.eval((radius * t).min(boundary_modulus.right_end()));
        let theta0 = w_a[k] + boundary;
        let theta1 = w_b[k] + w_c[k] + sup_lower * t.powf(cfg.mu);
        moduli.push(ModulusRow { t, omega_a: w_a[k], boundary, theta0, theta1, omega_f: w_f[k] });
    }
    let col = |f: fn(&ModulusRow) -> f64| moduli.iter().map(f).collect::<Vec<_>>();
    let theta0 = Chain::new(&envelope(&radii, &col(|r| r.theta0))?, cfg.kappa, cfg.beta)?;
    let theta1 = Chain::new(&envelope(&radii, &col(|r| r.theta1))?, cfg.kappa, cfg.beta)?;
    let omega_f = Chain::new(&envelope(&radii, &col(|r| r.omega_f))?, cfg.kappa, cfg.beta)?;

    // Local constant fitted over boundary sub-balls.
    let norm_on = |x: f64, r: f64| -> (f64, f64, usize) {
        let samples = hess.ball([x, 0.0], r);
        let area = us.grid.h[0] * us.grid.h[1];
        let l1 = samples.iter().map(|v| hess.mode.norm(v)).sum::<f64>() * area;
        let sup = samples.iter().map(|v| hess.mode.norm(v)).fold(0.0, f64::max);
        (l1, sup, samples.len())
    };
    let mut fits = Vec::new();
    for &rho in &cfg.fit_radii {
        for &x in &cfg.fit_centers {
            if x.abs() + rho > 1.0 + 1e-12 || rho / 2.0 < 2.0 * hs {
                continue;
            }
            let (l1, _, _) = norm_on(x, rho);
            let (_, sup, n) = norm_on(x, rho / 2.0);
            if n == 0 {
                continue;
            }
            let bracket = l1 / (rho * rho) + omega_f.hat_integral(rho / 4.0);
            fits.push(FitBall { center: x, radius: rho, measured: sup, bracket });
        }
    }
    if fits.is_empty() {
        return Err(Error::Resolution("no sub-ball fits inside the half-ball".into()));
    }
    let fitted_c = fits
        .iter()
        .map(|b| if b.bracket > 0.0 { b.measured / b.bracket } else if b.measured > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);

    let measured_global = hess.sup();
    let smallness = (0..16).map(|k| 0.25 * 0.5f64.powi(k)).find_map(|s| {
        let integral = theta0.hat_integral(s) + theta1.hat_integral(s);
        (fitted_c * integral <= 0.5 && s >= 2.0 * hs).then_some((s, integral))
    });
    let (bound, measured) = match smallness {
        Some((s, _)) if fitted_c.is_finite() => {
            let u_l1 = us.valid_nodes().map(|n| n.3.abs()).sum::<f64>() * us.grid.h[0] * us.grid.h[1];
            let b = 2.0 * fitted_c * (hess.l1() + omega_f.hat_integral(0.25) + theta1.hat_integral(0.25) * u_l1);
            (Some(b), Some(norm_on(0.0, s).1))
        }
        _ => (None, None),
    };
    let inconclusive = bound.is_none();
    let dominates = matches!((bound, measured), (Some(b), Some(m)) if b.is_finite() && b >= m);
    Ok(GlobalReport {
        radius,
        cells,
        solve_residual: sol.residual,
        solve_error,
        moduli,
        fits,
        fitted_c,
        smallness_radius: smallness.map(|s| s.0),
        smallness_integral: smallness.map(|s| s.1),
        bound,
        measured,
        measured_global,
        inconclusive,
        dominates,
    })
}
