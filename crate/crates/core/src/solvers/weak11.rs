//! Weak-(1,1) profiles: `C(t) = t·|{|Du| > t}| / ‖data‖_{L¹}` for data
//! concentrated in a small ball.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::coeffs::CoefficientField;
use super::conormal::{solve_conormal, ConormalData, ConormalOptions};
use super::mixed::{solve_nd, NdDomain};
use crate::error::{Error, Result};
use crate::field::{frob, Grid2, Region, RoundedHalfDisk, ScalarFn, VectorFn, P2};
use crate::modulus::log_grid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weak11Case {
    /// Laplacian on `B₁⁺` with `f ≡ 0`; measures `D²u`.
    Zero,
    /// Laplacian on `B₁⁺` with a unit-mass bump `f`; measures `D²u`.
    Bump { center: P2, radius: f64 },
    /// Conormal Laplacian on the reference domain with a mean-zero dipole
    /// `g⃗`; measures `Du`.
    Dipole { center: P2, radius: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct Weak11Row {
    pub t: f64,
    pub measure: f64,
    pub c: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnulusRow {
    /// Excluded radius `2^k ρ`.
    pub radius: f64,
    /// `∫_{𝒟∖B(ȳ, radius)} |Du|`.
    pub integral: f64,
    /// Integral over `‖g⃗‖_{L¹}`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Weak11Profile {
    pub case: Weak11Case,
    pub cells: usize,
    pub data_l1: f64,
    pub rows: Vec<Weak11Row>,
    pub sup_c: f64,
    /// Only for the dipole case.
    pub annuli: Vec<AnnulusRow>,
}

impl Weak11Profile {
    /// `sup C(t)` agrees within a factor two with `other`.
    pub fn stable_against(&self, other: &Weak11Profile) -> bool {
        let (a, b) = (self.sup_c, other.sup_c);
        if a == 0.0 && b == 0.0 {
            return true;
        }
        a.max(b) < 2.0 * a.min(b)
    }
}

/// `(1 − |x|²/ρ²)³₊`, unnormalized.
fn bump(x: P2, c: P2, rho: f64) -> f64 {
    let s = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / (rho * rho);
    if s < 1.0 {
        (1.0 - s).powi(3)
    } else {
        0.0
    }
}

/// Discrete `L¹` norm over nodes inside `region` with cell-area weights.
fn l1(grid: Grid2, region: &dyn Region, f: impl Fn(P2) -> f64) -> f64 {
    grid.nodes().filter(|(_, _, p)| region.contains(*p)).map(|(_, _, p)| f(p).abs()).sum::<f64>() * grid.h[0] * grid.h[1]
}

/// Profile over `decades` decades of `t` below the largest derivative.
pub fn weak11_profile(case: Weak11Case, cells: usize, decades: f64, thresholds: usize) -> Result<Weak11Profile> {
    if thresholds < 2 || decades < 1.0 {
        return Err(Error::param("need at least two thresholds over at least one decade"));
    }
    let identity = CoefficientField::identity();
    let half = NdDomain::HalfBall { center: [0.0, 0.0], radius: 1.0 };
    let (values, data_l1, cell_area, dipole): (Vec<(P2, f64)>, f64, f64, Option<(P2, f64)>) = match case {
        Weak11Case::Zero | Weak11Case::Bump { .. } => {
            let grid = half.grid(cells)?;
            let region = crate::field::HalfDisk { center: [0.0, 0.0], radius: 1.0 };
            let (c, rho) = match case {
                Weak11Case::Bump { center, radius } => (center, radius),
                _ => ([0.0, 0.5], 0.1),
            };
            let scale = match case {
                Weak11Case::Zero => 0.0,
                _ => 1.0 / l1(grid, &region, |p| bump(p, c, rho)),
            };
            let f: ScalarFn = Arc::new(move |p: P2| scale * bump(p, c, rho));
            let data_l1 = l1(grid, &region, |p| f(p));
            let sol = solve_nd(&identity, &f, half, cells, None)?;
            let vals = sol.hessian().valid_nodes().map(|(_, _, p, m)| (p, frob(&m))).collect();
            (vals, data_l1, grid.h[0] * grid.h[1], None)
        }
        Weak11Case::Dipole { center, radius } => {
            let region = RoundedHalfDisk::reference([0.0, 0.0], 1.0);
            let grid = Grid2::new([-1.0, 0.0], [1.0, 1.0], [cells, cells / 2]);
            // Odd in the first variable about the centre, hence mean zero.
            let g: VectorFn = Arc::new(move |p: P2| [bump(p, center, radius) * (p[0] - center[0]) / radius, 0.0]);
            let g2 = g.clone();
            let data_l1 = l1(grid, &region, |p| g2(p)[0]);
            let sol = solve_conormal(&identity, &ConormalData { g: Some(g), ..Default::default() }, &region, grid, ConormalOptions::default())?;
            let vals = sol.gradient().valid_nodes().map(|(_, _, p, v)| (p, v[0].hypot(v[1]))).collect();
            (vals, data_l1, grid.h[0] * grid.h[1], Some((center, radius)))
        }
    };
    let top = values.iter().map(|v| v.1).fold(0.0, f64::max);
    let mut rows = Vec::new();
    if top > 0.0 && data_l1 > 0.0 {
        for t in log_grid(top * 10f64.powf(-decades), top, thresholds) {
            let measure = values.iter().filter(|v| v.1 > t).count() as f64 * cell_area;
            rows.push(Weak11Row { t, measure, c: t * measure / data_l1 });
        }
    } else {
        for t in log_grid(10f64.powf(-decades), 1.0, thresholds) {
            let measure = values.iter().filter(|v| v.1 > t).count() as f64 * cell_area;
            rows.push(Weak11Row { t, measure, c: 0.0 });
        }
    }
    let sup_c = rows.iter().map(|r| r.c).fold(0.0, f64::max);
    let mut annuli = Vec::new();
    if let Some((c, rho)) = dipole {
        let mut radius = 2.0 * rho;
        while radius < 1.0 {
            let integral = values.iter().filter(|(p, _)| (p[0] - c[0]).hypot(p[1] - c[1]) >= radius).map(|v| v.1).sum::<f64>() * cell_area;
            annuli.push(AnnulusRow { radius, integral, ratio: integral / data_l1 });
            radius *= 2.0;
        }
    }
    Ok(Weak11Profile { case, cells, data_l1, rows, sup_c, annuli })
}
