//! Moduli measured from grid samples.

use rayon::prelude::*;
use serde::Serialize;

use super::{Modulus, Table};
use crate::error::{Error, Result};
use crate::field::{Region, ScalarField};

/// A measured modulus: the raw per-radius values and their monotone envelope.
#[derive(Clone, Debug)]
pub struct EmpiricalModulus {
    pub radii: Vec<f64>,
    pub raw: Vec<f64>,
    pub envelope: Modulus<f64>,
}

/// Nodes of `f` that are valid and inside `region`.
fn domain_mask(f: &ScalarField, region: &dyn Region) -> Vec<bool> {
    f.grid.nodes().zip(&f.mask).map(|((_, _, p), &m)| m && region.contains(p)).collect()
}

fn check_radii(f: &ScalarField, region: &dyn Region, radii: &[f64]) -> Result<Vec<f64>> {
    if radii.is_empty() {
        return Err(Error::param("no radii given"));
    }
    let h = f.grid.h[0].max(f.grid.h[1]);
    let (lo, hi) = region.bounds();
    let diam = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
    let mut r = radii.to_vec();
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    r.dedup();
    if r[0] < 4.0 * h * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!("radius {} below 4 grid cells ({})", r[0], 4.0 * h)));
    }
    if *r.last().unwrap() > diam * (1.0 + 1e-12) {
        return Err(Error::param(format!("radius {} exceeds region diameter {diam}", r.last().unwrap())));
    }
    Ok(r)
}

/// Node offsets within distance `r`.
fn offsets(h: [f64; 2], r: f64) -> Vec<(isize, isize)> {
    let ki = (r / h[0]).floor() as isize;
    let kj = (r / h[1]).floor() as isize;
    let mut out = Vec::new();
    for dj in -kj..=kj {
        for di in -ki..=ki {
            if (di as f64 * h[0]).hypot(dj as f64 * h[1]) <= r * (1.0 + 1e-12) {
                out.push((di, dj));
            }
        }
    }
    out
}

fn envelope(radii: Vec<f64>, raw: Vec<f64>) -> Result<EmpiricalModulus> {
    let envelope = Modulus::Table(Table::monotone_envelope(radii.clone(), &raw)?);
    Ok(EmpiricalModulus { radii, raw, envelope })
}

/// Default centre stride: at most about 64 centres per axis.
fn default_stride(f: &ScalarField) -> usize {
    (f.grid.n[0].max(f.grid.n[1]) / 64).max(1)
}

/// `ω_f(r) = sup_x ⨍_{Ω(x,r)} |f − f̄|` over a lattice of centres.
pub fn empirical_mean_oscillation(f: &ScalarField, region: &dyn Region, radii: &[f64]) -> Result<EmpiricalModulus> {
    empirical_mean_oscillation_with(f, region, radii, default_stride(f))
}

/// As [`empirical_mean_oscillation`] with centres on every `stride`-th node.
/// Centres are lattice nodes whose ball meets the sampled domain; balls are
/// clipped to the domain.
pub fn empirical_mean_oscillation_with(
    f: &ScalarField,
    region: &dyn Region,
    radii: &[f64],
    stride: usize,
) -> Result<EmpiricalModulus> {
    let radii = check_radii(f, region, radii)?;
    let inside = domain_mask(f, region);
    let g = f.grid;
    let stride = stride.max(1);
    let centres: Vec<(usize, usize)> = (0..g.n[1])
        .step_by(stride)
        .flat_map(|j| (0..g.n[0]).step_by(stride).map(move |i| (i, j)))
        .collect();
    let raw = radii
        .iter()
        .map(|&r| {
            let offs = offsets(g.h, r);
            centres
                .par_iter()
                .map(|&(i, j)| {
                    let mut vals = Vec::with_capacity(offs.len());
                    for &(di, dj) in &offs {
                        let (a, b) = (i as isize + di, j as isize + dj);
                        if a < 0 || b < 0 || a as usize >= g.n[0] || b as usize >= g.n[1] {
                            continue;
                        }
                        let k = g.index(a as usize, b as usize);
                        if inside[k] {
                            vals.push(f.values[k]);
                        }
                    }
                    if vals.is_empty() {
                        return 0.0;
                    }
                    let n = vals.len() as f64;
                    let mean = vals.iter().sum::<f64>() / n;
                    vals.iter().map(|v| (v - mean).abs()).sum::<f64>() / n
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect();
    envelope(radii, raw)
}

/// `ϱ_f(t) = sup{|f(x) − f(y)| : |x − y| ≤ t}` over sampled node pairs.
pub fn empirical_continuity_modulus(f: &ScalarField, region: &dyn Region, radii: &[f64]) -> Result<EmpiricalModulus> {
    let radii = check_radii(f, region, radii)?;
    let inside = domain_mask(f, region);
    let g = f.grid;
    let r_max = *radii.last().unwrap();
    // One offset per unordered pair direction.
    let mut offs: Vec<(isize, isize, f64)> = offsets(g.h, r_max)
        .into_iter()
        .filter(|&(di, dj)| dj > 0 || (dj == 0 && di > 0))
        .map(|(di, dj)| (di, dj, (di as f64 * g.h[0]).hypot(dj as f64 * g.h[1])))
        .collect();
    offs.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then((a.0, a.1).cmp(&(b.0, b.1))));
    let best: Vec<f64> = offs
        .par_iter()
        .map(|&(di, dj, _)| {
            let mut m = 0.0f64;
            for j in 0..g.n[1] {
                let b = j as isize + dj;
                if b < 0 || b as usize >= g.n[1] {
                    continue;
                }
                for i in 0..g.n[0] {
                    let a = i as isize + di;
                    if a < 0 || a as usize >= g.n[0] {
                        continue;
                    }
                    let (k0, k1) = (g.index(i, j), g.index(a as usize, b as usize));
                    if inside[k0] && inside[k1] {
                        m = m.max((f.values[k0] - f.values[k1]).abs());
                    }
                }
            }
            m
        })
        .collect();
    let mut raw = Vec::with_capacity(radii.len());
    let mut acc = 0.0f64;
    let mut k = 0;
    for &r in &radii {
        while k < offs.len() && offs[k].2 <= r * (1.0 + 1e-12) {
            acc = acc.max(best[k]);
            k += 1;
        }
        raw.push(acc);
    }
    envelope(radii, raw)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductRow {
    pub r: f64,
    pub measured: f64,
    /// `‖f‖∞ ω_g(r) + ‖g‖∞ ϱ_f(r)`.
    pub bound: f64,
    /// Same with `ϱ_f(2r)`, which accounts for the ball diameter.
    pub bound_diameter: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductCheck {
    pub rows: Vec<ProductRow>,
    pub pass: bool,
}

/// Compares `ω_{fg}` against `‖f‖∞ ω_g + ‖g‖∞ ϱ_f` radius by radius.
pub fn product_oscillation_check(
    f: &ScalarField,
    g: &ScalarField,
    region: &dyn Region,
    radii: &[f64],
    tol: f64,
) -> Result<ProductCheck> {
    if f.grid != g.grid {
        return Err(Error::param("fields must share a grid"));
    }
    let fg = ScalarField {
        grid: f.grid,
        values: f.values.iter().zip(&g.values).map(|(a, b)| a * b).collect(),
        mask: f.mask.iter().zip(&g.mask).map(|(a, b)| *a && *b).collect(),
    };
    let inside = domain_mask(&fg, region);
    let sup = |h: &ScalarField| {
        h.values.iter().zip(&inside).filter(|(_, &m)| m).map(|(v, _)| v.abs()).fold(0.0, f64::max)
    };
    let (f_inf, g_inf) = (sup(f), sup(g));
    let radii = check_radii(f, region, radii)?;
    let w_fg = empirical_mean_oscillation(&fg, region, &radii)?;
    let w_g = empirical_mean_oscillation(g, region, &radii)?;
    let (lo, hi) = region.bounds();
    let diam = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
    let mut both: Vec<f64> = radii.iter().flat_map(|&r| [r, (2.0 * r).min(diam)]).collect();
    both.sort_by(|a, b| a.partial_cmp(b).unwrap());
    both.dedup();
    let rho_f = empirical_continuity_modulus(f, region, &both)?;
    let rho_at = |r: f64| {
        let k = both.iter().position(|&x| x >= r.min(diam) * (1.0 - 1e-12)).unwrap_or(both.len() - 1);
        rho_f.raw[k]
    };
    let rows: Vec<ProductRow> = radii
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let measured = w_fg.raw[k];
            let bound = f_inf * w_g.raw[k] + g_inf * rho_at(r);
            ProductRow { r, measured, bound, bound_diameter: f_inf * w_g.raw[k] + g_inf * rho_at(2.0 * r), slack: bound - measured }
        })
        .collect();
    let pass = rows.iter().all(|row| row.measured <= row.bound * (1.0 + tol) + 1e-14);
    Ok(ProductCheck { rows, pass })
}
