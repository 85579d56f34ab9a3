//! Lift of Neumann-type data: `v(x) = −∫_{xⁿ}^{b} g̃(x′, t) dt` with `g̃` the
//! Dini extension of `g`, so that `D_n v = g` on the boundary.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd;
use crate::field::{frob, ScalarFn, P2};
use crate::geometry::{DiniExtension, GraphDomain, Mollifier, RegularizedDistance};
use crate::modulus::{dini_integral, Modulus};
use crate::quadrature::GaussRule;


#[derive(Clone)]
pub struct BoundaryLift {
    pub extension: DiniExtension,
    pub b: f64,
    pub g: ScalarFn,
    /// Modulus of continuity of `Dg`.
    pub rho_dg: Modulus<f64>,
    rule: GaussRule<f64>,
}

/// Builds the lift of `g` on `U_b`; `b` may not exceed the domain's patch
/// half-width.
pub fn boundary_lift(g: ScalarFn, rho_dg: Modulus<f64>, domain: &GraphDomain, mollifier: Mollifier, b: f64) -> Result<BoundaryLift> {
    if !(b > 0.0) || b > domain.b * (1.0 + 1e-12) {
        return Err(Error::param(format!("lift height {b} must lie in (0, {}]", domain.b)));
    }
    let extension = DiniExtension::new(RegularizedDistance::new(domain.clone(), mollifier));
    Ok(BoundaryLift { extension, b, g, rho_dg, rule: GaussRule::new(24) })
}

impl BoundaryLift {
    pub fn domain(&self) -> &GraphDomain {
        &self.extension.distance.domain
    }

    /// `g̃(x)`.
    pub fn extended(&self, x: P2) -> f64 {
        self.extension.eval(&*self.g, x)
    }

    /// `v(x)`.
    pub fn eval(&self, x: P2) -> f64 {
        let x1 = x[0];
        -self.rule.integrate(x[1], self.b, |t| self.extended([x1, t]))
    }

    /// `∫₀ˣ (ϱ_Dg(t) + ϱ_Dγ(t))/t dt`, continued by `ω(a)·ln(x/a)` past the
    /// right ends.
    pub fn dini_sum(&self, x: f64) -> f64 {
        let rg = self.domain().rho_dgamma();
        [&self.rho_dg, &rg]
            .iter()
            .map(|m| {
                let a = m.right_end();
                let upper = x.min(a);
                let base = dini_integral(m, 0.0, upper).ok().and_then(|i| i.value()).unwrap_or(f64::INFINITY);
                base + if x > a { m.eval(a) * (x / a).ln() } else { 0.0 }
            })
            .sum()
    }

    /// Largest `|D_n v − g|` at the given boundary abscissae.
    pub fn trace_error(&self, abscissae: &[f64]) -> f64 {
        let d = self.domain();
        abscissae
            .iter()
            .map(|&s| {
                let p = d.boundary_point(s);
                let h = 1e-3 * self.b;
                let dn = fd::gradient(&|q| self.eval(q), p, h)[1];
                (dn - (self.g)(p)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Derivative-bound ratios over a `cells × cells` lattice of `U_b`,
    /// restricted to `xⁿ − γ(x′) ≥ b/8` so that refinements sample the same set.
    pub fn report(&self, cells: usize) -> LiftReport {
        let d = self.domain().clone();
        let b = self.b;
        let floor = b / 8.0;
        let w = 0.9 * b;
        let mut samples = Vec::new();
        for i in 0..=cells {
            for j in 0..=cells {
                let x = [-w + 2.0 * w * i as f64 / cells as f64, b * j as f64 / cells as f64];
                let dbar = d.psi0(x);
                if dbar >= floor && x[1] < b {
                    samples.push(x);
                }
            }
        }
        let v = |p: P2| self.eval(p);
        let rows: Vec<LiftRow> = samples
            .par_iter()
            .map(|&x| {
                let dist = d.boundary_distance(x).0;
                let h = (d.psi0(x) / 8.0).min(b / 32.0);
                let g1 = fd::gradient(&*self.g, x, h);
                let t3 = fd::third(&v, x, h);
                LiftRow {
                    x,
                    dist,
                    v: v(x),
                    grad: fd::gradient(&v, x, h),
                    hess: fd::hessian(&v, x, h),
                    third: fd::norm3(&t3),
                    g_c1: (self.g)(x).abs().max(g1[0].hypot(g1[1])),
                }
            })
            .collect();
        let sup = |f: &dyn Fn(&LiftRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
        let g_norm = sup(&|r| (self.g)(r.x).abs()) + {
            rows.iter()
                .map(|r| {
                    let h = (d.psi0(r.x) / 8.0).min(b / 32.0);
                    let g1 = fd::gradient(&*self.g, r.x, h);
                    g1[0].hypot(g1[1])
                })
                .fold(0.0, f64::max)
        };
        let v_norm = sup(&|r| r.v.abs()) + sup(&|r| r.grad[0].hypot(r.grad[1]));
        let d2 = sup(&|r| frob(&r.hess));
        let c1 = if g_norm > 0.0 { v_norm / g_norm } else { 0.0 };
        let c2 = d2 / (g_norm + self.dini_sum(2.0 * b));
        let rg = d.rho_dgamma();
        let c3 = sup(&|r| {
            let den = self.rho_dg.eval(r.dist) + rg.eval(r.dist);
            if r.third < 1e-9 {
                0.0
            } else {
                r.third * r.dist / den
            }
        });
        let mut c4 = 0.0f64;
        for (k, p) in rows.iter().enumerate() {
            for q in &rows[k + 1..] {
                let sep = (p.x[0] - q.x[0]).hypot(p.x[1] - q.x[1]);
                let diff = [[p.hess[0][0] - q.hess[0][0], p.hess[0][1] - q.hess[0][1]], [p.hess[1][0] - q.hess[1][0], p.hess[1][1] - q.hess[1][1]]];
                let num = frob(&diff);
                if num > 1e-9 {
                    c4 = c4.max(num / self.dini_sum(sep));
                }
            }
        }
        LiftReport { cells, samples: rows.len(), ratios: [c1, c2, c3, c4], rows }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftRow {
    pub x: P2,
    pub dist: f64,
    pub v: f64,
    pub grad: P2,
    pub hess: [[f64; 2]; 2],
    pub third: f64,
    pub g_c1: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftReport {
    pub cells: usize,
    pub samples: usize,
    /// `|v|₁/|g|₁`, `[v]₂/(|g|₁ + ∫₀^{2b}…)`, `sup |D³v|·d/(ϱ_Dg + ϱ_Dγ)(d)`
    /// and the `D²v` pair-modulus ratio.
    pub ratios: [f64; 4],
    pub rows: Vec<LiftRow>,
}

impl LiftReport {
    /// Largest relative change of any ratio against `other`.
    pub fn relative_change(&self, other: &LiftReport) -> f64 {
        self.ratios
            .iter()
            .zip(&other.ratios)
            .map(|(a, b)| {
                let m = a.abs().max(b.abs());
                if m < 1e-12 {
                    0.0
                } else {
                    (a - b).abs() / m
                }
            })
            .fold(0.0, f64::max)
    }
}
