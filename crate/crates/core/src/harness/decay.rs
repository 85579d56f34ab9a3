//! Dyadic excess tables, decay exponents and the one-step iteration inequality.

use rayon::prelude::*;
use serde::Serialize;

use super::excess::{excess_on, DerivativeField, ExcessMode};
use crate::error::{Error, Result};
use crate::field::{ScalarField, P2};

#[derive(Clone, Debug, Serialize)]
pub struct DecayConfig {
    pub p: f64,
    /// Contraction ratio of one iteration step.
    pub kappa: f64,
    /// Largest radius.
    pub r0: f64,
    /// Number of radii in the table.
    pub levels: usize,
    /// Table radii per iteration step: `r_k = r0 κ^{k / per_step}`.
    pub per_step: usize,
    /// Excess values below `floor · sup|D^k u|` count as the grid floor.
    pub floor: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self { p: 0.5, kappa: 0.25, r0: 0.5, levels: 4, per_step: 2, floor: 1e-8 }
    }
}

impl DecayConfig {
    pub fn radii(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.r0 * self.kappa.powf(k as f64 / self.per_step as f64)).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::param(format!("p = {} outside (0, 1]", self.p)));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::param(format!("kappa = {} outside (0, 1)", self.kappa)));
        }
        if self.levels < 2 || self.per_step == 0 || !(self.r0 > 0.0) {
            return Err(Error::param("need at least two levels and a positive radius"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcessTable {
    pub center: P2,
    pub radii: Vec<f64>,
    pub phi: Vec<f64>,
    pub p: f64,
    pub kappa: f64,
    pub per_step: usize,
    pub mode: ExcessMode,
    /// Least-squares slope of `ln φ` against `ln r`, above the floor.
    pub exponent: Option<f64>,
    /// Slope ± two standard errors.
    pub band: Option<[f64; 2]>,
    /// Absolute floor used.
    pub floor: f64,
    pub at_floor: bool,
}

/// Least-squares slope and its standard error.
fn slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    if x.len() < 3 {
        return (b, 0.0);
    }
    let rss: f64 = x.iter().zip(y).map(|(a, c)| (c - my - b * (a - mx)).powi(2)).sum();
    (b, (rss / (n - 2.0) / sxx).sqrt())
}

pub fn excess_table(field: &DerivativeField, center: P2, cfg: &DecayConfig) -> Result<ExcessTable> {
    cfg.validate()?;
    let radii = cfg.radii();
    let phi = radii.iter().map(|&r| excess_on(field, center, r, cfg.p)).collect::<Result<Vec<_>>>()?;
    let floor = cfg.floor * field.sup().max(f64::MIN_POSITIVE);
    let above: Vec<(f64, f64)> = radii.iter().zip(&phi).filter(|(_, &v)| v > floor).map(|(r, v)| (r.ln(), v.ln())).collect();
    let at_floor = above.is_empty();
    let (exponent, band) = if above.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = above.into_iter().unzip();
        let (b, se) = slope(&x, &y);
        (Some(b), Some([b - 2.0 * se, b + 2.0 * se]))
    } else {
        (None, None)
    };
    Ok(ExcessTable { center, radii, phi, p: cfg.p, kappa: cfg.kappa, per_step: cfg.per_step, mode: field.mode, exponent, band, floor, at_floor })
}

/// Excess tables at every centre, in centre order.
pub fn decay_study(u: &ScalarField, centers: &[P2], mode: ExcessMode, cfg: &DecayConfig) -> Result<Vec<ExcessTable>> {
    let field = DerivativeField::new(u, mode);
    centers.par_iter().map(|&c| excess_table(&field, c, cfg)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct StepCheck {
    pub r: f64,
    /// `φ(κr)`.
    pub lhs: f64,
    /// `4^{(1−p)/p} C₀ κ φ(r)`.
    pub homogeneous: f64,
    /// `C (κ^{−n/p} + 1) F(r)`.
    pub forcing: f64,
    /// Right side minus left side.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationFit {
    pub c0: f64,
    pub c: f64,
    pub steps: Vec<StepCheck>,
}

/// Fits `φ(κr) ≤ 4^{(1−p)/p} C₀ κ φ(r) + C (κ^{−n/p} + 1) F(r)` over the table steps.
///
/// `forcing(r)` is `F(r) = ω_A(2r)‖Du‖ + ω_g(2r)` (or its Hessian analogue).
/// `C₀` is the smallest observed contraction, so the excess left over is charged
/// to `C`; steps with `F(r) = 0` must be covered by `C₀` alone and raise it.
pub fn fit_iteration(table: &ExcessTable, forcing: impl Fn(f64) -> f64) -> IterationFit {
    let (p, kappa) = (table.p, table.kappa);
    let amp = 4f64.powf((1.0 - p) / p) * kappa;
    let lift = kappa.powf(-2.0 / p) + 1.0;
    let m = table.per_step;
    let steps: Vec<(f64, f64, f64, f64)> = (0..table.phi.len().saturating_sub(m))
        .map(|k| (table.radii[k], table.phi[k], table.phi[k + m], lift * forcing(table.radii[k])))
        .filter(|&(_, prev, next, _)| prev > table.floor || next > table.floor)
        .collect();
    let ratio = |prev: f64, next: f64| if prev > 0.0 { next / (amp * prev) } else { f64::INFINITY };
    let mut c0 = steps.iter().map(|s| ratio(s.1, s.2)).filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    for s in steps.iter().filter(|s| s.3 <= 0.0) {
        c0 = if c0.is_finite() { c0.max(ratio(s.1, s.2)) } else { ratio(s.1, s.2) };
    }
    if !c0.is_finite() {
        c0 = 0.0;
    }
    let c = steps
        .iter()
        .filter(|s| s.3 > 0.0)
        .map(|s| (s.2 - amp * c0 * s.1).max(0.0) / s.3)
        .fold(0.0, f64::max);
    let steps = steps
        .into_iter()
        .map(|(r, prev, next, f)| {
            let homogeneous = amp * c0 * prev;
            let forcing = c * f;
            StepCheck { r, lhs: next, homogeneous, forcing, residual: homogeneous + forcing - next }
        })
        .collect();
    IterationFit { c0, c, steps }
}

/// Largest `β` in `candidates` with `4^{(1−p)/p} C₀ κ ≤ κ^β`; the smallest candidate
/// with `false` when none qualifies.
pub fn choose_beta(c0: f64, p: f64, kappa: f64, candidates: &[f64]) -> (f64, bool) {
    let lhs = 4f64.powf((1.0 - p) / p) * c0 * kappa;
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    match sorted.iter().find(|&&b| lhs <= kappa.powf(b)) {
        Some(&b) => (b, true),
        None => (*sorted.last().expect("candidates"), false),
    }
}

/// Default `β` candidates, largest first.
pub const BETA_CANDIDATES: [f64; 3] = [0.9, 0.75, 0.5];
