//! Dini and double-Dini integrals with divergence detection.

use serde::Serialize;

use super::Modulus;
use crate::error::{Error, Result};
use crate::quadrature::{composite, integrate, Estimate};
use crate::scalar::Real;

/// Outcome of an improper integral near `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Integral<T> {
    Finite(Estimate<T>),
    /// The block sums failed the Cauchy criterion; `partial` is the sum so far.
    Divergent { partial: T, blocks: usize },
}

impl<T: Real> Integral<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            Integral::Finite(e) => Some(e.value),
            Integral::Divergent { .. } => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Integral::Finite(_))
    }

    pub fn error(&self) -> T {
        match self {
            Integral::Finite(e) => e.error,
            Integral::Divergent { .. } => T::infinity(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiniOptions<T> {
    /// Fixed GK15 panels per block; `None` selects adaptive integration.
    pub panels_per_block: Option<usize>,
    pub rel_tol: T,
    pub abs_tol: T,
    /// Maximum number of blocks of doubling length in `s = -ln t`.
    pub max_blocks: usize,
    /// A block ratio in `[stall_ratio, 1/stall_ratio]` counts as stalled.
    pub stall_ratio: T,
    /// Consecutive non-contracting blocks that declare divergence.
    pub stall_blocks: usize,
}

impl<T: Real> Default for DiniOptions<T> {
    fn default() -> Self {
        Self {
            panels_per_block: None,
            rel_tol: T::lit(1e-12).max(T::epsilon() * T::lit(16.0)),
            abs_tol: T::lit(1e-15).max(T::min_positive_value()),
            max_blocks: 60,
            stall_ratio: T::lit(0.97),
            stall_blocks: 8,
        }
    }
}

/// `∫_{lower}^{upper} ω(t)/t dt`.
pub fn dini_integral<T: Real>(w: &Modulus<T>, lower: T, upper: T) -> Result<Integral<T>> {
    dini_integral_with(w, lower, upper, false, &DiniOptions::default())
}

/// `∫_{lower}^{upper} ω(t) ln(1/t)/t dt`, with `upper ≤ 1`.
pub fn double_dini_integral<T: Real>(w: &Modulus<T>, lower: T, upper: T) -> Result<Integral<T>> {
    if upper > T::one() {
        return Err(Error::param("double Dini integral needs upper <= 1"));
    }
    dini_integral_with(w, lower, upper, true, &DiniOptions::default())
}

/// General driver. With `t = e^{-s}` the integrand becomes `ω(e^{-s})`
/// (times `s` when `log_weight`). The `s`-range is cut into blocks of length
/// `ln 2 · 2^j`; the first block is the top dyadic shell. Towards `t = 0` the
/// tail beyond the last block is bounded by the geometric extrapolation
/// `ρ/(1-ρ)·B` of the block ratio `ρ`. Ratios near 1 over several blocks
/// mean a `1/s` integrand and signal divergence; ratios well above 1 only
/// mean the integrand has not started to decay yet.
pub fn dini_integral_with<T: Real>(
    w: &Modulus<T>,
    lower: T,
    upper: T,
    log_weight: bool,
    opts: &DiniOptions<T>,
) -> Result<Integral<T>> {
    if !(lower >= T::zero() && lower < upper) {
        return Err(Error::param(format!("need 0 <= lower < upper, got [{lower}, {upper}]")));
    }
    let a = w.right_end();
    if upper > a * (T::one() + T::lit(1e-12)) {
        return Err(Error::param(format!("upper {upper} beyond right end {a}")));
    }
    if let Modulus::Table(tab) = w {
        // Re-validate: tables may have been built with unchecked data paths.
        super::Table::new(tab.abscissae().to_vec(), tab.values().to_vec())?;
    }
    if w.is_zero() {
        return Ok(Integral::Finite(Estimate::zero()));
    }
    let s_top = -upper.ln();
    let s_bottom = if lower == T::zero() { T::infinity() } else { -lower.ln() };
    let f = |s: T| {
        let v = w.eval_at_log(s);
        if log_weight {
            v * s
        } else {
            v
        }
    };
    let block = |lo: T, hi: T| -> Estimate<T> {
        match opts.panels_per_block {
            Some(n) => composite(f, lo, hi, n),
            None => integrate(f, lo, hi, opts.abs_tol, opts.rel_tol, 4000),
        }
    };

    let len0 = T::LN_2();
    let mut total = Estimate::zero();
    let mut lo = s_top;
    let mut prev: Option<T> = None;
    let mut stalled = 0usize;
    let mut last_tail = None;
    for j in 0..opts.max_blocks {
        let hi = (lo + len0 * T::lit(2f64.powi(j as i32))).min(s_bottom);
        let b = block(lo, hi);
        total = total + b;
        if hi >= s_bottom {
            return Ok(Integral::Finite(total));
        }
        let bv = b.value.abs();
        if bv == T::zero() {
            return Ok(Integral::Finite(total));
        }
        if let Some(p) = prev {
            let rho = bv / p;
            if rho >= opts.stall_ratio && rho <= T::one() / opts.stall_ratio {
                stalled += 1;
                last_tail = None;
                if stalled >= opts.stall_blocks {
                    return Ok(Integral::Divergent { partial: total.value, blocks: j + 1 });
                }
            } else if rho < T::one() {
                stalled = 0;
                let tail = bv * rho / (T::one() - rho);
                let target = opts.abs_tol.max(opts.rel_tol * total.value.abs());
                last_tail = Some(tail);
                if tail <= target {
                    total.error = total.error + tail;
                    return Ok(Integral::Finite(total));
                }
            } else {
                stalled = 0;
                last_tail = None;
            }
        }
        prev = Some(bv);
        lo = hi;
    }
    // Out of blocks: still contracting means a slowly converging tail.
    match last_tail {
        Some(tail) if stalled == 0 => {
            total.error = total.error + tail;
            total.value = total.value + tail;
            Ok(Integral::Finite(total))
        }
        _ => Ok(Integral::Divergent { partial: total.value, blocks: opts.max_blocks }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Neither,
    Dini,
    DoubleDini,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiniReport<T> {
    pub dini: Integral<T>,
    pub double_dini: Integral<T>,
    pub classification: Classification,
    pub quadrature_error: T,
}

/// Classifies `ω` by the integrals over `[0, min(a, 1)]`. Divergence of the
/// Dini integral overrides any verdict on the double integral.
pub fn classify<T: Real>(w: &Modulus<T>) -> Result<DiniReport<T>> {
    let upper = w.right_end().min(T::one());
    let dini = dini_integral(w, T::zero(), upper)?;
    let double_dini = double_dini_integral(w, T::zero(), upper)?;
    let classification = match (dini.is_finite(), double_dini.is_finite()) {
        (true, true) => Classification::DoubleDini,
        (true, false) => Classification::Dini,
        _ => Classification::Neither,
    };
    let quadrature_error = [dini, double_dini]
        .iter()
        .filter(|i| i.is_finite())
        .map(|i| i.error())
        .fold(T::zero(), |acc, e| acc + e);
    Ok(DiniReport { dini, double_dini, classification, quadrature_error })
}
