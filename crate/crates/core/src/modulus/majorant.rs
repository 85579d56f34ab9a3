//! The β-majorant `ω̃(t) = sup_{s∈[t,a]} (t/s)^β ω(s)`.
//!
//! On closed forms `s ↦ s^{-β}ω(s)` is log-convex in `ln s`, and on each
//! linear piece of a table it decreases then increases, so the supremum is
//! attained at `t`, at `a`, or at a table node. Both cases are evaluated exactly.

use super::Modulus;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Majorant<T> {
    base: Box<Modulus<T>>,
    beta: T,
    /// `suffix[k] = max_{j ≥ k} t_j^{-β} w_j` over table nodes.
    suffix: Vec<T>,
}

impl<T: Real> Majorant<T> {
    pub fn base(&self) -> &Modulus<T> {
        &self.base
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub(super) fn right_end(&self) -> T {
        self.base.right_end()
    }

    pub(super) fn eval(&self, t: T) -> T {
        let a = self.right_end();
        let own = self.base.eval(t);
        match &*self.base {
            Modulus::Table(tab) => {
                let k = tab.abscissae().partition_point(|&s| s <= t);
                if k >= self.suffix.len() {
                    own
                } else {
                    own.max(t.powf(self.beta) * self.suffix[k])
                }
            }
            _ => own.max((t / a).powf(self.beta) * self.base.eval(a)),
        }
    }
}

/// Builds `ω̃`. Bases other than closed forms and tables are tabulated first
/// on 4000 log-spaced points spanning 12 decades.
pub fn majorant_beta<T: Real>(w: &Modulus<T>, beta: T) -> Result<Modulus<T>> {
    if !(beta > T::zero() && beta <= T::one()) {
        return Err(Error::param(format!("beta = {beta} outside (0, 1]")));
    }
    let base = match w {
        Modulus::Zero { .. } => return Ok(w.clone()),
        Modulus::Closed { .. } | Modulus::Table(_) => w.clone(),
        Modulus::Majorant(m) if m.beta == beta => return Ok(w.clone()),
        Modulus::Majorant(_) => w.to_table(w.right_end() * T::lit(1e-12), 4000)?,
    };
    let suffix = match &base {
        Modulus::Table(tab) => {
            let (t, v) = (tab.abscissae(), tab.values());
            let mut out = vec![T::zero(); t.len()];
            let mut acc = T::zero();
            for k in (0..t.len()).rev() {
                acc = acc.max(v[k] / t[k].powf(beta));
                out[k] = acc;
            }
            out
        }
        _ => Vec::new(),
    };
    Ok(Modulus::Majorant(Majorant { base: Box::new(base), beta, suffix }))
}
