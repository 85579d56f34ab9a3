//! Moduli of continuity and mean oscillation.
//!
//! A [`Modulus`] is a nondecreasing function on `[0, a]` vanishing at 0. It is
//! either a closed form `c·(σt)^α·(ln(e/(σt)))^{-γ}`, a monotone sample table
//! with linear interpolation, the zero modulus, or a β-majorant of one of
//! these. Arguments beyond `a` evaluate to `ω(a)`.

mod dini;
mod empirical;
mod io;
mod majorant;
mod transform;

pub use dini::{classify, dini_integral, dini_integral_with, double_dini_integral, Classification, DiniOptions, DiniReport, Integral};
pub use empirical::{
    empirical_continuity_modulus, empirical_mean_oscillation, product_oscillation_check, EmpiricalModulus,
    ProductCheck, ProductRow,
};
pub use io::{ModulusSpec, SampleRow};
pub use majorant::majorant_beta;
pub use transform::{transform_chain, TransformChain, Transforms};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `coeff · (scale·t)^alpha · (ln(e/(scale·t)))^{-gamma}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedForm<T> {
    pub coeff: T,
    pub alpha: T,
    pub gamma: T,
    pub scale: T,
}

impl<T: Real> ClosedForm<T> {
    #[inline]
    fn eval_log(&self, log_t: T) -> T {
        if log_t == T::neg_infinity() {
            return T::zero();
        }
        let u = self.scale.ln() + log_t;
        let mut v = self.coeff;
        if self.alpha != T::zero() {
            v = v * (self.alpha * u).exp();
        }
        if self.gamma != T::zero() {
            v = v * (T::one() - u).powf(-self.gamma);
        }
        v
    }
}

/// Monotone sample table. An implicit node `(0, 0)` precedes the first sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Table<T> {
    t: Vec<T>,
    w: Vec<T>,
}

impl<T: Real> Table<T> {
    pub fn new(t: Vec<T>, w: Vec<T>) -> Result<Self> {
        if t.len() != w.len() || t.is_empty() {
            return Err(Error::InvalidModulus("table needs equal, nonzero lengths".into()));
        }
        if t[0] < T::zero() || w[0] < T::zero() {
            return Err(Error::InvalidModulus("negative first sample".into()));
        }
        if t[0] == T::zero() && w[0] != T::zero() {
            return Err(Error::InvalidModulus("ω(0) must vanish".into()));
        }
        for i in 1..t.len() {
            if !(t[i] > t[i - 1]) {
                return Err(Error::InvalidModulus(format!("abscissae not increasing at index {i}")));
            }
            if w[i] < w[i - 1] || !w[i].is_finite() {
                return Err(Error::InvalidModulus(format!("non-monotone sample at index {i}")));
            }
        }
        Ok(Self { t, w })
    }

    /// Builds a table from raw samples by taking the running maximum.
    pub fn monotone_envelope(t: Vec<T>, raw: &[T]) -> Result<Self> {
        let mut acc = T::zero();
        let w = raw
            .iter()
            .map(|&v| {
                acc = acc.max(v.max(T::zero()));
                acc
            })
            .collect();
        Self::new(t, w)
    }

    pub fn abscissae(&self) -> &[T] {
        &self.t
    }

    pub fn values(&self) -> &[T] {
        &self.w
    }

    pub fn right_end(&self) -> T {
        *self.t.last().unwrap()
    }

    fn eval(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let n = self.t.len();
        if t >= self.t[n - 1] {
            return self.w[n - 1];
        }
        let k = self.t.partition_point(|&s| s <= t);
        let (t0, w0) = if k == 0 { (T::zero(), T::zero()) } else { (self.t[k - 1], self.w[k - 1]) };
        let (t1, w1) = (self.t[k], self.w[k]);
        w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Modulus<T> {
    Zero { a: T },
    Closed { a: T, form: ClosedForm<T> },
    Table(Table<T>),
    /// `sup_{s∈[t,a]} (t/s)^β ω(s)` over a closed-form or tabulated base.
    Majorant(majorant::Majorant<T>),
}

impl<T: Real> Modulus<T> {
    pub fn zero(a: T) -> Self {
        Modulus::Zero { a }
    }

    /// `t^alpha` on `[0, a]`.
    pub fn power(alpha: T, a: T) -> Result<Self> {
        Self::closed(T::one(), alpha, T::zero(), T::one(), a)
    }

    /// `(ln(e/t))^{-gamma}` on `[0, a]`.
    pub fn log_power(gamma: T, a: T) -> Result<Self> {
        Self::closed(T::one(), T::zero(), gamma, T::one(), a)
    }

    /// `coeff · (scale·t)^alpha · (ln(e/(scale·t)))^{-gamma}` on `[0, a]`.
    ///
    /// Requires `alpha, gamma ≥ 0`, not both zero, and `scale·a ≤ 2` so the
    /// logarithm stays bounded away from zero.
    pub fn closed(coeff: T, alpha: T, gamma: T, scale: T, a: T) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidModulus(m.to_string()));
        if !(a > T::zero()) || !a.is_finite() {
            return bad("right end must be positive");
        }
        if !(coeff >= T::zero()) || !(scale > T::zero()) {
            return bad("coefficient and scale must be positive");
        }
        if alpha < T::zero() || gamma < T::zero() || (alpha == T::zero() && gamma == T::zero()) {
            return bad("need alpha, gamma >= 0, not both zero");
        }
        if scale * a > T::lit(2.0) {
            return bad("scale·a must not exceed 2");
        }
        if coeff == T::zero() {
            return Ok(Modulus::Zero { a });
        }
        Ok(Modulus::Closed { a, form: ClosedForm { coeff, alpha, gamma, scale } })
    }

    pub fn table(t: Vec<T>, w: Vec<T>) -> Result<Self> {
        Table::new(t, w).map(Modulus::Table)
    }

    /// Right end `a` of the domain.
    pub fn right_end(&self) -> T {
        match self {
            Modulus::Zero { a } | Modulus::Closed { a, .. } => *a,
            Modulus::Table(tab) => tab.right_end(),
            Modulus::Majorant(m) => m.right_end(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Modulus::Zero { .. } => true,
            Modulus::Table(tab) => tab.w.iter().all(|&v| v == T::zero()),
            Modulus::Majorant(m) => m.base().is_zero(),
            Modulus::Closed { .. } => false,
        }
    }

    pub fn as_closed(&self) -> Option<&ClosedForm<T>> {
        match self {
            Modulus::Closed { form, .. } => Some(form),
            _ => None,
        }
    }

    /// ω(t); arguments beyond the right end evaluate to ω(a).
    pub fn eval(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let t = t.min(self.right_end());
        match self {
            Modulus::Zero { .. } => T::zero(),
            Modulus::Closed { form, .. } => form.eval_log(t.ln()),
            Modulus::Table(tab) => tab.eval(t),
            Modulus::Majorant(m) => m.eval(t),
        }
    }

    /// ω(t) rejecting arguments outside `[0, a]`.
    pub fn try_eval(&self, t: T) -> Result<T> {
        let a = self.right_end();
        if t < T::zero() || t > a * (T::one() + T::epsilon() * T::lit(4.0)) {
            return Err(Error::param(format!("argument {t} outside [0, {a}]")));
        }
        Ok(self.eval(t))
    }

    /// ω(e^{-s}) evaluated without forming `e^{-s}` for closed forms.
    pub fn eval_at_log(&self, s: T) -> T {
        match self {
            Modulus::Closed { a, form } => {
                let log_t = (-s).min(a.ln());
                form.eval_log(log_t)
            }
            _ => self.eval((-s).exp()),
        }
    }

    /// Tabulates the modulus on `n` log-spaced points in `[t_min, a]`.
    pub fn to_table(&self, t_min: T, n: usize) -> Result<Self> {
        let a = self.right_end();
        if !(t_min > T::zero() && t_min < a) || n < 2 {
            return Err(Error::param("to_table needs 0 < t_min < a and n >= 2"));
        }
        let t = log_grid(t_min, a, n);
        let w = monotone_clean(t.iter().map(|&s| self.eval(s)).collect());
        Self::table(t, w)
    }

    /// Empirical doubling constants `(c₁, c₂)`: bounds of `ω(s)/ω(t)` for
    /// `s ∈ [t/2, t]` over a log grid of `t`. `c₂ = 1` for any monotone modulus.
    pub fn doubling_constants(&self) -> (T, T) {
        let a = self.right_end();
        let mut c1 = T::one();
        let mut c2 = T::zero();
        let t_lo = a * T::lit(1e-12);
        for t in log_grid(t_lo, a, 481) {
            let wt = self.eval(t);
            if wt == T::zero() {
                continue;
            }
            for frac in [0.5, 0.625, 0.75, 0.875, 1.0] {
                let r = self.eval(t * T::lit(frac)) / wt;
                c1 = c1.min(r);
                c2 = c2.max(r);
            }
        }
        if c2 == T::zero() {
            c2 = T::one();
        }
        (c1, c2)
    }

    /// Checks `ω(0) = 0`, monotonicity on a log grid and a positive doubling constant.
    pub fn validate(&self) -> Result<()> {
        let a = self.right_end();
        let mut prev = T::zero();
        for t in log_grid(a * T::lit(1e-12), a, 400) {
            let v = self.eval(t);
            if !v.is_finite() || v < prev * (T::one() - T::lit(64.0) * T::epsilon()) {
                return Err(Error::InvalidModulus(format!("not nondecreasing near t = {t}")));
            }
            prev = v;
        }
        Ok(())
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (l0 + (l1 - l0) * T::of(i) / T::of(n - 1)).exp()
            }
        })
        .collect()
}

/// Removes round-off decreases from sampled monotone data.
fn monotone_clean<T: Real>(mut w: Vec<T>) -> Vec<T> {
    let mut acc = T::zero();
    for v in w.iter_mut() {
        acc = acc.max(*v);
        *v = acc;
    }
    w
}
