//! Growth envelope for linear systems `X′ = A(t)X + B(t)` on `[0, τ)` whose
//! forcing blows up like `(τ − t)^{-2}ϱ(τ − t)`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modulus::Modulus;
use crate::ode::rk4_step;
use crate::scalar::Real;

pub type MatrixFn<T> = Arc<dyn Fn(T) -> Vec<T> + Send + Sync>;

/// `X′ = A(t)X + B(t)` with `|A| ≤ K₀`, `|B| ≤ K₁e^{K₀t}(τ − t)^{-2}ϱ(τ − t)`
/// and `t^{-μ}ϱ(t)` nonincreasing.
#[derive(Clone)]
pub struct EnvelopeProblem<T: Real> {
    pub dim: usize,
    /// Row-major `dim × dim` matrix.
    pub a: MatrixFn<T>,
    pub b: MatrixFn<T>,
    pub k0: T,
    pub k1: T,
    pub rho: Modulus<T>,
    pub mu: T,
    pub tau: T,
    pub x0: Vec<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeOutcome<T> {
    /// `min_t (bound − |X|)/bound`.
    pub margin: T,
    pub worst_t: T,
    /// `N₀ = max{τϱ(τ)^{-1}|X(0)|, K₁/(1 − μ)}`.
    pub n0: T,
    pub steps: usize,
    pub pass: bool,
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

impl<T: Real> EnvelopeProblem<T> {
    /// `N₀e^{K₀t}(τ − t)^{-1}ϱ(τ − t)`.
    pub fn bound(&self, n0: T, t: T) -> T {
        let gap = self.tau - t;
        n0 * (self.k0 * t).exp() * self.rho.eval(gap) / gap
    }

    pub fn n0(&self) -> T {
        let lhs = self.tau / self.rho.eval(self.tau) * norm(&self.x0);
        let rhs = self.k1 / (T::one() - self.mu);
        lhs.max(rhs)
    }

    fn check_at(&self, t: T, prev_ratio: &mut Option<T>) -> Result<()> {
        let slack = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        let gap = self.tau - t;
        let fail = |what: String| Err(Error::Hypothesis { t: t.f64(), what });
        let r = self.rho.eval(gap);
        if !(r > T::zero()) {
            return fail(format!("ϱ({gap}) must be positive"));
        }
        let ratio = r / gap.powf(self.mu);
        if let Some(p) = *prev_ratio {
            if ratio < p * (T::one() - slack) {
                return fail("t^{-μ}ϱ(t) is not nonincreasing".into());
            }
        }
        *prev_ratio = Some(ratio);
        let a = (self.a)(t);
        if a.len() != self.dim * self.dim {
            return fail("matrix A has the wrong size".into());
        }
        let na = norm(&a);
        if na > self.k0 * (T::one() + slack) + T::lit(1e-12) {
            return fail(format!("|A| = {na} exceeds K₀ = {}", self.k0));
        }
        let b = (self.b)(t);
        if b.len() != self.dim {
            return fail("vector B has the wrong size".into());
        }
        let nb = norm(&b);
        let cap = self.k1 * (self.k0 * t).exp() * r / (gap * gap);
        if nb > cap * (T::one() + slack) + T::min_positive_value() {
            return fail(format!("|B| = {nb} exceeds its envelope {cap}"));
        }
        Ok(())
    }
}

/// Integrates in `s = −ln(τ − t)` with step `h` up to `t = τ(1 − 2^{-20})`
/// and returns the smallest relative margin to the envelope; passes when
/// the margin is at least `−1e-6`.
pub fn envelope_check<T: Real>(p: &EnvelopeProblem<T>, h: T) -> Result<EnvelopeOutcome<T>> {
    let zero = T::zero();
    if !(p.tau > zero) || !(p.mu > zero && p.mu < T::one()) || p.k0 < zero || p.k1 < zero || !(h > zero) {
        return Err(Error::param("need τ > 0, μ ∈ (0, 1), K₀, K₁ ≥ 0 and a positive step"));
    }
    if p.x0.len() != p.dim {
        return Err(Error::param("initial state has the wrong size"));
    }
    let s0 = -p.tau.ln();
    let span = T::lit(20.0) * T::LN_2();
    let steps = (span / h).ceil().to_usize().unwrap_or(1).max(1);
    let hs = span / T::of(steps);
    let n0 = p.n0();
    let margin_at = |t: T, x: &[T]| {
        let bound = p.bound(n0, t);
        let nx = norm(x);
        if bound > zero {
            (bound - nx) / bound
        } else if nx == zero {
            zero
        } else {
            T::neg_infinity()
        }
    };
    let mut prev = None;
    let mut x = p.x0.clone();
    let mut worst = (margin_at(zero, &x), zero);
    p.check_at(zero, &mut prev)?;
    let dim = p.dim;
    let mut rhs = |s: T, y: &[T], out: &mut [T]| {
        let gap = (-s).exp();
        let t = p.tau - gap;
        let a = (p.a)(t);
        let b = (p.b)(t);
        for i in 0..dim {
            let ax: T = (0..dim).map(|j| a[i * dim + j] * y[j]).sum();
            out[i] = gap * (ax + b[i]);
        }
    };
    for k in 0..steps {
        let s = s0 + hs * T::of(k);
        x = rk4_step(&mut rhs, s, &x, hs);
        let t = p.tau - (-(s + hs)).exp();
        p.check_at(t, &mut prev)?;
        let m = margin_at(t, &x);
        if m < worst.0 {
            worst = (m, t);
        }
    }
    Ok(EnvelopeOutcome { margin: worst.0, worst_t: worst.1, n0, steps, pass: worst.0 >= T::lit(-1e-6) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: impl Fn(f64) -> f64 + Send + Sync + 'static, k0: f64, k1: f64, rho: Modulus<f64>, mu: f64, x0: f64) -> EnvelopeProblem<f64> {
        EnvelopeProblem { dim: 1, a: Arc::new(move |_| vec![a]), b: Arc::new(move |t| vec![b(t)]), k0, k1, rho, mu, tau: 1.0, x0: vec![x0] }
    }

    #[test]
    fn constant_solution() {
        let p = scalar(0.0, |_| 0.0, 0.0, 0.0, Modulus::power(0.5, 1.0).unwrap(), 0.5, 2.0);
        let out = envelope_check(&p, 0.01).unwrap();
        // margin is 1 − √(τ − t)/√τ, smallest at t = 0.
        assert!(out.margin.abs() < 1e-15 && out.pass);
    }

    #[test]
    fn exponential_growth_has_zero_margin() {
        let p = scalar(1.5, |_| 0.0, 1.5, 0.0, Modulus::power(0.5, 1.0).unwrap(), 0.5, 1.0);
        let out = envelope_check(&p, 0.01).unwrap();
        assert!(out.margin.abs() < 1e-9 && out.pass, "{}", out.margin);
    }

    #[test]
    fn hypothesis_violation_names_time() {
        let p = scalar(3.0, |_| 0.0, 1.0, 0.0, Modulus::power(0.5, 1.0).unwrap(), 0.5, 1.0);
        assert!(matches!(envelope_check(&p, 0.01), Err(Error::Hypothesis { t, .. }) if t == 0.0));
        let p = scalar(0.0, |_| 0.0, 0.0, 0.0, Modulus::power(0.8, 1.0).unwrap(), 0.5, 1.0);
        assert!(matches!(envelope_check(&p, 0.01), Err(Error::Hypothesis { .. })));
    }

    #[test]
    fn single_precision() {
        let p = EnvelopeProblem::<f32> {
            dim: 1,
            a: Arc::new(|_| vec![0.5]),
            b: Arc::new(|_| vec![0.0]),
            k0: 0.5,
            k1: 0.0,
            rho: Modulus::power(0.5, 1.0).unwrap(),
            mu: 0.5,
            tau: 1.0,
            x0: vec![1.0],
        };
        let out = envelope_check(&p, 0.02).unwrap();
        assert!(out.margin > -1e-4);
    }
}
