//! Regularized distance: the fixed point `ψ = (2K)⁻¹ Ψ(ψ, x)` of the
//! mollified lift `Ψ(t, x) = ∫ ψ₀(x − t y) ζ(y) dy`.

use rayon::prelude::*;
use serde::Serialize;

use super::{GraphDomain, Mollifier};
use crate::error::{Error, Result};
use crate::fd::{self, T3};
use crate::field::{frob, M2, P2};

/// Iteration record of one fixed-point solve.
#[derive(Clone, Debug, Serialize)]
pub struct FixedPoint {
    pub value: f64,
    pub iterations: usize,
    /// `|t_{k+1} − t_k|` for each step.
    pub gaps: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RegularizedDistance {
    pub domain: GraphDomain,
    pub mollifier: Mollifier,
    /// Relative tolerance of the fixed-point iteration.
    pub tol: f64,
    pub max_iterations: usize,
}

impl RegularizedDistance {
    pub fn new(domain: GraphDomain, mollifier: Mollifier) -> Self {
        Self { domain, mollifier, tol: 1e-12, max_iterations: 60 }
    }

    /// Tolerance near machine precision, for finite differences of `ψ`.
    pub fn precise(mut self) -> Self {
        self.tol = 4.0 * f64::EPSILON;
        self
    }

    /// `Ψ(t, x)`.
    pub fn lift(&self, t: f64, x: P2) -> f64 {
        let d = &self.domain;
        self.mollifier.convolve(&|p| d.psi0(p), x, t)
    }

    /// Runs the iteration from `t₀ = ψ₀(x)/(2K)`.
    pub fn solve(&self, x: P2) -> Result<FixedPoint> {
        let k2 = 2.0 * self.domain.k;
        let psi0 = self.domain.psi0(x);
        if psi0 == 0.0 {
            return Ok(FixedPoint { value: 0.0, iterations: 0, gaps: Vec::new() });
        }
        let scale = 1.0 + psi0.abs();
        let mut t = psi0 / k2;
        let mut gaps = Vec::new();
        for it in 1..=self.max_iterations {
            let next = self.lift(t, x) / k2;
            let gap = (next - t).abs();
            gaps.push(gap);
            t = next;
            if gap <= self.tol * scale {
                return Ok(FixedPoint { value: t, iterations: it, gaps });
            }
            // Round-off floor: stop once the gap no longer shrinks.
            if gaps.len() >= 3 && gap >= gaps[gaps.len() - 2] && gap <= 64.0 * f64::EPSILON * scale {
                return Ok(FixedPoint { value: t, iterations: it, gaps });
            }
        }
        Err(Error::numeric(format!(
            "regularized distance did not converge in {} iterations at {:?}",
            self.max_iterations, x
        )))
    }

    /// `ψ(x)`.
    pub fn psi(&self, x: P2) -> Result<f64> {
        self.solve(x).map(|f| f.value)
    }

    /// `ψ(x)`, panicking on non-convergence (impossible for a valid `K`).
    pub fn psi_unchecked(&self, x: P2) -> f64 {
        self.psi(x).expect("contraction converges")
    }

    /// `Dψ` by implicit differentiation of the fixed-point identity:
    /// `Dψ = D_xΨ / (2K − ∂_tΨ)` at `t = ψ(x)`.
    pub fn gradient(&self, x: P2) -> Result<P2> {
        let t = self.psi(x)?;
        Ok(self.gradient_at(x, t))
    }

    fn gradient_at(&self, x: P2, t: f64) -> P2 {
        let (mut dx, mut dt) = ([0.0; 2], 0.0);
        for &(y, w) in &self.mollifier.nodes {
            let g = self.domain.grad_psi0([x[0] - t * y[0], x[1] - t * y[1]]);
            dx[0] += w * g[0];
            dx[1] += w * g[1];
            dt -= w * (g[0] * y[0] + g[1] * y[1]);
        }
        let den = 2.0 * self.domain.k - dt;
        [dx[0] / den, dx[1] / den]
    }

    /// `D²ψ` by Richardson differences of the gradient.
    pub fn hessian(&self, x: P2, h: f64) -> M2 {
        let grad = |p: P2| self.gradient(p).expect("contraction converges");
        let mut hs = fd::jacobian(&grad, x, h);
        let off = 0.5 * (hs[0][1] + hs[1][0]);
        hs[0][1] = off;
        hs[1][0] = off;
        hs
    }

    /// `D³ψ` by Richardson differences of the gradient.
    pub fn third(&self, x: P2, h: f64) -> T3 {
        let grad = |p: P2| self.gradient(p).expect("contraction converges");
        fd::jacobian_derivative(&grad, x, h)
    }

    /// Derivative ratios at the given samples. Samples with `ψ` below
    /// `min_psi` or whose stencil leaves the exact part of the graph are
    /// flagged as skipped.
    pub fn derivative_report(&self, samples: &[P2], min_psi: f64) -> DerivativeReport {
        let rho = self.domain.rho_dpsi0();
        let precise = self.clone().precise();
        let rows: Vec<DerivativeRow> = samples
            .par_iter()
            .map(|&x| {
                let psi = precise.psi_unchecked(x);
                let h = psi / 20.0;
                if !(psi >= min_psi) || x[0].abs() + 2.0 * h > self.domain.extent {
                    return DerivativeRow { x, psi, grad_norm: f64::NAN, second_ratio: f64::NAN, third_ratio: f64::NAN, skipped: true };
                }
                let g = precise.gradient_at(x, psi);
                let (hs, t3) = (precise.hessian(x, h), precise.third(x, h));
                let r = rho.eval(psi);
                let (second_ratio, third_ratio) = if r > 0.0 {
                    (frob(&hs) * psi / r, fd::norm3(&t3) * psi * psi / r)
                } else {
                    (0.0, 0.0)
                };
                DerivativeRow { x, psi, grad_norm: g[0].hypot(g[1]), second_ratio, third_ratio, skipped: false }
            })
            .collect();
        let sup = |f: &dyn Fn(&DerivativeRow) -> f64| rows.iter().filter(|r| !r.skipped).map(f).fold(0.0, f64::max);
        DerivativeReport {
            max_grad: sup(&|r| r.grad_norm),
            c_second: sup(&|r| r.second_ratio),
            c_third: sup(&|r| r.third_ratio),
            rows,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeRow {
    pub x: P2,
    pub psi: f64,
    pub grad_norm: f64,
    /// `|D²ψ|·ψ/ϱ(ψ)`.
    pub second_ratio: f64,
    /// `|D³ψ|·ψ²/ϱ(ψ)`.
    pub third_ratio: f64,
    pub skipped: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeReport {
    pub rows: Vec<DerivativeRow>,
    pub max_grad: f64,
    pub c_second: f64,
    pub c_third: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_space_is_half_height() {
        let rd = RegularizedDistance::new(GraphDomain::flat(2.0), Mollifier::default());
        for x in [[0.1, 0.3], [-0.5, 1.0], [0.0, 0.0], [0.2, -0.4]] {
            assert!((rd.psi(x).unwrap() - x[1] / 2.0).abs() < 1e-14);
        }
        let rep = rd.derivative_report(&[[0.0, 0.2], [0.3, 0.05]], 1e-6);
        assert!(rep.c_second == 0.0 && rep.c_third == 0.0);
        assert!((rep.max_grad - 0.5).abs() < 1e-13);
    }

    #[test]
    fn boundary_points_are_zero() {
        let d = GraphDomain::parabolic(0.25, 2.0).unwrap();
        let rd = RegularizedDistance::new(d.clone(), Mollifier::default());
        assert_eq!(rd.psi(d.boundary_point(0.4)).unwrap(), 0.0);
    }

    #[test]
    fn sign_and_comparability() {
        let d = GraphDomain::parabolic(0.25, 2.0).unwrap();
        let rd = RegularizedDistance::new(d.clone(), Mollifier::default());
        for x in [[0.3, 0.5], [-0.7, 0.2], [0.1, -0.3]] {
            let psi = rd.psi(x).unwrap();
            let ratio = d.k * psi / d.psi0(x);
            assert!((1.0 / 3.0..=1.0).contains(&ratio), "{x:?}: {ratio}");
            assert_eq!(psi.signum(), d.psi0(x).signum());
        }
    }

    #[test]
    fn implicit_gradient_matches_differences() {
        let d = GraphDomain::parabolic(0.25, 2.0).unwrap();
        let rd = RegularizedDistance::new(d, Mollifier::default()).precise();
        let x = [0.35, 0.4];
        let g = rd.gradient(x).unwrap();
        let fdg = fd::gradient(&|p| rd.psi_unchecked(p), x, 1e-3);
        assert!((g[0] - fdg[0]).abs() < 1e-9 && (g[1] - fdg[1]).abs() < 1e-9, "{g:?} {fdg:?}");
        assert!(g[0].hypot(g[1]) <= 1.0);
    }

    #[test]
    fn contraction_of_gaps() {
        let d = GraphDomain::parabolic(0.25, 2.0).unwrap();
        let rd = RegularizedDistance::new(d, Mollifier::default()).precise();
        let fp = rd.solve([0.4, 0.6]).unwrap();
        for w in fp.gaps.windows(2) {
            if w[0] > 1e-14 {
                assert!(w[1] <= (0.5 + 1e-12) * w[0] + 1e-16);
            }
        }
    }
}
