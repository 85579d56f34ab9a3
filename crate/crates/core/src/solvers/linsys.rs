//! Sparse linear systems: direct LU at desk scale, Jacobi-preconditioned
//! BiCGSTAB beyond it.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Above this many unknowns the iterative solver is used.
pub const DIRECT_LIMIT: usize = 300 * 300;

#[derive(Clone, Debug, Default)]
pub struct SparseBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

#[derive(Clone, Debug)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    /// `‖Ax − b‖∞ / max(‖b‖∞, 1)`.
    pub residual: f64,
    pub iterations: usize,
    pub direct: bool,
}

impl SparseBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::with_capacity(9 * n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        if v != 0.0 {
            self.entries.push((row, col, v));
        }
    }

    /// Entries sorted by column then row with duplicates summed.
    fn merged(&self) -> Vec<(usize, usize, f64)> {
        let mut e = self.entries.clone();
        e.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(e.len());
        for (r, c, v) in e {
            match out.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => out.push((r, c, v)),
            }
        }
        out
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.mul(x);
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        ax.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
    }

    pub fn solve(&self, b: &[f64]) -> Result<LinearSolution> {
        if self.n <= DIRECT_LIMIT {
            self.solve_direct(b)
        } else {
            self.solve_iterative(b, 1e-10, 20 * self.n)
        }
    }

    pub fn solve_direct(&self, b: &[f64]) -> Result<LinearSolution> {
        if b.len() != self.n {
            return Err(Error::param("right-hand side length mismatch"));
        }
        let trip: Vec<Triplet<usize, usize, f64>> = self.merged().into_iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &trip)
            .map_err(|e| Error::Numeric(format!("sparse assembly: {e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::Singular(format!("{e:?}")))?;
        let rhs = Col::from_fn(self.n, |i| b[i]);
        let sol = lu.solve(&rhs);
        let x: Vec<f64> = (0..self.n).map(|i| sol[i]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("LU produced non-finite values".into()));
        }
        let residual = self.residual(&x, b);
        if residual > 1e-6 {
            return Err(Error::Singular(format!("direct solve residual {residual:.3e}")));
        }
        Ok(LinearSolution { x, residual, iterations: 1, direct: true })
    }

    /// BiCGSTAB with diagonal preconditioning.
    pub fn solve_iterative(&self, b: &[f64], tol: f64, max_iter: usize) -> Result<LinearSolution> {
        let n = self.n;
        let mut diag = vec![0.0; n];
        for &(r, c, v) in &self.entries {
            if r == c {
                diag[r] += v;
            }
        }
        if diag.iter().any(|d| *d == 0.0) {
            return Err(Error::Singular("zero diagonal entry".into()));
        }
        let prec = |v: &[f64]| v.iter().zip(&diag).map(|(a, d)| a / d).collect::<Vec<_>>();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let bnorm = dot(b, b).sqrt().max(1e-300);
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let r0 = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        for it in 1..=max_iter {
            let rho_new = dot(&r0, &r);
            if rho_new.abs() < 1e-300 {
                return Err(Error::Numeric("BiCGSTAB breakdown".into()));
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            let ph = prec(&p);
            v = self.mul(&ph);
            alpha = rho / dot(&r0, &v);
            let s: Vec<f64> = r.iter().zip(&v).map(|(a, b)| a - alpha * b).collect();
            let sh = prec(&s);
            let t = self.mul(&sh);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for i in 0..n {
                x[i] += alpha * ph[i] + omega * sh[i];
                r[i] = s[i] - omega * t[i];
            }
            if dot(&r, &r).sqrt() / bnorm < tol {
                let residual = self.residual(&x, b);
                return Ok(LinearSolution { x, residual, iterations: it, direct: false });
            }
            if omega == 0.0 {
                return Err(Error::Numeric("BiCGSTAB stagnated".into()));
            }
        }
        Err(Error::Numeric(format!("BiCGSTAB did not reach {tol:e} in {max_iter} iterations")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> SparseBuilder {
        let mut a = SparseBuilder::new(n);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn direct_and_iterative_agree() {
        let a = laplace_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let d = a.solve_direct(&b).unwrap();
        let it = a.solve_iterative(&b, 1e-12, 2000).unwrap();
        assert!(d.residual < 1e-12);
        for (x, y) in d.x.iter().zip(&it.x) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let mut a = SparseBuilder::new(1);
        a.add(0, 0, 1.0);
        a.add(0, 0, 1.0);
        assert_eq!(a.solve(&[4.0]).unwrap().x, vec![2.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = SparseBuilder::new(2);
        a.add(0, 0, 1.0);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 1.0);
        assert!(a.solve(&[1.0, 0.0]).is_err());
    }
}
