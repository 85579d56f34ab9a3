//! Central finite differences of planar functions with one Richardson step.

use crate::field::{M2, P2};

/// Third-derivative tensor `D_{ijk}`.
pub type T3 = [[[f64; 2]; 2]; 2];

#[inline]
fn shift(p: P2, d: usize, s: f64) -> P2 {
    let mut q = p;
    q[d] += s;
    q
}

fn grad_raw(f: &dyn Fn(P2) -> f64, p: P2, h: f64) -> P2 {
    [0, 1].map(|d| (f(shift(p, d, h)) - f(shift(p, d, -h))) / (2.0 * h))
}

fn hess_raw(f: &dyn Fn(P2) -> f64, p: P2, h: f64) -> M2 {
    let c = f(p);
    let dxx = (f(shift(p, 0, h)) - 2.0 * c + f(shift(p, 0, -h))) / (h * h);
    let dyy = (f(shift(p, 1, h)) - 2.0 * c + f(shift(p, 1, -h))) / (h * h);
    let pp = f([p[0] + h, p[1] + h]);
    let pm = f([p[0] + h, p[1] - h]);
    let mp = f([p[0] - h, p[1] + h]);
    let mm = f([p[0] - h, p[1] - h]);
    let dxy = (pp - pm - mp + mm) / (4.0 * h * h);
    [[dxx, dxy], [dxy, dyy]]
}

/// Gradient with Richardson extrapolation of steps `h` and `h/2` (fourth order).
pub fn gradient(f: &dyn Fn(P2) -> f64, p: P2, h: f64) -> P2 {
    let a = grad_raw(f, p, h);
    let b = grad_raw(f, p, 0.5 * h);
    [0, 1].map(|d| (4.0 * b[d] - a[d]) / 3.0)
}

pub fn hessian(f: &dyn Fn(P2) -> f64, p: P2, h: f64) -> M2 {
    let a = hess_raw(f, p, h);
    let b = hess_raw(f, p, 0.5 * h);
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = (4.0 * b[i][j] - a[i][j]) / 3.0;
        }
    }
    out
}

/// Third derivatives as central differences of the Hessian.
pub fn third(f: &dyn Fn(P2) -> f64, p: P2, h: f64) -> T3 {
    let mut out = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        let plus = hessian(f, shift(p, k, h), h);
        let minus = hessian(f, shift(p, k, -h), h);
        let plus2 = hessian(f, shift(p, k, 0.5 * h), h);
        let minus2 = hessian(f, shift(p, k, -0.5 * h), h);
        for i in 0..2 {
            for j in 0..2 {
                let a = (plus[i][j] - minus[i][j]) / (2.0 * h);
                let b = (plus2[i][j] - minus2[i][j]) / h;
                out[i][j][k] = (4.0 * b - a) / 3.0;
            }
        }
    }
    out
}

/// Jacobian `J[i][k] = ∂_k F^i` of a planar map.
pub fn jacobian(f: &dyn Fn(P2) -> P2, p: P2, h: f64) -> M2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        let g = gradient(&|q| f(q)[i], p, h);
        out[i] = g;
    }
    out
}

/// Derivatives `D_k J_{ij}` of the Jacobian of a planar map, with Richardson.
pub fn jacobian_derivative(f: &dyn Fn(P2) -> P2, p: P2, h: f64) -> T3 {
    let mut out = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        let a = [jacobian(f, shift(p, k, h), h), jacobian(f, shift(p, k, -h), h)];
        let b = [jacobian(f, shift(p, k, 0.5 * h), h), jacobian(f, shift(p, k, -0.5 * h), h)];
        for i in 0..2 {
            for j in 0..2 {
                let coarse = (a[0][i][j] - a[1][i][j]) / (2.0 * h);
                let fine = (b[0][i][j] - b[1][i][j]) / h;
                out[i][j][k] = (4.0 * fine - coarse) / 3.0;
            }
        }
    }
    out
}

pub fn norm3(t: &T3) -> f64 {
    t.iter().flatten().flatten().map(|v| v * v).sum::<f64>().sqrt()
}
