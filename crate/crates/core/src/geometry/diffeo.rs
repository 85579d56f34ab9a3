//! Coordinate changes with Jacobians, second derivatives and inverses.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::{self, T3};
use crate::field::{M2, P2};

/// A pair of mutually inverse planar maps `x ↦ z` and `z ↦ x`.
pub trait DiffeoMap: Send + Sync {
    fn forward(&self, x: P2) -> P2;

    fn inverse(&self, z: P2) -> Result<P2>;

    /// Points `x` on which both directions are valid.
    fn contains(&self, x: P2) -> bool;

    /// Finite-difference step used by the default derivative evaluators.
    fn fd_step(&self, _x: P2) -> f64 {
        1e-3
    }

    /// `J[i][k] = ∂_k zⁱ`.
    fn jacobian(&self, x: P2) -> M2 {
        fd::jacobian(&|p| self.forward(p), x, self.fd_step(x))
    }

    /// `D_k D_j zⁱ` stored as `[i][j][k]`.
    fn second(&self, x: P2) -> T3 {
        fd::jacobian_derivative(&|p| self.forward(p), x, self.fd_step(x))
    }
}

/// One sampled point of a map.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MapSample {
    pub x: f64,
    pub y: f64,
    pub z1: f64,
    pub z2: f64,
    /// `|x(z(x)) − x|`.
    pub round_trip: f64,
}

/// Largest `|x(z(x)) − x|` over the samples inside the validity region,
/// with the sampled rows.
pub fn round_trip_error(map: &dyn DiffeoMap, samples: &[P2]) -> Result<(f64, Vec<MapSample>)> {
    let mut worst = 0.0f64;
    let mut rows = Vec::with_capacity(samples.len());
    for &x in samples.iter().filter(|&&x| map.contains(x)) {
        let z = map.forward(x);
        let back = map.inverse(z)?;
        let e = (back[0] - x[0]).hypot(back[1] - x[1]);
        worst = worst.max(e);
        rows.push(MapSample { x: x[0], y: x[1], z1: z[0], z2: z[1], round_trip: e });
    }
    Ok((worst, rows))
}

/// Solves `f(x) = target` for nondecreasing `f` on a bracket `[lo, hi]`
/// by the Illinois variant of regula falsi.
pub fn solve_monotone(f: &dyn Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (mut flo, mut fhi) = (f(lo) - target, f(hi) - target);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::numeric(format!("root not bracketed on [{lo}, {hi}]")));
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x) - target;
        if fx == 0.0 || hi - lo <= tol {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if (hi - lo).abs() <= tol {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::numeric("root search did not converge"))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Shear;

    impl DiffeoMap for Shear {
        fn forward(&self, x: P2) -> P2 {
            [x[0], x[1] + x[0] * x[0]]
        }
        fn inverse(&self, z: P2) -> Result<P2> {
            Ok([z[0], z[1] - z[0] * z[0]])
        }
        fn contains(&self, _x: P2) -> bool {
            true
        }
    }

    #[test]
    fn default_derivatives() {
        let j = Shear.jacobian([0.3, 0.1]);
        assert!((j[1][0] - 0.6).abs() < 1e-10 && (j[1][1] - 1.0).abs() < 1e-10 && j[0][1].abs() < 1e-12);
        let s = Shear.second([0.3, 0.1]);
        assert!((s[1][0][0] - 2.0).abs() < 1e-6 && s[1][1][1].abs() < 1e-6);
        let (e, rows) = round_trip_error(&Shear, &[[0.1, 0.2], [-0.5, 0.4]]).unwrap();
        assert!(e < 1e-15 && rows.len() == 2);
    }

    #[test]
    fn monotone_root() {
        let x = solve_monotone(&|x: f64| x.powi(3) + x, 2.0, -3.0, 3.0, 1e-15).unwrap();
        assert!((x - 1.0).abs() < 1e-13);
        assert!(solve_monotone(&|x: f64| x, 5.0, 0.0, 1.0, 1e-12).is_err());
    }
}
