//! Oblique boundary operators `β⁰u + β·∇u`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::T3;
use crate::field::{M2, P2};
use crate::geometry::GraphDomain;
use crate::modulus::Modulus;

/// Closed-form vector fields `β(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorFamily {
    Constant { v: P2 },
    /// `v + M x`.
    Affine { v: P2, m: M2 },
    /// `v + amp · sin(freq · x¹)`.
    Wave { v: P2, amp: P2, freq: f64 },
}

impl VectorFamily {
    /// `e_n` rotated by `angle` towards `−e₁`.
    pub fn rotated_normal(angle: f64) -> Self {
        VectorFamily::Constant { v: [-angle.sin(), angle.cos()] }
    }

    pub fn eval(&self, x: P2) -> P2 {
        match *self {
            VectorFamily::Constant { v } => v,
            VectorFamily::Affine { v, m } => [v[0] + m[0][0] * x[0] + m[0][1] * x[1], v[1] + m[1][0] * x[0] + m[1][1] * x[1]],
            VectorFamily::Wave { v, amp, freq } => {
                let s = (freq * x[0]).sin();
                [v[0] + amp[0] * s, v[1] + amp[1] * s]
            }
        }
    }

    /// `J[i][k] = ∂_k βⁱ`.
    pub fn jacobian(&self, x: P2) -> M2 {
        match *self {
            VectorFamily::Constant { .. } => [[0.0; 2]; 2],
            VectorFamily::Affine { m, .. } => m,
            VectorFamily::Wave { amp, freq, .. } => {
                let c = freq * (freq * x[0]).cos();
                [[amp[0] * c, 0.0], [amp[1] * c, 0.0]]
            }
        }
    }

    /// `∂_j ∂_k βⁱ` as `[i][j][k]`.
    pub fn second(&self, x: P2) -> T3 {
        match *self {
            VectorFamily::Wave { amp, freq, .. } => {
                let s = -freq * freq * (freq * x[0]).sin();
                let mut t = [[[0.0; 2]; 2]; 2];
                t[0][0][0] = amp[0] * s;
                t[1][0][0] = amp[1] * s;
                t
            }
            _ => [[[0.0; 2]; 2]; 2],
        }
    }

    /// Modulus of continuity of `Dβ` on `[0, 1]`.
    pub fn rho_jacobian(&self) -> Modulus<f64> {
        match *self {
            VectorFamily::Wave { amp, freq, .. } if amp != [0.0, 0.0] && freq != 0.0 => {
                Modulus::closed(amp[0].hypot(amp[1]) * freq * freq, 1.0, 0.0, 1.0, 1.0).expect("valid")
            }
            _ => Modulus::zero(1.0),
        }
    }
}

/// `β⁰u + β·∇u` with obliqueness constant `μ₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObliqueField {
    #[serde(default)]
    pub beta0: f64,
    pub beta: VectorFamily,
    pub mu0: f64,
}

impl ObliqueField {
    pub fn new(beta0: f64, beta: VectorFamily, mu0: f64) -> Result<Self> {
        if !(mu0 > 0.0 && mu0 <= 1.0) {
            return Err(Error::param("obliqueness constant must lie in (0, 1]"));
        }
        Ok(Self { beta0, beta, mu0 })
    }

    /// Smallest `|β·ν|/|β|` over boundary points with the given abscissae.
    pub fn obliqueness(&self, domain: &GraphDomain, abscissae: &[f64]) -> f64 {
        abscissae
            .iter()
            .map(|&s| {
                let x = domain.boundary_point(s);
                let b = self.beta.eval(x);
                let n = domain.inward_normal(s);
                let len = b[0].hypot(b[1]);
                if len == 0.0 {
                    0.0
                } else {
                    (b[0] * n[0] + b[1] * n[1]).abs() / len
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Errors unless `|β·ν| ≥ μ₀|β|` at every sampled boundary point.
    pub fn check(&self, domain: &GraphDomain, abscissae: &[f64]) -> Result<f64> {
        let m = self.obliqueness(domain, abscissae);
        if m < self.mu0 {
            return Err(Error::Geometry(format!("obliqueness {m:.4} below μ₀ = {}", self.mu0)));
        }
        Ok(m)
    }
}
