//! Graph domains `{xⁿ > γ(x′)}` near a distinguished boundary point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Region, P2};
use crate::modulus::Modulus;

/// Boundary graph family. Each is continued linearly beyond the extent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryShape {
    Flat,
    /// `γ(x) = c·x²`.
    Parabolic { c: f64 },
    /// `γ(x) = c·|x|^{1+α}`, `α ∈ (0, 1]`.
    Power { c: f64, alpha: f64 },
}

impl BoundaryShape {
    fn raw(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            BoundaryShape::Flat => (0.0, 0.0, 0.0),
            BoundaryShape::Parabolic { c } => (c * x * x, 2.0 * c * x, 2.0 * c),
            BoundaryShape::Power { c, alpha } => {
                let a = x.abs();
                let d2 = if a == 0.0 { if alpha < 1.0 { f64::INFINITY } else { 2.0 * c } } else { c * (1.0 + alpha) * alpha * a.powf(alpha - 1.0) };
                (c * a.powf(1.0 + alpha), c * (1.0 + alpha) * a.powf(alpha) * x.signum(), d2)
            }
        }
    }
}

/// Graph domain with its comparability constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDomain {
    pub shape: BoundaryShape,
    /// Half-width on which `γ` follows its formula.
    pub extent: f64,
    /// Global Lipschitz constant of `γ`.
    pub lipschitz: f64,
    /// `K = sup |Dψ₀|`.
    pub k: f64,
    /// `δ` with `δψ₀ ≤ dist(·, ∂Ω) ≤ δ⁻¹ψ₀`.
    pub delta: f64,
    /// Patch half-width `b` with `|Dγ| < 1/2` on `|x′| < b`.
    pub b: f64,
}

impl GraphDomain {
    pub fn new(shape: BoundaryShape, extent: f64) -> Result<Self> {
        if !(extent > 0.0) {
            return Err(Error::param("extent must be positive"));
        }
        match shape {
            BoundaryShape::Parabolic { c } if !(c > 0.0) => return Err(Error::param("parabolic c must be positive")),
            BoundaryShape::Power { c, alpha } if !(c > 0.0 && alpha > 0.0 && alpha <= 1.0) => {
                return Err(Error::param("power family needs c > 0, alpha in (0, 1]"))
            }
            _ => {}
        }
        let lipschitz = shape.raw(extent).1.abs();
        // Largest b ≤ extent with |γ'| < 1/2 (γ' is monotone in |x|).
        let b = match shape {
            BoundaryShape::Flat => extent,
            _ => {
                let (mut lo, mut hi) = (0.0, extent);
                if shape.raw(extent).1.abs() < 0.5 {
                    lo = extent;
                } else {
                    for _ in 0..100 {
                        let m = 0.5 * (lo + hi);
                        if shape.raw(m).1.abs() < 0.5 {
                            lo = m;
                        } else {
                            hi = m;
                        }
                    }
                }
                lo
            }
        };
        let k = (1.0 + lipschitz * lipschitz).sqrt();
        Ok(Self { shape, extent, lipschitz, k, delta: 1.0 / k, b })
    }

    pub fn flat(extent: f64) -> Self {
        Self::new(BoundaryShape::Flat, extent).expect("valid flat domain")
    }

    /// `γ(x) = c x²`.
    pub fn parabolic(c: f64, extent: f64) -> Result<Self> {
        Self::new(BoundaryShape::Parabolic { c }, extent)
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.shape, BoundaryShape::Flat)
    }

    /// `(γ, γ′, γ″)` at `x`.
    pub fn gamma_all(&self, x: f64) -> (f64, f64, f64) {
        let e = self.extent;
        if x.abs() <= e {
            return self.shape.raw(x);
        }
        let edge = e * x.signum();
        let (g, d, _) = self.shape.raw(edge);
        (g + d * (x - edge), d, 0.0)
    }

    pub fn gamma(&self, x: f64) -> f64 {
        self.gamma_all(x).0
    }

    pub fn dgamma(&self, x: f64) -> f64 {
        self.gamma_all(x).1
    }

    /// Defining function `ψ₀(x) = xⁿ − γ(x′)`.
    pub fn psi0(&self, p: P2) -> f64 {
        p[1] - self.gamma(p[0])
    }

    pub fn grad_psi0(&self, p: P2) -> P2 {
        [-self.dgamma(p[0]), 1.0]
    }

    pub fn boundary_point(&self, x: f64) -> P2 {
        [x, self.gamma(x)]
    }

    /// Unit normal pointing into the domain.
    pub fn inward_normal(&self, x: f64) -> P2 {
        let d = self.dgamma(x);
        let s = (1.0 + d * d).sqrt();
        [-d / s, 1.0 / s]
    }

    /// Distance to the boundary graph and the foot abscissa, by a scan over
    /// `|x′ − p¹| ≤ |ψ₀(p)|` followed by golden-section refinement.
    pub fn boundary_distance(&self, p: P2) -> (f64, f64) {
        let reach = self.psi0(p).abs();
        if reach == 0.0 {
            return (0.0, p[0]);
        }
        let d2 = |x: f64| {
            let q = self.boundary_point(x);
            (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)
        };
        let n = 400;
        let (lo, hi) = (p[0] - reach, p[0] + reach);
        let step = (hi - lo) / n as f64;
        let mut best = (d2(lo), lo);
        for i in 1..=n {
            let x = lo + step * i as f64;
            let v = d2(x);
            if v < best.0 {
                best = (v, x);
            }
        }
        let (mut a, mut b) = (best.1 - step, best.1 + step);
        let g = 0.618_033_988_749_894_8;
        let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
        let (mut fc, mut fd) = (d2(c), d2(d));
        for _ in 0..120 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = d2(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = d2(d);
            }
        }
        let (mut v, mut x) = if fc < fd { (fc, c) } else { (fd, d) };
        // Newton on the orthogonality condition; golden section alone stalls near sqrt(eps).
        let orth = |x: f64| {
            let (g0, g1, g2) = self.gamma_all(x);
            ((x - p[0]) + (g0 - p[1]) * g1, 1.0 + g1 * g1 + (g0 - p[1]) * g2)
        };
        for _ in 0..8 {
            let (r, slope) = orth(x);
            if !(slope > 0.0) || r == 0.0 {
                break;
            }
            let next = x - r / slope;
            if !(orth(next).0.abs() < r.abs()) || (next - x).abs() > step {
                break;
            }
            (v, x) = (d2(next), next);
        }
        if v <= best.0 * (1.0 + 1e-9) {
            (v.sqrt(), x)
        } else {
            (best.0.sqrt(), best.1)
        }
    }

    /// Modulus of continuity of `Dγ` (equal to that of `Dψ₀`), on `[0, 1]`.
    pub fn rho_dgamma(&self) -> Modulus<f64> {
        match self.shape {
            BoundaryShape::Flat => Modulus::zero(1.0),
            BoundaryShape::Parabolic { c } => Modulus::closed(2.0 * c, 1.0, 0.0, 1.0, 1.0).expect("valid"),
            BoundaryShape::Power { c, alpha } => {
                Modulus::closed(c * (1.0 + alpha) * 2f64.powf(1.0 - alpha), alpha, 0.0, 1.0, 1.0).expect("valid")
            }
        }
    }

    pub fn rho_dpsi0(&self) -> Modulus<f64> {
        self.rho_dgamma()
    }

    /// The patch `U_b = {|x′| < b, γ(x′) < xⁿ < b}`.
    pub fn patch(&self) -> GraphPatch {
        GraphPatch { domain: self.clone(), half_width: self.b, top: self.b }
    }

    pub fn patch_with(&self, half_width: f64, top: f64) -> GraphPatch {
        GraphPatch { domain: self.clone(), half_width, top }
    }
}

/// `{|x′| ≤ w, γ(x′) ≤ xⁿ ≤ top}`.
#[derive(Clone, Debug)]
pub struct GraphPatch {
    pub domain: GraphDomain,
    pub half_width: f64,
    pub top: f64,
}

impl Region for GraphPatch {
    fn contains(&self, p: P2) -> bool {
        p[0].abs() <= self.half_width && p[1] <= self.top && self.domain.psi0(p) >= 0.0
    }
    fn bounds(&self) -> (P2, P2) {
        let w = self.half_width;
        let bottom = self.domain.gamma(0.0).min(self.domain.gamma(w)).min(self.domain.gamma(-w)).min(0.0);
        ([-w, bottom], [w, self.top])
    }
}
