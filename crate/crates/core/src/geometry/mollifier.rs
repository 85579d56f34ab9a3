//! Radial mollifiers on the unit disk and their polar cubature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::P2;
use crate::quadrature::{integrate, GaussRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `exp(−1/(1 − |y|²))`, smooth of all orders.
    Bump,
    /// `(1 − |y|²)⁴`.
    Polynomial,
}

impl Profile {
    fn shape(self, r2: f64) -> f64 {
        if r2 >= 1.0 {
            return 0.0;
        }
        match self {
            Profile::Bump => (-1.0 / (1.0 - r2)).exp(),
            Profile::Polynomial => (1.0 - r2).powi(4),
        }
    }
}

/// Normalized radial mollifier `ζ` with a fixed polar Gauss cubature.
#[derive(Clone, Debug)]
pub struct Mollifier {
    pub profile: Profile,
    /// `c` with `c·∫ shape = 1`.
    pub normalization: f64,
    /// Cubature nodes `y_q` and weights `w_q ≈ ζ(y_q)·dA`; weights sum to 1.
    pub nodes: Vec<(P2, f64)>,
    /// Sum of the unnormalized cubature weights (≈ 1 when the rule is resolved).
    pub raw_mass: f64,
}

impl Mollifier {
    /// Polar rule with `radial` Gauss points and `angular` equispaced angles.
    pub fn new(profile: Profile, radial: usize, angular: usize) -> Result<Self> {
        if radial < 16 || angular < 16 {
            return Err(Error::Resolution("mollifier cubature needs at least 16 points per axis".into()));
        }
        let radial_mass = integrate(|r: f64| profile.shape(r * r) * r, 0.0, 1.0, 1e-16, 1e-15, 2000).value;
        let normalization = 1.0 / (2.0 * std::f64::consts::PI * radial_mass);
        let rule = GaussRule::<f64>::new(radial);
        let dth = 2.0 * std::f64::consts::PI / angular as f64;
        let mut nodes = Vec::with_capacity(radial * angular);
        for (r, w) in rule.mapped(0.0, 1.0) {
            let z = normalization * profile.shape(r * r) * r * w * dth;
            for k in 0..angular {
                // Offset angles keep the rule symmetric under y ↦ −y for even counts.
                let th = dth * (k as f64 + 0.5);
                nodes.push(([r * th.cos(), r * th.sin()], z));
            }
        }
        let raw_mass: f64 = nodes.iter().map(|n| n.1).sum();
        for n in nodes.iter_mut() {
            n.1 /= raw_mass;
        }
        Ok(Self { profile, normalization, nodes, raw_mass })
    }

    /// `ζ(y)`.
    pub fn value(&self, y: P2) -> f64 {
        self.normalization * self.profile.shape(y[0] * y[0] + y[1] * y[1])
    }

    /// `∫ f(x − t y) ζ(y) dy` by the cubature.
    pub fn convolve(&self, f: &dyn Fn(P2) -> f64, x: P2, t: f64) -> f64 {
        if t == 0.0 {
            return f(x);
        }
        self.nodes.iter().map(|&(y, w)| w * f([x[0] - t * y[0], x[1] - t * y[1]])).sum()
    }
}

impl Default for Mollifier {
    fn default() -> Self {
        Self::new(Profile::Bump, 32, 32).expect("valid default rule")
    }
}
