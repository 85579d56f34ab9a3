//! Campanato-type excess of a gradient or Hessian field on a ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid2, ScalarField, P2};
use crate::optimize::{minimize, SimplexConfig};

/// Fewest samples a ball must hold for the excess to be computed.
pub const MIN_SAMPLES: usize = 50;
/// Sample points tried as starting values when `p < 1`.
const CUSP_CANDIDATES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExcessMode {
    /// `q` ranges over vectors.
    Gradient,
    /// `q` ranges over symmetric matrices `(q11, q12, q22)`.
    Hessian,
}

impl ExcessMode {
    pub fn dim(self) -> usize {
        match self {
            ExcessMode::Gradient => 2,
            ExcessMode::Hessian => 3,
        }
    }

    /// Euclidean (gradient) or Frobenius (Hessian) norm of a packed value.
    pub fn norm(self, v: &[f64; 3]) -> f64 {
        match self {
            ExcessMode::Gradient => v[0].hypot(v[1]),
            ExcessMode::Hessian => (v[0] * v[0] + 2.0 * v[1] * v[1] + v[2] * v[2]).sqrt(),
        }
    }

    fn diff_norm(self, v: &[f64; 3], q: &[f64]) -> f64 {
        let d = [v[0] - q[0], v[1] - q[1], if q.len() > 2 { v[2] - q[2] } else { 0.0 }];
        self.norm(&d)
    }
}

/// `Du` or `D²u` at the grid nodes, packed as `[f64; 3]`.
#[derive(Clone, Debug)]
pub struct DerivativeField {
    pub mode: ExcessMode,
    pub grid: Grid2,
    pub values: Vec<[f64; 3]>,
    pub mask: Vec<bool>,
}

impl DerivativeField {
    pub fn new(u: &ScalarField, mode: ExcessMode) -> Self {
        let (values, mask) = match mode {
            ExcessMode::Gradient => {
                let g = u.gradient();
                (g.values.iter().map(|v| [v[0], v[1], 0.0]).collect(), g.mask)
            }
            ExcessMode::Hessian => {
                let h = u.hessian();
                (h.values.iter().map(|m| [m[0][0], m[0][1], m[1][1]]).collect(), h.mask)
            }
        };
        Self { mode, grid: u.grid, values, mask }
    }

    /// Valid samples within distance `r` of `center`.
    pub fn ball(&self, center: P2, r: f64) -> Vec<[f64; 3]> {
        let g = &self.grid;
        let slack = 1e-9 * g.h[0].min(g.h[1]);
        let lo = g.nearest([center[0] - r, center[1] - r]);
        let hi = g.nearest([center[0] + r, center[1] + r]);
        let mut out = Vec::new();
        for j in lo.1.saturating_sub(1)..=(hi.1 + 1).min(g.n[1] - 1) {
            for i in lo.0.saturating_sub(1)..=(hi.0 + 1).min(g.n[0] - 1) {
                let k = g.index(i, j);
                let p = g.node(i, j);
                if self.mask[k] && (p[0] - center[0]).hypot(p[1] - center[1]) <= r + slack {
                    out.push(self.values[k]);
                }
            }
        }
        out
    }

    /// Largest norm over the valid nodes.
    pub fn sup(&self) -> f64 {
        self.values.iter().zip(&self.mask).filter(|(_, &m)| m).map(|(v, _)| self.mode.norm(v)).fold(0.0, f64::max)
    }

    /// `∫|D^k u|` by the nodal rule with cell-area weights.
    pub fn l1(&self) -> f64 {
        let area = self.grid.h[0] * self.grid.h[1];
        self.values.iter().zip(&self.mask).filter(|(_, &m)| m).map(|(v, _)| self.mode.norm(v)).sum::<f64>() * area
    }

    /// Node value, if valid.
    pub fn at(&self, i: usize, j: usize) -> Option<[f64; 3]> {
        let k = self.grid.index(i, j);
        self.mask[k].then(|| self.values[k])
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// `inf_q (⨍|v − q|^p)^{1/p}` over equal-weight samples.
pub fn excess_of_samples(samples: &[[f64; 3]], mode: ExcessMode, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param(format!("p = {p} outside (0, 1]")));
    }
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Resolution(format!("{} samples in the ball, need {MIN_SAMPLES}", samples.len())));
    }
    let dim = mode.dim();
    let n = samples.len() as f64;
    let med: Vec<f64> = (0..dim).map(|c| median(samples.iter().map(|v| v[c]).collect())).collect();
    let mean: Vec<f64> = (0..dim).map(|c| samples.iter().map(|v| v[c]).sum::<f64>() / n).collect();
    let scale = samples.iter().map(|v| mode.diff_norm(v, &med)).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    // Work with (v − median)/scale so that the search is scale free.
    let shifted: Vec<[f64; 3]> = samples
        .iter()
        .map(|v| {
            let mut w = [0.0; 3];
            for c in 0..dim {
                w[c] = (v[c] - med[c]) / scale;
            }
            w
        })
        .collect();
    let objective = |q: &[f64]| shifted.iter().map(|v| mode.diff_norm(v, q).powf(p)).sum::<f64>() / n;
    let seeds = vec![vec![0.0; dim], (0..dim).map(|c| (mean[c] - med[c]) / scale).collect()];
    let cfg = SimplexConfig::default();
    let mut best = minimize(objective, &seeds, 1.0, &cfg).value;
    if p < 1.0 {
        // Every sample is a cusp of the objective, hence a local minimum the simplex may miss.
        let stride = shifted.len().div_ceil(CUSP_CANDIDATES);
        let cusp = shifted
            .iter()
            .step_by(stride)
            .map(|v| (objective(&v[..dim]), v))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        if cusp.0 < best {
            best = minimize(objective, &[cusp.1[..dim].to_vec()], 1.0, &cfg).value.min(cusp.0);
        }
    }
    Ok(best.max(0.0).powf(1.0 / p) * scale)
}

/// Excess of the derivative field on `B(center, r)`.
pub fn excess_on(field: &DerivativeField, center: P2, r: f64, p: f64) -> Result<f64> {
    excess_of_samples(&field.ball(center, r), field.mode, p)
}

/// Excess of `Du` or `D²u` of a nodal field on `B(center, r)` clipped to the valid nodes.
pub fn excess(u: &ScalarField, center: P2, r: f64, p: f64, mode: ExcessMode) -> Result<f64> {
    excess_on(&DerivativeField::new(u, mode), center, r, p)
}
