//! Assembled modulus-of-continuity bounds for `Du` and `D²u` against measured differences.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::excess::{DerivativeField, ExcessMode};
use crate::error::{Error, Result};
use crate::modulus::{log_grid, Modulus, TransformChain};

/// Transforms of one input modulus; `None` stands for the zero modulus.
#[derive(Clone, Debug)]
pub(super) struct Chain(Option<TransformChain<f64>>);

impl Chain {
    pub(super) fn new(w: &Modulus<f64>, kappa: f64, beta: f64) -> Result<Self> {
        Ok(Chain(if w.is_zero() { None } else { Some(TransformChain::new(w, kappa, beta)?) }))
    }

    fn dini(&self) -> bool {
        self.0.as_ref().map_or(true, |c| c.is_dini())
    }

    /// `ω*`, or `ω̂` when the input is not Dini.
    fn star_or_hat(&self, t: f64) -> f64 {
        match &self.0 {
            None => 0.0,
            Some(c) if c.is_dini() => c.star(t),
            Some(c) => c.hat(t),
        }
    }

    pub(super) fn hat_integral(&self, x: f64) -> f64 {
        self.0.as_ref().map_or(0.0, |c| c.hat_integral(x))
    }
}

/// Inputs of the assembled right-hand side.
#[derive(Clone, Debug)]
pub struct BoundInputs {
    pub mode: ExcessMode,
    /// Mean oscillation modulus of the leading coefficients.
    pub omega_a: Modulus<f64>,
    /// Mean oscillation modulus of `g⃗` (gradient mode) or `f` (Hessian mode).
    pub omega_data: Modulus<f64>,
    /// `‖Du‖_{L¹}` or `‖D²u‖_{L¹}`.
    pub norm: f64,
    /// `[u]₂`, used in Hessian mode.
    pub seminorm: f64,
    pub kappa: f64,
    pub beta: f64,
}

/// `t ↦ RHS(t)` for `t ∈ (0, 1/4]`.
#[derive(Clone, Debug)]
pub struct AssembledRhs {
    mode: ExcessMode,
    a: Chain,
    data: Chain,
    norm: f64,
    /// Factor in front of `ω*_A`.
    lead: f64,
    beta: f64,
    pub dini: bool,
    /// `∫₀^{1/4} ω̂_g(t)/t dt` in gradient mode.
    pub data_integral: f64,
}

impl AssembledRhs {
    /// Gradient mode: `‖Du‖t^β + (‖Du‖ + ∫ω̂_g/t) ω*_A(t) + ω*_g(t)`.
    /// Hessian mode: `‖D²u‖t^β + [u]₂ ω*_A(t) + ω*_f(t)`.
    /// For non-Dini inputs `ω*` is replaced by `ω̂` and divergent integrals are dropped.
    pub fn new(inputs: &BoundInputs) -> Result<Self> {
        if !(inputs.norm >= 0.0 && inputs.seminorm >= 0.0) {
            return Err(Error::param("norm factors must be nonnegative"));
        }
        let a = Chain::new(&inputs.omega_a, inputs.kappa, inputs.beta)?;
        let data = Chain::new(&inputs.omega_data, inputs.kappa, inputs.beta)?;
        let dini = a.dini() && data.dini();
        let data_integral = match inputs.mode {
            ExcessMode::Gradient if data.dini() => data.hat_integral(0.25),
            _ => 0.0,
        };
        let lead = match inputs.mode {
            ExcessMode::Gradient => inputs.norm + data_integral,
            ExcessMode::Hessian => inputs.seminorm,
        };
        Ok(Self { mode: inputs.mode, a, data, norm: inputs.norm, lead, beta: inputs.beta, dini, data_integral })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.norm * t.powf(self.beta) + self.lead * self.a.star_or_hat(t) + self.data.star_or_hat(t)
    }

    pub fn mode(&self) -> ExcessMode {
        self.mode
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundConfig {
    pub pairs: usize,
    pub bins: usize,
    /// Pair distances range over `[min_distance, max_distance]`; `None` means one grid step.
    pub min_distance: Option<f64>,
    pub max_distance: f64,
    pub seed: u64,
    /// Fraction of pairs the fitted constant must cover.
    pub coverage: f64,
    pub c_max: f64,
    /// Largest admissible `RHS(smallest bin) / RHS(largest bin)`.
    pub vanish_ratio: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self { pairs: 2000, bins: 8, min_distance: None, max_distance: 0.25, seed: 0, coverage: 0.99, c_max: 100.0, vanish_ratio: 0.25 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairSample {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub distance: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BinRow {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// RHS at the geometric centre of the bin.
    pub rhs: f64,
    pub max_lhs: f64,
    pub max_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundAssembly {
    pub mode: ExcessMode,
    pub beta: f64,
    pub kappa: f64,
    pub norm: f64,
    pub data_integral: f64,
    /// `(t, RHS(t))` on a log grid of `[min_distance, max_distance]`.
    pub rhs_table: Vec<[f64; 2]>,
    pub rhs_monotone: bool,
    pub bins: Vec<BinRow>,
    pub fitted_c: f64,
    /// Fraction of pairs with `LHS ≤ C·RHS`.
    pub covered: f64,
    /// `RHS(smallest bin) / RHS(largest bin)`; `None` when the inputs are not Dini.
    pub vanishing: Option<f64>,
    pub dini: bool,
    pub pass: bool,
    #[serde(skip)]
    pub pairs: Vec<PairSample>,
}

/// Samples node pairs stratified by log distance, deterministically from `seed`.
pub fn sample_pairs(field: &DerivativeField, cfg: &BoundConfig) -> Result<Vec<(usize, usize, f64)>> {
    let g = field.grid;
    let h = g.h[0].min(g.h[1]);
    let lo = cfg.min_distance.unwrap_or(h).max(h);
    let hi = cfg.max_distance;
    if !(hi > lo) || cfg.bins == 0 || cfg.pairs < cfg.bins {
        return Err(Error::param(format!("distance range [{lo}, {hi}] with {} bins and {} pairs", cfg.bins, cfg.pairs)));
    }
    let valid: Vec<usize> = (0..g.len()).filter(|&k| field.mask[k]).collect();
    if valid.len() < 2 {
        return Err(Error::Resolution("fewer than two valid nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (l0, l1) = (lo.ln(), hi.ln());
    let mut out = Vec::with_capacity(cfg.pairs);
    for k in 0..cfg.pairs {
        let bin = k * cfg.bins / cfg.pairs;
        let (b0, b1) = (l0 + (l1 - l0) * bin as f64 / cfg.bins as f64, l0 + (l1 - l0) * (bin + 1) as f64 / cfg.bins as f64);
        for _ in 0..200 {
            let a = valid[rng.random_range(0..valid.len())];
            let d = rng.random_range(b0..b1).exp();
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            let (i, j) = g.ij(a);
            let di = (d * th.cos() / g.h[0]).round() as isize;
            let dj = (d * th.sin() / g.h[1]).round() as isize;
            let (bi, bj) = (i as isize + di, j as isize + dj);
            if (di, dj) == (0, 0) || bi < 0 || bj < 0 || bi as usize >= g.n[0] || bj as usize >= g.n[1] {
                continue;
            }
            let b = g.index(bi as usize, bj as usize);
            let dist = (di as f64 * g.h[0]).hypot(dj as f64 * g.h[1]);
            if field.mask[b] && dist <= hi * (1.0 + 1e-12) {
                out.push((a, b, dist));
                break;
            }
        }
    }
    Ok(out)
}

/// Compares `|D^k u(x) − D^k u(y)|` with the assembled RHS on stratified node pairs.
pub fn modulus_bound_compare(field: &DerivativeField, inputs: &BoundInputs, cfg: &BoundConfig) -> Result<BoundAssembly> {
    if field.mode != inputs.mode {
        return Err(Error::param("derivative field and bound inputs use different modes"));
    }
    if !(cfg.max_distance <= 0.25) {
        return Err(Error::param("pair distances are limited to 1/4"));
    }
    let rhs = AssembledRhs::new(inputs)?;
    let raw = sample_pairs(field, cfg)?;
    let g = field.grid;
    let pairs: Vec<PairSample> = raw
        .iter()
        .map(|&(a, b, distance)| {
            let (va, vb) = (field.values[a], field.values[b]);
            let lhs = field.mode.norm(&[va[0] - vb[0], va[1] - vb[1], va[2] - vb[2]]);
            let (ia, ja) = g.ij(a);
            let (ib, jb) = g.ij(b);
            PairSample { x: g.node(ia, ja), y: g.node(ib, jb), distance, lhs, rhs: rhs.eval(distance) }
        })
        .collect();
    let ratio = |p: &PairSample| {
        if p.lhs == 0.0 {
            0.0
        } else if p.rhs > 0.0 {
            p.lhs / p.rhs
        } else {
            f64::INFINITY
        }
    };
    let mut ratios: Vec<f64> = pairs.iter().map(ratio).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = ratios.len();
    let fitted_c = if n == 0 { 0.0 } else { ratios[((cfg.coverage * n as f64).ceil() as usize).clamp(1, n) - 1] };
    let covered = if n == 0 { 1.0 } else { ratios.iter().filter(|&&r| r <= fitted_c).count() as f64 / n as f64 };

    let h = g.h[0].min(g.h[1]);
    let lo = cfg.min_distance.unwrap_or(h).max(h);
    let edges = log_grid(lo, cfg.max_distance, cfg.bins + 1);
    let bins: Vec<BinRow> = edges
        .windows(2)
        .enumerate()
        .map(|(k, e)| {
            let last = k + 2 == edges.len();
            let inside: Vec<&PairSample> =
                pairs.iter().filter(|p| p.distance >= e[0] && (p.distance < e[1] || (last && p.distance <= e[1] * (1.0 + 1e-12)))).collect();
            BinRow {
                lo: e[0],
                hi: e[1],
                count: inside.len(),
                rhs: rhs.eval((e[0] * e[1]).sqrt()),
                max_lhs: inside.iter().map(|p| p.lhs).fold(0.0, f64::max),
                max_ratio: inside.iter().map(|p| ratio(p)).fold(0.0, f64::max),
            }
        })
        .collect();
    let rhs_table: Vec<[f64; 2]> = log_grid(lo, cfg.max_distance, 65).into_iter().map(|t| [t, rhs.eval(t)]).collect();
    let rhs_monotone = rhs_table.windows(2).all(|w| w[1][1] >= w[0][1] * (1.0 - 1e-9));
    let vanishing = rhs.dini.then(|| {
        let (first, last) = (bins[0].rhs, bins[bins.len() - 1].rhs);
        if last > 0.0 {
            first / last
        } else {
            0.0
        }
    });
    let pass = fitted_c.is_finite()
        && fitted_c <= cfg.c_max
        && covered >= cfg.coverage
        && vanishing.map_or(true, |v| v <= cfg.vanish_ratio);
    Ok(BoundAssembly {
        mode: inputs.mode,
        beta: inputs.beta,
        kappa: inputs.kappa,
        norm: inputs.norm,
        data_integral: rhs.data_integral,
        rhs_table,
        rhs_monotone,
        bins,
        fitted_c,
        covered,
        vanishing,
        dini: rhs.dini,
        pass,
        pairs,
    })
}
