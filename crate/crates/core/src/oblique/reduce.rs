//! Reduction of an oblique problem to homogeneous Neumann data on a
//! half-ball: absorb `β⁰u`, straighten `β`, subtract the lift, flatten.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{boundary_lift, straightening_flow, ObliqueField, Straightening};
use crate::error::{Error, Result};
use crate::fd;
use crate::field::{ScalarFn, TensorFn, VectorFn, M2, P2};
use crate::geometry::{flatten_by_distance, DiffeoMap, FlatData, Flattened, GraphDomain, Mollifier, RegularizedDistance};
use crate::modulus::{dini_integral, log_grid, Modulus};

/// `a^{ij}D_{ij}u + bⁱD_iu + cu = f` in `Ω`, `β⁰u + β·∇u = g` on `∂Ω`,
/// with an evaluator of the solution.
#[derive(Clone)]
pub struct ObliqueProblem {
    pub domain: GraphDomain,
    pub field: ObliqueField,
    pub a: TensorFn,
    pub b: VectorFn,
    pub c: ScalarFn,
    pub f: ScalarFn,
    pub g: ScalarFn,
    pub u: ScalarFn,
    pub grad_u: VectorFn,
    pub moduli: InputModuli,
}

/// Measured characteristics entering the bound for the reduced right-hand side.
#[derive(Clone, Debug, Serialize)]
pub struct InputModuli {
    #[serde(skip)]
    pub omega_a: Modulus<f64>,
    #[serde(skip)]
    pub omega_b: Modulus<f64>,
    #[serde(skip)]
    pub omega_c: Modulus<f64>,
    #[serde(skip)]
    pub omega_f: Modulus<f64>,
    /// Modulus of continuity of `Dg`.
    #[serde(skip)]
    pub rho_dg: Modulus<f64>,
    pub b_sup: f64,
    pub c_sup: f64,
    /// `|g|₁`.
    pub g_c1: f64,
}

impl InputModuli {
    /// Constant coefficients and data with `|g|₁ = g_c1`.
    pub fn constant(g_c1: f64) -> Self {
        let z = Modulus::zero(1.0);
        Self { omega_a: z.clone(), omega_b: z.clone(), omega_c: z.clone(), omega_f: z.clone(), rho_dg: z, b_sup: 0.0, c_sup: 0.0, g_c1 }
    }
}

impl ObliqueProblem {
    /// `g₁ = g − β⁰u`.
    pub fn g1(&self, x: P2) -> f64 {
        (self.g)(x) - self.field.beta0 * (self.u)(x)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReduceConfig {
    /// Straightening radius.
    pub radius: f64,
    /// Height of the lift patch.
    pub lift_height: f64,
    /// Flattening patch radius.
    pub s: f64,
    /// Grid cells across the final half-ball radius.
    pub cells: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProvenanceEntry {
    pub stage: String,
    pub inputs_hash: String,
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

#[derive(Clone)]
pub struct ReducedProblem {
    pub straightening: Straightening,
    pub flattened: Flattened,
    /// Assembled bound for the mean oscillation of `f₀ = f − 𝓛v`.
    pub omega_f0: Modulus<f64>,
    /// Largest `|D_n ũ|` over the flat part of the half-ball.
    pub trace_max: f64,
    pub provenance: Vec<ProvenanceEntry>,
}

fn hash(value: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(value).unwrap_or_default();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn entry(stage: &str, inputs: &impl Serialize, constants: &[(&str, f64)], notes: Vec<String>) -> ProvenanceEntry {
    ProvenanceEntry {
        stage: stage.into(),
        inputs_hash: hash(inputs),
        constants: constants.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        notes,
    }
}

fn inverse(m: &M2) -> Result<M2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-12 {
        return Err(Error::Singular("flow Jacobian".into()));
    }
    Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

/// `∫₀ˣ ω(s)/s ds`, continued by `ω(a)·ln(x/a)` beyond the right end.
fn dini_up_to(w: &Modulus<f64>, x: f64) -> f64 {
    if x <= 0.0 || w.is_zero() {
        return 0.0;
    }
    let a = w.right_end();
    let base = dini_integral(w, 0.0, x.min(a)).ok().and_then(|i| i.value()).unwrap_or(f64::INFINITY);
    base + if x > a { w.eval(a) * (x / a).ln() } else { 0.0 }
}

/// `ω_f + I_g + (|g|₁ + I_g(r))ω₀ + ω₁` with `I_•(t) = ∫₀ᵗ ϱ_•(s)/s ds`,
/// `ω₀ = ω_A + ω_b + t‖b‖ + ω_c + t‖c‖` and
/// `ω₁ = I_γ(r)(ω_A + t‖b‖) + I_g(t) + I_γ(t)`; all constants set to 1.
pub fn assemble_f0_modulus(m: &InputModuli, rho_dgamma: &Modulus<f64>, r: f64) -> Result<Modulus<f64>> {
    let ig_r = dini_up_to(&m.rho_dg, r);
    let igam_r = dini_up_to(rho_dgamma, r);
    let ts = log_grid(1e-8, 1.0, 161);
    let w: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let w0 = m.omega_a.eval(t) + m.omega_b.eval(t) + t * m.b_sup + m.omega_c.eval(t) + t * m.c_sup;
            let ig = dini_up_to(&m.rho_dg, t);
            let w1 = igam_r * (m.omega_a.eval(t) + t * m.b_sup) + ig + dini_up_to(rho_dgamma, t);
            m.omega_f.eval(t) + ig + (m.g_c1 + ig_r) * w0 + w1
        })
        .collect();
    Ok(Modulus::Table(crate::modulus::Table::monotone_envelope(ts, &w)?))
}

/// Runs the reduction around the boundary point above `x0`.
pub fn reduce_to_neumann(problem: &ObliqueProblem, x0: f64, cfg: &ReduceConfig, mollifier: &Mollifier) -> Result<ReducedProblem> {
    let mut provenance = Vec::new();
    let dom = &problem.domain;

    // Stage 1: absorb β⁰u into the data.
    provenance.push(entry(
        "absorb",
        &(problem.field, x0),
        &[("beta0", problem.field.beta0)],
        vec!["g1 = g - beta0 * u".into()],
    ));

    // Stage 2: straighten β.
    let flow = straightening_flow(&problem.field, dom, x0, cfg.radius).map_err(|e| e.in_stage("straighten"))?;
    let o = flow.orientation;
    provenance.push(entry(
        "straighten",
        &(problem.field, dom, x0, cfg.radius),
        &[("radius", flow.radius), ("orientation", o), ("rk4_steps", flow.steps as f64)],
        flow.log.clone(),
    ));

    let flow_a = Arc::new(flow.clone());
    let pb = problem.clone();
    // Boundary data in y, extended constantly in the normal variable.
    let g_hat: ScalarFn = {
        let (pb, dom) = (pb.clone(), dom.clone());
        Arc::new(move |y: P2| o * pb.g1(dom.boundary_point(x0 + y[0])))
    };
    let coeffs = {
        let (flow, pb) = (flow_a.clone(), pb.clone());
        move |y: P2| -> Result<(M2, P2, f64, f64, f64, P2)> {
            let st = flow.state(y);
            let jx = st.jacobian();
            let dy = inverse(&jx)?;
            let x = st.x;
            let a = (pb.a)(x);
            let mut ah = [[0.0; 2]; 2];
            for k in 0..2 {
                for l in 0..2 {
                    ah[k][l] = (0..2).map(|i| (0..2).map(|j| dy[k][i] * a[i][j] * dy[l][j]).sum::<f64>()).sum();
                }
            }
            // D_{ij}y^k = −(Dy)^k_m ∂²x^m/∂y_p∂y_q (Dy)^p_i (Dy)^q_j.
            let sec = st.second();
            let b = (pb.b)(x);
            let mut bh = [0.0; 2];
            for k in 0..2 {
                let mut acc = dy[k][0] * b[0] + dy[k][1] * b[1];
                for i in 0..2 {
                    for j in 0..2 {
                        let mut d2 = 0.0;
                        for m in 0..2 {
                            for p in 0..2 {
                                for q in 0..2 {
                                    d2 -= dy[k][m] * sec[m][p][q] * dy[p][i] * dy[q][j];
                                }
                            }
                        }
                        acc += a[i][j] * d2;
                    }
                }
                bh[k] = acc;
            }
            let gu = (pb.grad_u)(x);
            let grad_hat = [jx[0][0] * gu[0] + jx[1][0] * gu[1], jx[0][1] * gu[0] + jx[1][1] * gu[1]];
            Ok((ah, bh, (pb.c)(x), (pb.f)(x), (pb.u)(x), grad_hat))
        }
    };

    // Stage 3: subtract the lift of the straightened data.
    let flat = GraphDomain::flat(dom.extent.max(4.0 * cfg.radius));
    let lift = boundary_lift(g_hat, problem.moduli.rho_dg.clone(), &flat, mollifier.clone(), cfg.lift_height)
        .map_err(|e| e.in_stage("lift"))?;
    let omega_f0 = assemble_f0_modulus(&problem.moduli, &dom.rho_dgamma(), cfg.lift_height).map_err(|e| e.in_stage("lift"))?;
    provenance.push(entry(
        "lift",
        &(cfg.lift_height, &problem.moduli),
        &[("height", cfg.lift_height), ("omega_f0_at_1e-2", omega_f0.eval(1e-2))],
        vec![],
    ));

    // Stage 4: flatten by the regularized distance of the straightened domain.
    let lift = Arc::new(lift);
    let hv = 1e-3 * cfg.lift_height;
    let c2 = coeffs.clone();
    let a_fn = |y: P2| c2(y).map(|c| c.0).unwrap_or([[f64::NAN; 2]; 2]);
    let b_fn = |y: P2| coeffs(y).map(|c| c.1).unwrap_or([f64::NAN; 2]);
    let c_fn = |y: P2| coeffs(y).map(|c| c.2).unwrap_or(f64::NAN);
    let l1 = lift.clone();
    let f_fn = |y: P2| {
        let Ok((ah, bh, c, f, _, _)) = coeffs(y) else { return f64::NAN };
        let v = |p: P2| l1.eval(p);
        let hs = fd::hessian(&v, y, hv);
        let gv = fd::gradient(&v, y, hv);
        let lv: f64 = (0..2).map(|i| (0..2).map(|j| ah[i][j] * hs[i][j]).sum::<f64>()).sum::<f64>() + bh[0] * gv[0] + bh[1] * gv[1] + c * v(y);
        f - lv
    };
    let l2 = lift.clone();
    let u_fn = |y: P2| coeffs(y).map(|c| c.4).unwrap_or(f64::NAN) - l2.eval(y);
    let l3 = lift.clone();
    let gu_fn = |y: P2| {
        let g = coeffs(y).map(|c| c.5).unwrap_or([f64::NAN; 2]);
        let gv = fd::gradient(&|p| l3.eval(p), y, hv);
        [g[0] - gv[0], g[1] - gv[1]]
    };
    let data = FlatData { a: &a_fn, b: &b_fn, c: &c_fn, f: &f_fn, u: &u_fn, grad_u: &gu_fn };
    let rd = RegularizedDistance::new(flat.clone(), mollifier.clone());
    let flattened = flatten_by_distance(&rd, 0.0, cfg.s, &data, cfg.cells).map_err(|e| e.in_stage("flatten"))?;

    // Flat-trace check of D_n ũ from the transported solution.
    let map = &flattened.map;
    let r = 4.0 * flattened.s0;
    let hz = 1e-3 * flattened.s0;
    let u_of_z = |z: P2| map.inverse(z).map(|y| u_fn(y)).unwrap_or(f64::NAN);
    let trace_max = (0..=32)
        .map(|k| {
            let z = [0.9 * r * (k as f64 / 16.0 - 1.0), 0.0];
            fd::gradient(&u_of_z, z, hz)[1].abs()
        })
        .fold(0.0, f64::max);
    let (lo, hi) = flattened.ellipticity_range();
    provenance.push(entry(
        "flatten",
        &(cfg.s, cfg.cells),
        &[("s0", flattened.s0), ("min_det", flattened.min_det), ("trace_max", trace_max), ("eig_min", lo), ("eig_max", hi)],
        flattened.log.clone(),
    ));
    Ok(ReducedProblem { straightening: flow, flattened, omega_f0, trace_max, provenance })
}

impl ReducedProblem {
    pub fn provenance_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.provenance)?)
    }
}
