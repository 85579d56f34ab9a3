//! Boundary straightening by the flow of `β`: the point `x(y′, yₙ)` is
//! reached from the boundary point above `x₀¹ + y′` after flowing for time
//! `yₙ`, so `∂x/∂yₙ = β` and the boundary becomes `{yₙ = 0}`.

use rayon::prelude::*;
use serde::Serialize;

use super::ObliqueField;
use crate::error::{Error, Result};
use crate::fd::T3;
use crate::field::{M2, P2};
use crate::geometry::{DiffeoMap, GraphDomain};
use crate::ode::rk4;

/// Map value with first and second derivatives in `y`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlowState {
    pub x: P2,
    /// `∂x/∂y₁`.
    pub d1: P2,
    /// `∂x/∂yₙ`.
    pub dn: P2,
    pub d11: P2,
    pub d1n: P2,
    pub dnn: P2,
}

impl FlowState {
    pub fn jacobian(&self) -> M2 {
        [[self.d1[0], self.dn[0]], [self.d1[1], self.dn[1]]]
    }

    /// `∂²xⁱ/∂y_j∂y_k` as `[i][j][k]`.
    pub fn second(&self) -> T3 {
        let mut t = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            t[i][0][0] = self.d11[i];
            t[i][0][1] = self.d1n[i];
            t[i][1][0] = self.d1n[i];
            t[i][1][1] = self.dnn[i];
        }
        t
    }
}

#[derive(Clone, Debug)]
pub struct Straightening {
    pub field: ObliqueField,
    pub domain: GraphDomain,
    /// Boundary point `(x₀, γ(x₀))`.
    pub x0: f64,
    /// Validity half-width in `y`.
    pub radius: f64,
    /// `+1` when `β` points into the domain, `−1` when the flow follows `−β`.
    pub orientation: f64,
    /// RK4 steps per flow, independent of the flow time.
    pub steps: usize,
    pub log: Vec<String>,
}

impl Straightening {
    fn integrate(&self, y: P2, steps: usize) -> FlowState {
        let s = self.x0 + y[0];
        let (g, dg, d2g) = self.domain.gamma_all(s);
        let o = self.orientation;
        let beta = self.field.beta;
        // state: x, ∂x/∂y₁, ∂²x/∂y₁²
        let y0 = [s, g, 1.0, dg, 0.0, d2g];
        let rhs = |_t: f64, u: &[f64], out: &mut [f64]| {
            let x = [u[0], u[1]];
            let b = beta.eval(x);
            let j = beta.jacobian(x);
            let h = beta.second(x);
            let (c, e) = ([u[2], u[3]], [u[4], u[5]]);
            for i in 0..2 {
                out[i] = o * b[i];
                out[2 + i] = o * (j[i][0] * c[0] + j[i][1] * c[1]);
                let quad: f64 = (0..2).map(|p| (0..2).map(|q| h[i][p][q] * c[p] * c[q]).sum::<f64>()).sum();
                out[4 + i] = o * (j[i][0] * e[0] + j[i][1] * e[1] + quad);
            }
        };
        let u = if y[1] == 0.0 { y0.to_vec() } else { rk4(rhs, 0.0, y[1], &y0, steps) };
        let x = [u[0], u[1]];
        let b = beta.eval(x);
        let j = beta.jacobian(x);
        let d1 = [u[2], u[3]];
        let mv = |v: P2| [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1]];
        let d1n = mv(d1);
        let dnn = mv(b);
        FlowState {
            x,
            d1,
            dn: [o * b[0], o * b[1]],
            d11: [u[4], u[5]],
            d1n: [o * d1n[0], o * d1n[1]],
            dnn,
        }
    }

    pub fn state(&self, y: P2) -> FlowState {
        self.integrate(y, self.steps)
    }

    /// Sample points of the validity square.
    fn probes(&self) -> Vec<P2> {
        let r = self.radius;
        let mut out = Vec::new();
        for i in 0..=4 {
            for j in 0..=4 {
                out.push([r * (i as f64 / 2.0 - 1.0), r * (j as f64 / 2.0 - 1.0)]);
            }
        }
        out
    }

    /// `|x″(y)|·(τ − t)/(ϱ_Dβ(τ − t) + ϱ_Dψ₀(τ − t))` with `t = |yₙ|` and
    /// `τ = 2r`, at each sample; returns the rows and their sup.
    pub fn second_derivative_ratios(&self, samples: &[P2]) -> (Vec<f64>, f64) {
        let rb = self.field.beta.rho_jacobian();
        let rg = self.domain.rho_dpsi0();
        let tau = 2.0 * self.radius;
        let rows: Vec<f64> = samples
            .par_iter()
            .map(|&y| {
                let st = self.state(y);
                let norm = [st.d11, st.d1n, st.d1n, st.dnn].iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>().sqrt();
                let gap = tau - y[1].abs();
                let den = rb.eval(gap) + rg.eval(gap);
                if norm < 1e-13 {
                    0.0
                } else if den > 0.0 {
                    norm * gap / den
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let sup = rows.iter().cloned().fold(0.0, f64::max);
        (rows, sup)
    }
}

impl DiffeoMap for Straightening {
    /// `y ↦ x(y)`.
    fn forward(&self, y: P2) -> P2 {
        self.state(y).x
    }

    /// `x ↦ y` by damped Newton iteration on the flow map.
    fn inverse(&self, x: P2) -> Result<P2> {
        let b = self.field.beta.eval(x);
        let n = self.domain.grad_psi0(x);
        let rate = self.orientation * (b[0] * n[0] + b[1] * n[1]);
        let t0 = if rate != 0.0 { self.domain.psi0(x) / rate } else { 0.0 };
        let mut y = [x[0] - self.x0 - self.orientation * b[0] * t0, t0];
        let mut st = self.state(y);
        let mut res = [st.x[0] - x[0], st.x[1] - x[1]];
        let mut err = res[0].hypot(res[1]);
        for _ in 0..60 {
            if err < 1e-14 * (1.0 + x[0].abs() + x[1].abs()) {
                return Ok(y);
            }
            let j = st.jacobian();
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-14 {
                return Err(Error::Geometry("straightening Jacobian is singular".into()));
            }
            let dy = [(j[1][1] * res[0] - j[0][1] * res[1]) / det, (-j[1][0] * res[0] + j[0][0] * res[1]) / det];
            let mut lambda = 1.0;
            loop {
                let cand = [y[0] - lambda * dy[0], y[1] - lambda * dy[1]];
                let cs = self.state(cand);
                let cr = [cs.x[0] - x[0], cs.x[1] - x[1]];
                let ce = cr[0].hypot(cr[1]);
                if ce < err || lambda < 1e-4 {
                    y = cand;
                    st = cs;
                    res = cr;
                    err = ce;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if err < 1e-10 {
            Ok(y)
        } else {
            Err(Error::numeric(format!("flow inverse did not converge at {x:?} (residual {err:.2e})")))
        }
    }

    fn contains(&self, y: P2) -> bool {
        y[0].abs() <= self.radius && y[1].abs() <= self.radius
    }

    fn fd_step(&self, _y: P2) -> f64 {
        1e-3 * self.radius
    }

    fn jacobian(&self, y: P2) -> M2 {
        self.state(y).jacobian()
    }

    fn second(&self, y: P2) -> T3 {
        self.state(y).second()
    }
}

/// Builds the straightening map near `(x0, γ(x0))` on `|y| ≤ r`. The radius
/// is halved while the flow leaves the exact part of the graph or folds,
/// and RK4 steps are doubled until Jacobians and round trips agree to 1e-8.
pub fn straightening_flow(field: &ObliqueField, domain: &GraphDomain, x0: f64, r: f64) -> Result<Straightening> {
    if !(r > 0.0) {
        return Err(Error::param("radius must be positive"));
    }
    let checks: Vec<f64> = (0..=32).map(|k| x0 + r * (k as f64 / 16.0 - 1.0)).collect();
    let mu = field.check(domain, &checks)?;
    let mut log = vec![format!("obliqueness {mu:.6} (μ₀ = {})", field.mu0)];
    let b = field.beta.eval(domain.boundary_point(x0));
    let n = domain.inward_normal(x0);
    let orientation = if b[0] * n[0] + b[1] * n[1] >= 0.0 { 1.0 } else { -1.0 };
    if orientation < 0.0 {
        log.push("β points outward; flowing along −β (yₙ ↦ −yₙ)".into());
    }
    let mut map = Straightening { field: *field, domain: domain.clone(), x0, radius: r, orientation, steps: 8, log };
    for _ in 0..30 {
        let bad = map.probes().iter().any(|&y| {
            let st = map.state(y);
            let det = st.d1[0] * st.dn[1] - st.d1[1] * st.dn[0];
            st.x[0].abs() > domain.extent || !(det > 0.05) || !st.x[0].is_finite()
        });
        if !bad {
            break;
        }
        map.radius *= 0.5;
        map.log.push(format!("radius reduced to {:.6e}", map.radius));
    }
    if map.radius < r * 1e-6 {
        return Err(Error::Geometry("no admissible straightening radius".into()));
    }
    loop {
        let probes = map.probes();
        let fine = Straightening { steps: 2 * map.steps, ..map.clone() };
        let jac_gap = probes
            .iter()
            .map(|&y| {
                let (a, b) = (map.state(y), fine.state(y));
                [a.d1, a.dn, a.x].iter().zip([b.d1, b.dn, b.x]).map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1])).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let mut trip = 0.0f64;
        if jac_gap < 1e-8 {
            for &y in &probes {
                let x = map.forward(y);
                let back = map.inverse(x)?;
                trip = trip.max((back[0] - y[0]).hypot(back[1] - y[1]));
            }
            if trip < 1e-8 {
                map.log.push(format!("{} RK4 steps, Jacobian gap {jac_gap:.2e}, round trip {trip:.2e}", map.steps));
                return Ok(map);
            }
        }
        if map.steps >= 1 << 14 {
            return Err(Error::numeric("flow step refinement did not reach 1e-8"));
        }
        map.steps *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oblique::VectorFamily;

    #[test]
    fn constant_field_on_half_space_is_affine() {
        let d = GraphDomain::flat(4.0);
        let f = ObliqueField::new(0.0, VectorFamily::rotated_normal(0.4), 0.5).unwrap();
        let m = straightening_flow(&f, &d, 0.2, 0.5).unwrap();
        let y = [0.1, 0.3];
        let x = m.forward(y);
        let b = f.beta.eval(x);
        assert!((x[0] - (0.3 + 0.3 * b[0])).abs() < 1e-14 && (x[1] - 0.3 * b[1]).abs() < 1e-14);
        let s = crate::fd::jacobian_derivative(&|p| m.forward(p), y, 1e-2);
        assert!(crate::fd::norm3(&s) < 1e-8);
    }

    #[test]
    fn outward_field_flips_orientation() {
        let d = GraphDomain::flat(4.0);
        let f = ObliqueField::new(0.0, VectorFamily::Constant { v: [0.0, -1.0] }, 0.5).unwrap();
        let m = straightening_flow(&f, &d, 0.0, 0.5).unwrap();
        assert_eq!(m.orientation, -1.0);
        assert!((m.forward([0.0, 0.25])[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn affine_field_matches_closed_form() {
        // β = e₂ + 0.2 x¹ e₁: x¹ = y¹ e^{0.2 t}, x² = t.
        let d = GraphDomain::flat(4.0);
        let f = ObliqueField::new(0.0, VectorFamily::Affine { v: [0.0, 1.0], m: [[0.2, 0.0], [0.0, 0.0]] }, 0.5).unwrap();
        let m = straightening_flow(&f, &d, 0.0, 0.5).unwrap();
        let y = [0.3, 0.4];
        let st = m.state(y);
        let e = (0.2f64 * 0.4).exp();
        assert!((st.x[0] - 0.3 * e).abs() < 1e-9);
        assert!((st.d1[0] - e).abs() < 1e-9 && st.d1[1].abs() < 1e-12);
        assert!((st.dn[0] - 0.2 * 0.3 * e).abs() < 1e-9);
        assert!((st.d11[0]).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip_on_parabola() {
        let d = GraphDomain::parabolic(0.25, 2.0).unwrap();
        let f = ObliqueField::new(0.0, VectorFamily::Wave { v: [0.3, 1.0], amp: [0.1, 0.05], freq: 3.0 }, 0.3).unwrap();
        let m = straightening_flow(&f, &d, 0.1, 0.4).unwrap();
        for y in [[0.1, 0.2], [-0.3, 0.35], [0.2, -0.1]] {
            let back = m.inverse(m.forward(y)).unwrap();
            assert!((back[0] - y[0]).abs() < 1e-9 && (back[1] - y[1]).abs() < 1e-9);
        }
        // ∂²x/∂y₁² against differences of ∂x/∂y₁.
        let y = [0.05, 0.2];
        let h = 1e-4;
        let (p, q) = (m.state([y[0] + h, y[1]]), m.state([y[0] - h, y[1]]));
        let st = m.state(y);
        for i in 0..2 {
            assert!(((p.d1[i] - q.d1[i]) / (2.0 * h) - st.d11[i]).abs() < 1e-6);
        }
    }
}
