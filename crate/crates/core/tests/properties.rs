//! Property tests of the invariants each module promises.

use std::sync::Arc;

use proptest::prelude::*;

use dini_core::field::{Grid2, HalfDisk, Rect, ScalarField, ScalarFn, P2};
use dini_core::geometry::{DiffeoMap, GraphDomain, Mollifier, RegularizedDistance};
use dini_core::harness::{decay_study, excess_of_samples, excess_on, fit_iteration, sample_pairs, BoundConfig, DecayConfig, DerivativeField, ExcessMode};
use dini_core::modulus::{classify, empirical_continuity_modulus, empirical_mean_oscillation, log_grid, majorant_beta, Modulus, TransformChain};
use dini_core::oblique::{boundary_lift, envelope_check, straightening_flow, EnvelopeProblem, ObliqueField, VectorFamily};
use dini_core::scenario::{bundled, Scenario};
use dini_core::solvers::{p_mean, reflection_study, solve_nd, CoefficientField, NdDomain};

fn closed_form() -> impl Strategy<Value = Modulus<f64>> {
    (0.1f64..3.0, 0.0f64..1.0, 0.0f64..3.0, 0.5f64..1.0).prop_filter_map("alpha or gamma positive", |(c, alpha, gamma, a)| {
        (alpha > 0.05 || gamma > 0.05).then(|| Modulus::closed(c, alpha, gamma, 1.0, a).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn majorant_dominates_and_decays(w in closed_form(), beta in 0.05f64..1.0) {
        let m = majorant_beta(&w, beta).unwrap();
        let mut prev = f64::INFINITY;
        for t in log_grid(1e-10 * w.right_end(), w.right_end(), 400) {
            prop_assert!(m.eval(t) >= w.eval(t) * (1.0 - 1e-12));
            let q = m.eval(t) / t.powf(beta);
            prop_assert!(q <= prev * (1.0 + 1e-9));
            prev = q;
        }
    }

    #[test]
    fn classification_ignores_rescaling(alpha in 0.0f64..0.8, gamma in 0.0f64..3.5, c in 0.5f64..2.0) {
        prop_assume!(alpha > 0.05 || (gamma - 1.0).abs() > 0.1 && (gamma - 2.0).abs() > 0.1);
        let base = classify(&Modulus::closed(1.0, alpha, gamma, 1.0, 1.0).unwrap()).unwrap();
        let scaled = classify(&Modulus::closed(1.0, alpha, gamma, c, 1.0).unwrap()).unwrap();
        prop_assert_eq!(base.classification, scaled.classification);
        // Double Dini implies Dini.
        prop_assert!(!base.double_dini.is_finite() || base.dini.is_finite());
    }

    #[test]
    fn doubling_constants_bracket_half_steps(w in closed_form()) {
        let (c1, c2) = w.doubling_constants();
        prop_assert!(c1 > 0.0 && c2 <= 1.0 + 1e-12);
        for t in log_grid(1e-6 * w.right_end(), w.right_end(), 60) {
            let r = w.eval(0.6 * t) / w.eval(t);
            prop_assert!(r >= c1 * (1.0 - 1e-9) && r <= c2 * (1.0 + 1e-9));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn transforms_are_nondecreasing(alpha in 0.2f64..0.9, gamma in 0.0f64..3.0, kappa in 0.1f64..0.45, beta in 0.3f64..0.95) {
        let chain = TransformChain::new(&Modulus::closed(1.0, alpha, gamma, 1.0, 1.0).unwrap(), kappa, beta).unwrap();
        let mut prev = [0.0; 4];
        for t in log_grid(1e-6, 0.25, 40) {
            let now = [chain.tilde(t), chain.sharp(t), chain.hat(t), chain.star(t)];
            for k in 0..4 {
                prop_assert!(now[k] >= prev[k] * (1.0 - 1e-9), "transform {k} drops at {t}");
            }
            prev = now;
        }
    }

    #[test]
    fn mean_oscillation_below_continuity_modulus(a in -2.0f64..2.0, b in 0.5f64..4.0, alpha in 0.3f64..1.0) {
        let grid = Grid2::square([-1.0, -1.0], [1.0, 1.0], 96);
        let f = ScalarField::from_fn(grid, |p| a * p[0] + (b * p[1]).sin() + p[0].abs().powf(alpha));
        let region = Rect { lo: [-1.0, -1.0], hi: [1.0, 1.0] };
        let radii = [0.1, 0.2, 0.4];
        let mo = empirical_mean_oscillation(&f, &region, &radii).unwrap();
        let cm = empirical_continuity_modulus(&f, &region, &radii).unwrap();
        for (m, c) in mo.raw.iter().zip(&cm.raw) {
            prop_assert!(*m <= *c * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn regularized_distance_is_comparable(c in 0.05f64..0.5, x in -1.0f64..1.0, lift in -0.5f64..1.0) {
        let d = GraphDomain::parabolic(c, 2.0).unwrap();
        let rd = RegularizedDistance::new(d.clone(), Mollifier::default());
        let p = [x, d.gamma(x) + lift];
        let fp = rd.solve(p).unwrap();
        let psi0 = d.psi0(p);
        prop_assert_eq!(fp.value.signum(), psi0.signum());
        let ratio = d.k * fp.value / psi0;
        prop_assert!((1.0 / 3.0 - 1e-12..=1.0 + 1e-12).contains(&ratio), "{}", ratio);
        for w in fp.gaps.windows(2) {
            if w[0] > 1e-14 {
                prop_assert!(w[1] <= (0.5 + 1e-12) * w[0] + 1e-16);
            }
        }
    }

    #[test]
    fn mollified_lift_is_lipschitz_in_scale(c in 0.05f64..0.5, x in -1.0f64..1.0, y in -0.5f64..1.0, t1 in 0.0f64..0.5, t2 in 0.0f64..0.5) {
        let d = GraphDomain::parabolic(c, 2.0).unwrap();
        let rd = RegularizedDistance::new(d.clone(), Mollifier::default());
        let p = [x, y];
        prop_assert!((rd.lift(0.0, p) - d.psi0(p)).abs() < 1e-14);
        prop_assert!((rd.lift(t1, p) - rd.lift(t2, p)).abs() <= d.k * (t1 - t2).abs() * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn constant_fields_straighten_affinely(angle in -1.2f64..1.2, x0 in -0.5f64..0.5, y1 in -0.3f64..0.3, yn in -0.3f64..0.3) {
        let d = GraphDomain::flat(4.0);
        let field = ObliqueField::new(0.0, VectorFamily::rotated_normal(angle), 0.3).unwrap();
        let map = straightening_flow(&field, &d, x0, 0.5).unwrap();
        let h = 1e-2;
        let f = |a: f64, b: f64| map.forward([y1 + a, yn + b]);
        for i in 0..2 {
            let dxx = (f(h, 0.0)[i] - 2.0 * f(0.0, 0.0)[i] + f(-h, 0.0)[i]) / (h * h);
            let dyy = (f(0.0, h)[i] - 2.0 * f(0.0, 0.0)[i] + f(0.0, -h)[i]) / (h * h);
            let dxy = (f(h, h)[i] - f(h, -h)[i] - f(-h, h)[i] + f(-h, -h)[i]) / (4.0 * h * h);
            prop_assert!(dxx.abs() < 1e-8 && dyy.abs() < 1e-8 && dxy.abs() < 1e-8);
        }
    }

    #[test]
    fn straightening_round_trips(amp in 0.0f64..0.15, freq in 0.5f64..4.0, tilt in -0.4f64..0.4, x0 in -0.4f64..0.4) {
        let d = GraphDomain::parabolic(0.25, 2.0).unwrap();
        let field = ObliqueField::new(0.0, VectorFamily::Wave { v: [tilt, 1.0], amp: [amp, 0.5 * amp], freq }, 0.3).unwrap();
        let map = straightening_flow(&field, &d, x0, 0.3).unwrap();
        let r = map.radius;
        for y in [[0.5 * r, 0.5 * r], [-0.7 * r, 0.2 * r], [0.1 * r, -0.4 * r]] {
            let back = map.inverse(map.forward(y)).unwrap();
            prop_assert!((back[0] - y[0]).hypot(back[1] - y[1]) <= 1e-8);
        }
    }

    #[test]
    fn envelope_margin_is_scale_invariant(k0 in 0.0f64..2.0, mu in 0.2f64..0.8, frac in 0.1f64..1.0, k1 in 0.0f64..1.5, x0 in -2.0f64..2.0, c in 0.1f64..10.0) {
        let alpha = frac * mu;
        let build = |s: f64| EnvelopeProblem {
            dim: 1,
            a: Arc::new(move |t: f64| vec![k0 * (3.0 * t).cos()]),
            b: Arc::new(move |t: f64| {
                let gap: f64 = 1.0 - t;
                vec![s * k1 * (k0 * t).exp() * gap.powf(alpha) / (gap * gap) * (2.0 * t).sin()]
            }),
            k0,
            k1: s * k1,
            rho: Modulus::power(alpha, 1.0).unwrap(),
            mu,
            tau: 1.0,
            x0: vec![s * x0],
        };
        let (base, scaled) = (envelope_check(&build(1.0), 0.02).unwrap(), envelope_check(&build(c), 0.02).unwrap());
        prop_assert!(base.pass && scaled.pass);
        prop_assert!((base.margin - scaled.margin).abs() <= 1e-9 * base.margin.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn lift_is_linear_in_data(a in -1.0f64..1.0, b in -1.0f64..1.0, freq in 0.5f64..3.0, x in -0.3f64..0.3, y in 0.0f64..0.45) {
        let d = GraphDomain::parabolic(0.25, 2.0).unwrap();
        let g1: ScalarFn = Arc::new(move |p: P2| a * p[0]);
        let g2: ScalarFn = Arc::new(move |p: P2| b * (freq * p[0]).sin() + p[1] * p[1]);
        let sum: ScalarFn = { let (g1, g2) = (g1.clone(), g2.clone()); Arc::new(move |p: P2| g1(p) + g2(p)) };
        let lift = |g: ScalarFn| boundary_lift(g, Modulus::zero(1.0), &d, Mollifier::default(), 0.5).unwrap();
        let p = [x, d.gamma(x) + y];
        let (v1, v2, v) = (lift(g1).eval(p), lift(g2).eval(p), lift(sum).eval(p));
        prop_assert!((v - v1 - v2).abs() <= 1e-12 * (1.0 + v.abs()));
    }

    #[test]
    fn maximum_principle(a12 in -0.3f64..0.3, a22 in 0.6f64..1.5, c in prop::array::uniform4(-1.0f64..1.0)) {
        let coeffs = CoefficientField::constant([[1.0, a12], [a12, a22]]);
        let data: ScalarFn = Arc::new(move |p: P2| c[0] * p[0] + c[1] * (2.0 * p[1]).sin() + c[2] * (3.0 * p[0] * p[1]).cos() + c[3] * p[0] * p[0]);
        let zero: ScalarFn = Arc::new(|_| 0.0);
        let sol = solve_nd(&coeffs, &zero, NdDomain::Ball { center: [0.0, 0.0], radius: 1.0 }, 24, Some(&data)).unwrap();
        let (lo, hi) = (0..2000).map(|k| {
            let th = std::f64::consts::TAU * k as f64 / 2000.0;
            data([th.cos(), th.sin()])
        }).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        let tol = 1e-3 * (hi - lo).max(1e-12);
        for (_, _, _, v) in sol.u.valid_nodes() {
            prop_assert!(v <= hi + tol && v >= lo - tol);
        }
    }

    #[test]
    fn lipschitz_ratio_is_bounded(a12 in -0.3f64..0.3, a22 in 0.6f64..1.5, c in prop::array::uniform3(-1.0f64..1.0)) {
        // Curved-boundary data read at the mirror point keeps D_n u = 0 on the flat part.
        let coeffs = CoefficientField::constant([[1.0, a12], [a12, a22]]);
        let data: ScalarFn = Arc::new(move |p: P2| 1.0 + c[0] * p[0] + c[1] * p[1] * p[1] + c[2] * p[0] * p[0]);
        let zero: ScalarFn = Arc::new(|_| 0.0);
        let sol = solve_nd(&coeffs, &zero, NdDomain::HalfBall { center: [0.0, 0.0], radius: 1.0 }, 48, Some(&data)).unwrap();
        let grad = sol.u.gradient();
        let inner = HalfDisk { center: [0.0, 0.0], radius: 0.5 };
        let du = grad.valid_nodes().filter(|(_, _, p, _)| dini_core::field::Region::contains(&inner, *p)).map(|(_, _, _, g)| g[0].hypot(g[1])).fold(0.0, f64::max);
        for p in [0.5, 1.0, 2.0] {
            let mean = p_mean(sol.u.valid_nodes().map(|(_, _, _, v)| v.abs()), p).unwrap();
            prop_assert!(du / mean < 10.0, "p = {}: ratio {}", p, du / mean);
        }
    }

    #[test]
    fn reflected_solution_is_even(a12 in -0.45f64..0.45, k in 0.5f64..3.0) {
        let f: ScalarFn = Arc::new(move |p: P2| (k * p[0]).cos());
        let study = reflection_study([[1.0, a12], [a12, 1.0]], f, 1.0, &[16, 32]).unwrap();
        for row in &study.rows {
            prop_assert!(row.asymmetry <= 10.0 * (1e-10 + row.h * row.h));
        }
    }
}

fn samples_strategy() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-2.0f64..2.0), 50..120)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn excess_scales_with_data(s in samples_strategy(), c in -5.0f64..5.0, hessian in any::<bool>()) {
        let mode = if hessian { ExcessMode::Hessian } else { ExcessMode::Gradient };
        let base = excess_of_samples(&s, mode, 0.5).unwrap();
        let scaled: Vec<[f64; 3]> = s.iter().map(|v| v.map(|x| c * x)).collect();
        let got = excess_of_samples(&scaled, mode, 0.5).unwrap();
        prop_assert!(base >= 0.0);
        prop_assert!((got - c.abs() * base).abs() <= 1e-6 * c.abs() * base + 1e-12, "{} vs {}", got, c.abs() * base);
    }

    #[test]
    fn excess_below_mean_candidate(s in samples_strategy(), p in 0.2f64..1.0) {
        let e = excess_of_samples(&s, ExcessMode::Gradient, p).unwrap();
        let m = [0, 1].map(|c| s.iter().map(|v| v[c]).sum::<f64>() / s.len() as f64);
        let at_mean = p_mean(s.iter().map(|v| (v[0] - m[0]).hypot(v[1] - m[1])), p).unwrap();
        prop_assert!(e <= at_mean * (1.0 + 1e-12));
    }

    #[test]
    fn sampler_is_deterministic(seed in any::<u64>()) {
        let grid = Grid2::square([-1.0, 0.0], [1.0, 2.0], 32);
        let u = ScalarField::from_fn(grid, |p| p[0] * p[1]);
        let field = DerivativeField::new(&u, ExcessMode::Gradient);
        let cfg = BoundConfig { pairs: 200, seed, ..Default::default() };
        prop_assert_eq!(sample_pairs(&field, &cfg).unwrap(), sample_pairs(&field, &cfg).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn excess_is_translation_covariant(shift in -20i32..20, x in -0.2f64..0.2, r in 0.2f64..0.5, k in 1.0f64..4.0) {
        let grid = Grid2::square([-2.0, -2.0], [2.0, 2.0], 160);
        let tau = shift as f64 * grid.h[0];
        let u = |p: P2| (k * p[0]).sin() * (1.0 + p[1] * p[1]) + p[0].abs().powf(1.5);
        let base = ScalarField::from_fn(grid, u);
        let moved = ScalarField::from_fn(grid, |p| u([p[0] - tau, p[1]]));
        for mode in [ExcessMode::Gradient, ExcessMode::Hessian] {
            let a = excess_on(&DerivativeField::new(&base, mode), [x, 0.1], r, 0.5).unwrap();
            let b = excess_on(&DerivativeField::new(&moved, mode), [x + tau, 0.1], r, 0.5).unwrap();
            // The p-mean minimizer stops at simplex resolution; sample order differs after the shift.
            prop_assert!((a - b).abs() <= 1e-7 * a.max(1e-12), "{:?}: {} vs {}", mode, a, b);
        }
    }

    #[test]
    fn affine_data_has_zero_excess(a in -3.0f64..3.0, b in -3.0f64..3.0, x in -0.3f64..0.3) {
        let grid = Grid2::square([-1.0, -1.0], [1.0, 1.0], 64);
        let u = ScalarField::from_fn(grid, |p| a * p[0] + b * p[1] + 0.5);
        let e = excess_on(&DerivativeField::new(&u, ExcessMode::Gradient), [x, 0.0], 0.5, 0.5).unwrap();
        prop_assert!(e <= 1e-12 * (1.0 + a.abs() + b.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn contraction_constant_is_stable_across_centres(alpha in 0.3f64..0.8, wobble in 0.0f64..0.3) {
        let grid = Grid2::new([-1.0, 0.0], [1.0, 1.0], [256, 128]);
        let region = HalfDisk { center: [0.0, 0.0], radius: 1.0 };
        let u = ScalarField::from_fn_in(grid, &region, |p| {
            p[1] + (1.0 + wobble * (2.0 * p[0]).sin()) * p[1].powf(1.0 + alpha) / (1.0 + alpha)
        });
        let cfg = DecayConfig { r0: 0.4, ..Default::default() };
        let centres = [[-0.3, 0.0], [0.0, 0.0], [0.3, 0.0]];
        let tables = decay_study(&u, &centres, ExcessMode::Gradient, &cfg).unwrap();
        let c0: Vec<f64> = tables.iter().map(|t| fit_iteration(t, |r| (2.0 * r).powf(alpha)).c0).collect();
        let (lo, hi) = c0.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &c| (l.min(c), h.max(c)));
        prop_assert!(lo > 0.0 && hi < 3.0 * lo, "{:?}", c0);
    }

    #[test]
    fn third_derivative_identity(a12 in -0.3f64..0.3, a22 in 0.6f64..1.5, c30 in -1.0f64..1.0, c21 in -1.0f64..1.0) {
        // Cubic with ā^{ij} D_ij v = 0; the 9-point scheme reproduces it exactly.
        let a11 = 1.0;
        let c12 = -(6.0 * a11 * c30 + 4.0 * a12 * c21) / (2.0 * a22);
        let c03 = -(2.0 * a11 * c21 + 4.0 * a12 * c12) / (6.0 * a22);
        let v = move |p: P2| c30 * p[0].powi(3) + c21 * p[0] * p[0] * p[1] + c12 * p[0] * p[1] * p[1] + c03 * p[1].powi(3);
        let data: ScalarFn = Arc::new(v);
        let zero: ScalarFn = Arc::new(|_| 0.0);
        let coeffs = CoefficientField::constant([[a11, a12], [a12, a22]]);
        let sol = solve_nd(&coeffs, &zero, NdDomain::Ball { center: [0.0, 0.0], radius: 1.0 }, 32, Some(&data)).unwrap();
        let hess = sol.u.hessian();
        let g = sol.u.grid;
        let (i, j) = g.nearest([0.1, -0.05]);
        let d = |di: isize, dj: isize| hess.at((i as isize + di) as usize, (j as isize + dj) as usize);
        let (hx, hy) = (g.h[0], g.h[1]);
        // D_m of each Hessian entry by central differences, m = x then y.
        let dm = |e: fn(&[[f64; 2]; 2]) -> f64| [(e(&d(1, 0)) - e(&d(-1, 0))) / (2.0 * hx), (e(&d(0, 1)) - e(&d(0, -1))) / (2.0 * hy)];
        let (dxx, dxy, dyy) = (dm(|m| m[0][0]), dm(|m| m[0][1]), dm(|m| m[1][1]));
        for m in 0..2 {
            let rebuilt = -(a11 * dxx[m] + 2.0 * a12 * dxy[m]) / a22;
            // Exact up to solver round-off amplified by the third difference.
            prop_assert!((rebuilt - dyy[m]).abs() < 1e-6 * (1.0 + dyy[m].abs()), "m = {}: {} vs {}", m, rebuilt, dyy[m]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scenario_round_trips(seed in any::<u64>(), g in 3u32..6, p in 0.1f64..1.0, kappa in 0.05f64..0.45, which in 0usize..4) {
        let name = ["flat-laplace", "holder-decay", "dini-log-bound", "tilted-parabolic"][which];
        let mut v = serde_json::to_value(bundled(name).unwrap()).unwrap();
        v["seed"] = seed.into();
        v["harness"]["p"] = p.into();
        v["harness"]["kappa"] = kappa.into();
        if !v["grids"].as_array().unwrap().is_empty() {
            v["grids"] = serde_json::json!([1u32 << g, 1u32 << (g + 1)]);
        }
        let s = Scenario::from_json(&v.to_string()).unwrap();
        let again = Scenario::from_json(&s.canonical()).unwrap();
        prop_assert_eq!(&again, &s);
        prop_assert_eq!(again.canonical(), s.canonical());
        prop_assert_eq!(again.hash(), s.hash());
    }
}
