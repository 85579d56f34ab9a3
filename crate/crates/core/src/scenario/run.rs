//! Staged execution of a scenario and its report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::{generate_coefficients, Check, Scenario, Stage, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::field::{Grid2, Rect, ScalarField, ScalarFn, VectorFn, P2};
use crate::geometry::{GraphDomain, Mollifier, Profile};
use crate::harness::{
    c2_global_pipeline, choose_beta, decay_study, fit_iteration, modulus_bound_compare, BoundAssembly, BoundConfig, BoundInputs, DecayConfig,
    DerivativeField, ExcessMode, ExcessTable, GlobalConfig, GlobalReport, IterationFit, BETA_CANDIDATES,
};
use crate::modulus::{empirical_mean_oscillation, log_grid, Modulus};
use crate::oblique::{reduce_to_neumann, InputModuli, ObliqueField, ObliqueProblem, ProvenanceEntry, ReduceConfig, VectorFamily};
use crate::quadrature::integrate;
use crate::solvers::{solve_conormal, ConormalData, ConormalOptions, DiscreteSolution};

/// Overrides applied on top of the scenario file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Artifacts go to `out/<scenario>/<stage>/`; nothing is written when absent.
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Replaces the grid list by this single grid.
    pub grid_override: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub pass: bool,
    pub value: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    fn current() -> Self {
        Self {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub results: BTreeMap<String, Value>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    pub environment: Environment,
    pub timing_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridError {
    pub cells: usize,
    pub h: f64,
    /// Largest nodal error after removing the mean difference.
    pub max_error: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub errors: Vec<GridError>,
    /// Solution on the finest grid.
    pub solution: DiscreteSolution,
    /// Measured mean oscillation of `A` (Frobenius norm) on the finest grid.
    pub omega_a: Modulus<f64>,
    /// Measured mean oscillation of `g⃗`.
    pub omega_g: Modulus<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayOutcome {
    pub tables: Vec<ExcessTable>,
    pub fits: Vec<IterationFit>,
    /// Largest fitted contraction over the centres.
    pub c0: f64,
    pub beta: f64,
    /// Whether `β` satisfies the smallness condition for the fitted contraction.
    pub beta_admissible: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ObliqueOutcome {
    pub trace_max: f64,
    pub min_det: f64,
    pub provenance: Vec<ProvenanceEntry>,
    /// `(t, ω_{f₀}(t))` samples of the assembled bound.
    pub omega_f0: Vec<[f64; 2]>,
}

/// Everything a run produced.
pub struct Outcome {
    pub report: Report,
    pub solve: Option<SolveOutcome>,
    pub decay: Option<DecayOutcome>,
    pub bound: Option<BoundAssembly>,
    pub oblique: Option<ObliqueOutcome>,
    pub global: Option<GlobalReport>,
}

impl Outcome {
    /// Process exit code: 0 iff every declared check passed.
    pub fn exit_code(&self) -> i32 {
        if self.report.pass {
            0
        } else {
            1
        }
    }
}

type Profile1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn solve_box() -> Rect {
    let pad = 1e-9;
    Rect { lo: [-1.0 - pad, -pad], hi: [1.0 + pad, 2.0 + pad] }
}

/// `U(y_j) = ∫₀^{y_j} (1 + q)/(1 + p)` at `y_j = j·h`, accumulated panel by panel.
fn normal_primitive(p: &Profile1, q: &Profile1, h: f64, rows: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows);
    let mut acc = 0.0;
    out.push(0.0);
    for j in 1..rows {
        let (a, b) = ((j - 1) as f64 * h, j as f64 * h);
        acc += integrate(|s: f64| (1.0 + q(s)) / (super::LAMBDA + p(s)), a, b, 1e-15, 1e-13, 200).value;
        out.push(acc);
    }
    out
}

/// `D_i(a D_i u) = div g⃗` on `[−1, 1] × [0, 2]` with `a = λ + p(y)`, `g⃗ = (0, q(y))` and
/// exact solution `x + ∫₀^y (1 + q)/a`; the conormal flux `a∇u − g⃗` is `(a, 1)`.
fn solve_stage(sc: &Scenario) -> Result<SolveOutcome> {
    let rect = solve_box();
    let p = sc.coefficients.profile()?;
    let q: Profile1 = match &sc.data.g {
        Some(g) => g.profile()?,
        None => Arc::new(|_| 0.0),
    };
    let mut errors = Vec::new();
    let mut finest = None;
    for &n in &sc.grids {
        let grid = Grid2::square([-1.0, 0.0], [1.0, 2.0], n);
        let coeffs = generate_coefficients(&sc.coefficients, grid, &rect)?;
        let (pa, qa) = (p.clone(), q.clone());
        let g0: ScalarFn = Arc::new(move |x: P2| {
            let d = [x[0] + 1.0, 1.0 - x[0], x[1], 2.0 - x[1]];
            let side = (0..4).min_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap()).unwrap();
            match side {
                0 => -(super::LAMBDA + pa(x[1])),
                1 => super::LAMBDA + pa(x[1]),
                2 => -1.0,
                _ => 1.0,
            }
        });
        let gv: VectorFn = Arc::new(move |x: P2| [0.0, qa(x[1])]);
        let data = ConormalData { g: sc.data.g.as_ref().map(|_| gv), g0: Some(g0), f: None };
        let sol = solve_conormal(&coeffs, &data, &rect, grid, ConormalOptions::default())?;
        let prim = normal_primitive(&p, &q, grid.h[1], grid.n[1]);
        let diffs: Vec<f64> = sol.u.valid_nodes().map(|(_, j, x, v)| v - (x[0] + prim[j])).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let max_error = diffs.iter().map(|d| (d - mean).abs()).fold(0.0, f64::max);
        errors.push(GridError { cells: n, h: grid.h[0], max_error, residual: sol.residual });
        finest = Some((sol, grid));
    }
    let (solution, grid) = finest.ok_or_else(|| Error::param("no grids"))?;
    let radii = log_grid(4.0 * grid.h[0], 1.0, 7);
    let measure = |prof: &Profile1, weight: f64| -> Result<Modulus<f64>> {
        let field = ScalarField::from_fn(grid, |x| prof(x[1]));
        let m = empirical_mean_oscillation(&field, &rect, &radii)?;
        if m.raw.iter().all(|&v| v == 0.0) {
            return Ok(Modulus::zero(1.0));
        }
        match &m.envelope {
            Modulus::Table(t) => Modulus::table(t.abscissae().to_vec(), t.values().iter().map(|v| weight * v).collect()),
            other => Ok(other.clone()),
        }
    };
    let omega_a = measure(&p, std::f64::consts::SQRT_2)?;
    let omega_g = measure(&q, 1.0)?;
    Ok(SolveOutcome { errors, solution, omega_a, omega_g })
}

fn decay_stage(sc: &Scenario, solve: &SolveOutcome) -> Result<DecayOutcome> {
    let h = &sc.harness;
    let cfg = DecayConfig { p: h.p, kappa: h.kappa, r0: h.r0, levels: h.levels, per_step: h.per_step, ..DecayConfig::default() };
    let tables = decay_study(&solve.solution.u, &h.centers, h.mode, &cfg)?;
    let sup = DerivativeField::new(&solve.solution.u, h.mode).sup();
    let forcing = |r: f64| solve.omega_a.eval((2.0 * r).min(1.0)) * sup + solve.omega_g.eval((2.0 * r).min(1.0));
    let fits: Vec<IterationFit> = tables.iter().map(|t| fit_iteration(t, forcing)).collect();
    let c0 = fits.iter().map(|f| f.c0).fold(0.0, f64::max);
    let (beta, beta_admissible) = match h.beta {
        Some(b) => (b, 4f64.powf((1.0 - h.p) / h.p) * c0 * h.kappa <= h.kappa.powf(b)),
        None => choose_beta(c0, h.p, h.kappa, &BETA_CANDIDATES),
    };
    Ok(DecayOutcome { tables, fits, c0, beta, beta_admissible })
}

fn bound_stage(sc: &Scenario, solve: &SolveOutcome, beta: f64) -> Result<BoundAssembly> {
    let h = &sc.harness;
    let field = DerivativeField::new(&solve.solution.u, h.mode);
    let seminorm = match h.mode {
        ExcessMode::Gradient => 0.0,
        ExcessMode::Hessian => field.sup(),
    };
    let inputs = BoundInputs {
        mode: h.mode,
        omega_a: solve.omega_a.clone(),
        omega_data: solve.omega_g.clone(),
        norm: field.l1(),
        seminorm,
        kappa: h.kappa,
        beta,
    };
    let cfg = BoundConfig { pairs: h.pairs, bins: h.bins, seed: sc.seed, c_max: h.c_max, ..BoundConfig::default() };
    modulus_bound_compare(&field, &inputs, &cfg)
}

/// Harmonic manufactured solution; `f = 0` for any scalar coefficient.
fn manufactured() -> (ScalarFn, VectorFn) {
    let u: ScalarFn = Arc::new(|p: P2| 0.5 * p[0].sin() * p[1].cosh() + p[0] * p[1]);
    let du: VectorFn = Arc::new(|p: P2| [0.5 * p[0].cos() * p[1].cosh() + p[1], 0.5 * p[0].sin() * p[1].sinh() + p[0]]);
    (u, du)
}

fn oblique_problem(sc: &Scenario) -> Result<(ObliqueProblem, ReduceConfig, f64)> {
    let o = sc.oblique.as_ref().ok_or_else(|| Error::param("missing oblique block"))?;
    let domain = GraphDomain::new(sc.domain, 2.0)?;
    let field = ObliqueField::new(o.beta0, VectorFamily::Constant { v: o.direction }, o.mu0)?;
    let samples: Vec<f64> = (0..=200).map(|k| o.x0 - o.radius + 2.0 * o.radius * k as f64 / 200.0).collect();
    let mu = field.obliqueness(&domain, &samples);
    if mu < o.mu0 {
        return Err(Error::param(format!("obliqueness {mu:.4} below the declared mu0 = {}", o.mu0)));
    }
    let (u, du) = manufactured();
    let (beta0, v) = (o.beta0, o.direction);
    let (uu, dd) = (u.clone(), du.clone());
    let g: ScalarFn = Arc::new(move |p: P2| {
        let d = dd(p);
        beta0 * uu(p) + v[0] * d[0] + v[1] * d[1]
    });
    let prof = sc.coefficients.profile()?;
    let dom = domain.clone();
    let a = Arc::new(move |p: P2| {
        let s = super::LAMBDA + prof((p[1] - dom.gamma(p[0])).max(0.0));
        [[s, 0.0], [0.0, s]]
    });

    // |g|₁ and a Lipschitz bound for Dg along the boundary, by differences.
    let step = 2.0 * o.radius / 200.0;
    let gb: Vec<f64> = samples.iter().map(|&s| g(domain.boundary_point(s))).collect();
    let d1: Vec<f64> = gb.windows(3).map(|w| (w[2] - w[0]) / (2.0 * step)).collect();
    let d2: Vec<f64> = gb.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]) / (step * step)).collect();
    let g_c1 = gb.iter().chain(&d1).fold(0.0f64, |m, v| m.max(v.abs()));
    let lip = d2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut moduli = InputModuli::constant(g_c1);
    let wa = sc.coefficients.modulus()?;
    moduli.omega_a = match wa.as_closed() {
        Some(c) => Modulus::closed(std::f64::consts::SQRT_2 * c.coeff, c.alpha, c.gamma, c.scale, wa.right_end())?,
        None => wa,
    };
    if lip > 0.0 {
        moduli.rho_dg = Modulus::closed(lip, 1.0, 0.0, 1.0, 1.0)?;
    }
    let pb = ObliqueProblem {
        domain,
        field,
        a,
        b: Arc::new(|_| [0.0; 2]),
        c: Arc::new(|_| 0.0),
        f: Arc::new(|_| 0.0),
        g,
        u,
        grad_u: du,
        moduli,
    };
    Ok((pb, ReduceConfig { radius: o.radius, lift_height: o.lift_height, s: o.s, cells: o.cells }, o.x0))
}

fn oblique_and_global(sc: &Scenario, want_global: bool) -> Result<(ObliqueOutcome, Option<GlobalReport>, f64, f64)> {
    let t = Instant::now();
    let (pb, cfg, x0) = oblique_problem(sc).map_err(|e| e.in_stage("oblique"))?;
    let red = reduce_to_neumann(&pb, x0, &cfg, &Mollifier::new(Profile::Bump, 16, 16)?).map_err(|e| e.in_stage("oblique"))?;
    let omega_f0 = log_grid(1e-4, 1.0, 17).into_iter().map(|t| [t, red.omega_f0.eval(t)]).collect();
    let outcome = ObliqueOutcome { trace_max: red.trace_max, min_det: red.flattened.min_det, provenance: red.provenance.clone(), omega_f0 };
    let oblique_ms = ms(t);
    let t = Instant::now();
    let global = if want_global {
        let cfg = GlobalConfig { kappa: sc.harness.kappa, beta: sc.harness.beta.unwrap_or(GlobalConfig::default().beta), ..GlobalConfig::default() };
        Some(c2_global_pipeline(&red.flattened, &cfg).map_err(|e| e.in_stage("global"))?)
    } else {
        None
    };
    Ok((outcome, global, oblique_ms, ms(t)))
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

type SolveBranch = (Option<SolveOutcome>, Option<DecayOutcome>, Option<BoundAssembly>, Vec<(&'static str, f64)>);

fn solve_branch(sc: &Scenario) -> Result<SolveBranch> {
    if !sc.pipeline.contains(&Stage::Solve) {
        return Ok((None, None, None, Vec::new()));
    }
    let mut timing = Vec::new();
    let t = Instant::now();
    let solve = solve_stage(sc).map_err(|e| e.in_stage("solve"))?;
    timing.push(("solve", ms(t)));
    let t = Instant::now();
    let decay = if sc.pipeline.contains(&Stage::Decay) { Some(decay_stage(sc, &solve).map_err(|e| e.in_stage("decay"))?) } else { None };
    if decay.is_some() {
        timing.push(("decay", ms(t)));
    }
    let t = Instant::now();
    let bound = if sc.pipeline.contains(&Stage::Bound) {
        let beta = sc.harness.beta.or(decay.as_ref().map(|d| d.beta)).unwrap_or(GlobalConfig::default().beta);
        Some(bound_stage(sc, &solve, beta).map_err(|e| e.in_stage("bound"))?)
    } else {
        None
    };
    if bound.is_some() {
        timing.push(("bound", ms(t)));
    }
    Ok((Some(solve), decay, bound, timing))
}

fn evaluate(check: &Check, out: &Outcome) -> CheckResult {
    let result = |pass: bool, value: Option<f64>, detail: String| CheckResult { check: check.name().into(), pass, value, detail };
    match check {
        Check::SolveError { max } => {
            let e = out.solve.as_ref().and_then(|s| s.errors.last()).map_or(f64::INFINITY, |g| g.max_error);
            result(e <= *max, Some(e), format!("finest-grid error {e:.3e} vs {max:.3e}"))
        }
        Check::DecayFloor => {
            let tables = out.decay.as_ref().map_or(&[][..], |d| &d.tables[..]);
            let worst = tables.iter().flat_map(|t| t.phi.iter().map(move |v| v / t.floor.max(f64::MIN_POSITIVE))).fold(0.0, f64::max);
            let pass = !tables.is_empty() && tables.iter().all(|t| t.at_floor);
            result(pass, Some(worst), format!("largest excess / floor = {worst:.3e}"))
        }
        Check::DecayExponent { min, max } => {
            let tables = out.decay.as_ref().map_or(&[][..], |d| &d.tables[..]);
            let exps: Vec<Option<f64>> = tables.iter().map(|t| t.exponent).collect();
            let pass = !exps.is_empty() && exps.iter().all(|e| e.is_some_and(|e| e >= *min && e <= *max));
            let shown: Vec<String> = exps.iter().map(|e| e.map_or("none".into(), |e| format!("{e:.3}"))).collect();
            let worst = exps.iter().flatten().map(|e| (e - 0.5 * (min + max)).abs()).fold(0.0, f64::max);
            result(pass, Some(worst), format!("exponents [{}] vs [{min}, {max}]", shown.join(", ")))
        }
        Check::BoundCovers => match &out.bound {
            Some(b) => result(
                b.pass,
                Some(b.fitted_c),
                format!("C = {:.4}, covered {:.4}, vanishing ratio {}", b.fitted_c, b.covered, b.vanishing.map_or("n/a".into(), |v| format!("{v:.4}"))),
            ),
            None => result(false, None, "bound stage did not run".into()),
        },
        Check::TraceBelow { max } => {
            let t = out.oblique.as_ref().map_or(f64::INFINITY, |o| o.trace_max);
            result(t <= *max, Some(t), format!("flat-trace |D_n u| = {t:.3e} vs {max:.1e}"))
        }
        Check::GlobalDominates => match &out.global {
            Some(g) => result(
                g.dominates,
                g.bound,
                format!(
                    "bound {} vs measured {}{}",
                    g.bound.map_or("none".into(), |b| format!("{b:.4}")),
                    g.measured.map_or("none".into(), |m| format!("{m:.4}")),
                    if g.inconclusive { " (inconclusive: smallness radius below the grid)" } else { "" }
                ),
            ),
            None => result(false, None, "global stage did not run".into()),
        },
    }
}

/// Runs the declared pipeline; the solve chain and the oblique chain run in parallel.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<Outcome> {
    let mut sc = scenario.clone();
    if let Some(s) = opts.seed {
        sc.seed = s;
    }
    if let Some(n) = opts.grid_override {
        sc.grids = vec![n];
    }
    sc.validate()?;
    let wants_oblique = sc.pipeline.contains(&Stage::Oblique);
    let wants_global = sc.pipeline.contains(&Stage::Global);
    let (left, right) = rayon::join(
        || solve_branch(&sc),
        || if wants_oblique { oblique_and_global(&sc, wants_global).map(Some) } else { Ok(None) },
    );
    let (solve, decay, bound, mut timing) = left?;
    let right = right?;
    let (oblique, global) = match right {
        Some((o, g, to, tg)) => {
            timing.push(("oblique", to));
            if g.is_some() {
                timing.push(("global", tg));
            }
            (Some(o), g)
        }
        None => (None, None),
    };

    let mut results = BTreeMap::new();
    if let Some(s) = &solve {
        results.insert("solve".into(), json!({ "grids": s.errors }));
    }
    if let Some(d) = &decay {
        let exps: Vec<Option<f64>> = d.tables.iter().map(|t| t.exponent).collect();
        results.insert("decay".into(), json!({ "exponents": exps, "c0": d.c0, "beta": d.beta, "beta_admissible": d.beta_admissible }));
    }
    if let Some(b) = &bound {
        results.insert(
            "bound".into(),
            json!({ "fitted_c": b.fitted_c, "covered": b.covered, "vanishing": b.vanishing, "dini": b.dini, "beta": b.beta, "pass": b.pass }),
        );
    }
    if let Some(o) = &oblique {
        results.insert("oblique".into(), json!({ "trace_max": o.trace_max, "min_det": o.min_det }));
    }
    if let Some(g) = &global {
        results.insert(
            "global".into(),
            json!({ "bound": g.bound, "measured": g.measured, "fitted_c": g.fitted_c, "smallness_radius": g.smallness_radius, "dominates": g.dominates, "inconclusive": g.inconclusive }),
        );
    }
    let report = Report {
        schema_version: SCHEMA_VERSION,
        scenario: sc.name.clone(),
        scenario_hash: sc.hash(),
        seed: sc.seed,
        results,
        checks: Vec::new(),
        pass: true,
        environment: Environment::current(),
        timing_ms: timing.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    };
    let mut out = Outcome { report, solve, decay, bound, oblique, global };
    out.report.checks = sc.checks.iter().map(|c| evaluate(c, &out)).collect();
    out.report.pass = out.report.checks.iter().all(|c| c.pass);
    if let Some(dir) = &opts.out {
        write_artifacts(&dir.join(&sc.name), &out)?;
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Numeric(format!("csv: {e}"))
}

fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn stage_dir(base: &Path, stage: &str) -> Result<PathBuf> {
    let d = base.join(stage);
    fs::create_dir_all(&d)?;
    Ok(d)
}

#[derive(Serialize)]
struct ExcessRow {
    cx: f64,
    cy: f64,
    r: f64,
    phi: f64,
}

#[derive(Serialize)]
struct FitRow {
    cx: f64,
    cy: f64,
    r: f64,
    lhs: f64,
    homogeneous: f64,
    forcing: f64,
    residual: f64,
}

#[derive(Serialize)]
struct PairRow {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    distance: f64,
    lhs: f64,
    rhs: f64,
}

fn write_artifacts(base: &Path, out: &Outcome) -> Result<()> {
    fs::create_dir_all(base)?;
    if let Some(s) = &out.solve {
        let d = stage_dir(base, "solve")?;
        write_rows(&d.join("errors.csv"), &s.errors)?;
        s.solution.write_csv(fs::File::create(d.join("solution.csv"))?)?;
    }
    if let Some(dc) = &out.decay {
        let d = stage_dir(base, "decay")?;
        write_rows(
            &d.join("excess.csv"),
            dc.tables.iter().flat_map(|t| t.radii.iter().zip(&t.phi).map(move |(&r, &phi)| ExcessRow { cx: t.center[0], cy: t.center[1], r, phi })),
        )?;
        write_rows(
            &d.join("fits.csv"),
            dc.tables.iter().zip(&dc.fits).flat_map(|(t, f)| {
                f.steps.iter().map(move |s| FitRow {
                    cx: t.center[0],
                    cy: t.center[1],
                    r: s.r,
                    lhs: s.lhs,
                    homogeneous: s.homogeneous,
                    forcing: s.forcing,
                    residual: s.residual,
                })
            }),
        )?;
        write_json(&d.join("tables.json"), dc)?;
    }
    if let Some(b) = &out.bound {
        let d = stage_dir(base, "bound")?;
        write_rows(
            &d.join("pairs.csv"),
            b.pairs.iter().map(|p| PairRow { x0: p.x[0], x1: p.x[1], y0: p.y[0], y1: p.y[1], distance: p.distance, lhs: p.lhs, rhs: p.rhs }),
        )?;
        write_rows(&d.join("bins.csv"), &b.bins)?;
        write_json(&d.join("assembly.json"), b)?;
    }
    if let Some(o) = &out.oblique {
        let d = stage_dir(base, "oblique")?;
        write_json(&d.join("provenance.json"), &o.provenance)?;
        write_json(&d.join("summary.json"), o)?;
    }
    if let Some(g) = &out.global {
        let d = stage_dir(base, "global")?;
        write_rows(&d.join("moduli.csv"), &g.moduli)?;
        write_rows(&d.join("fits.csv"), &g.fits)?;
        write_json(&d.join("report.json"), g)?;
    }
    write_json(&base.join("report.json"), &out.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{bundled, FamilySpec};

    #[test]
    fn empty_scenario_passes_with_empty_report() {
        let out = run(&Scenario::empty("empty"), &RunOptions::default()).unwrap();
        assert!(out.report.pass && out.report.checks.is_empty() && out.report.results.is_empty());
        assert_eq!(out.exit_code(), 0);
    }

    #[test]
    fn primitive_of_constant_profile() {
        let p: Profile1 = Arc::new(|_| 0.25);
        let q: Profile1 = Arc::new(|_| 0.0);
        let u = normal_primitive(&p, &q, 0.5, 5);
        for (j, v) in u.iter().enumerate() {
            assert!((v - 0.5 * j as f64 / 1.25).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_laplace_passes() {
        let out = run(&bundled("flat-laplace").unwrap(), &RunOptions::default()).unwrap();
        for c in &out.report.checks {
            assert!(c.pass, "{}: {}", c.check, c.detail);
        }
        assert_eq!(out.exit_code(), 0);
    }

    #[test]
    fn holder_solve_converges() {
        let mut sc = Scenario::empty("conv");
        sc.coefficients = FamilySpec::Holder { alpha: 0.5, amplitude: 0.3 };
        sc.grids = vec![16, 32, 64];
        sc.pipeline = vec![Stage::Solve];
        let out = run(&sc, &RunOptions::default()).unwrap();
        let e: Vec<f64> = out.solve.unwrap().errors.iter().map(|g| g.max_error).collect();
        assert!(e[2] < e[1] && e[1] < e[0], "{e:?}");
        assert!(e[2] < 1e-3, "{e:?}");
    }

    #[test]
    fn failing_check_sets_exit_code() {
        let mut sc = Scenario::empty("fail");
        sc.coefficients = FamilySpec::Holder { alpha: 0.5, amplitude: 0.3 };
        sc.grids = vec![16];
        sc.pipeline = vec![Stage::Solve];
        sc.checks = vec![Check::SolveError { max: 0.0 }];
        let out = run(&sc, &RunOptions::default()).unwrap();
        assert!(!out.report.pass);
        assert_eq!(out.exit_code(), 1);
    }
}
