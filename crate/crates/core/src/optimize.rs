//! Derivative-free minimization in small dimension.
//!
//! Nelder–Mead from several seeds, best run kept, then a coordinate-wise
//! golden-section polish. Deterministic for a fixed seed order.

use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct SimplexConfig<T> {
    /// Initial edge length relative to the seed scale (absolute if the seed is zero).
    pub initial_step: T,
    pub max_evaluations: usize,
    /// Stop when the spread of simplex values drops below this.
    pub f_tol: T,
    /// Stop when the simplex diameter drops below this.
    pub x_tol: T,
    /// Golden-section sweeps over the coordinates after the simplex search.
    pub polish_sweeps: usize,
}

impl<T: Real> Default for SimplexConfig<T> {
    fn default() -> Self {
        Self {
            initial_step: T::lit(0.1),
            max_evaluations: 4000,
            f_tol: T::lit(1e-13),
            x_tol: T::lit(1e-11),
            polish_sweeps: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub evaluations: usize,
}

/// Minimizes `f` starting from each seed; returns the best point found.
pub fn minimize<T: Real, F: FnMut(&[T]) -> T>(
    mut f: F,
    seeds: &[Vec<T>],
    scale: T,
    config: &SimplexConfig<T>,
) -> Minimum<T> {
    assert!(!seeds.is_empty(), "at least one seed is required");
    let mut best: Option<Minimum<T>> = None;
    for seed in seeds {
        let run = nelder_mead(&mut f, seed, scale, config);
        if best.as_ref().map_or(true, |b| run.value < b.value) {
            best = Some(run);
        }
    }
    let mut best = best.unwrap();
    for _ in 0..config.polish_sweeps {
        polish(&mut f, &mut best, scale, config);
    }
    best
}

fn nelder_mead<T: Real, F: FnMut(&[T]) -> T>(
    f: &mut F,
    seed: &[T],
    scale: T,
    config: &SimplexConfig<T>,
) -> Minimum<T> {
    let n = seed.len();
    let step = config.initial_step * scale.max(T::min_positive_value());
    let mut evals = 0usize;
    let mut eval = |x: &[T], evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    let v0 = eval(seed, &mut evals);
    simplex.push((seed.to_vec(), v0));
    for i in 0..n {
        let mut p = seed.to_vec();
        p[i] = p[i] + step;
        let v = eval(&p, &mut evals);
        simplex.push((p, v));
    }
    if n == 0 {
        return Minimum { x: vec![], value: v0, evaluations: evals };
    }
    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    while evals < config.max_evaluations {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = simplex[n].1 - simplex[0].1;
        let diam = simplex[1..]
            .iter()
            .map(|(p, _)| dist(p, &simplex[0].0))
            .fold(T::zero(), T::max);
        if spread.abs() <= config.f_tol * (T::one() + simplex[0].1.abs()) && diam <= config.x_tol * scale.max(T::one())
            || diam <= T::epsilon() * scale.max(T::one())
        {
            break;
        }
        let mut centroid = vec![T::zero(); n];
        for (p, _) in &simplex[..n] {
            for (c, &x) in centroid.iter_mut().zip(p) {
                *c = *c + x / T::of(n);
            }
        }
        let worst = simplex[n].clone();
        let along = |t: T| -> Vec<T> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let p: Vec<T> = x0
                        .iter()
                        .zip(&item.0)
                        .map(|(&a, &b)| a + sigma * (b - a))
                        .collect();
                    let v = eval(&p, &mut evals);
                    *item = (p, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evaluations: evals }
}

fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

/// Golden-section line search along each coordinate in turn.
fn polish<T: Real, F: FnMut(&[T]) -> T>(
    f: &mut F,
    best: &mut Minimum<T>,
    scale: T,
    config: &SimplexConfig<T>,
) {
    let width = config.initial_step * scale.max(T::min_positive_value());
    for i in 0..best.x.len() {
        let center = best.x[i];
        let mut probe = best.x.clone();
        let mut line = |t: T, evals: &mut usize| {
            probe[i] = t;
            *evals += 1;
            f(&probe)
        };
        let (t, v) = golden_section(&mut line, center - width, center + width, config.x_tol * scale.max(T::one()), &mut best.evaluations);
        if v < best.value {
            best.x[i] = t;
            best.value = v;
        }
    }
}

/// Golden-section search for a minimum of a unimodal function on `[a, b]`.
pub fn golden_section<T: Real, F: FnMut(T, &mut usize) -> T>(
    f: &mut F,
    mut a: T,
    mut b: T,
    tol: T,
    evals: &mut usize,
) -> (T, T) {
    let invphi = T::lit(0.618_033_988_749_894_8);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c, evals);
    let mut fd = f(d, evals);
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 200 {
        iters += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c, evals);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d, evals);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
