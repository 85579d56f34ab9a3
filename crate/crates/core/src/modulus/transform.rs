//! The transform chain `ω ↦ (ω̃, ω♯, ω̂, ω*)` of the excess-decay iteration.
//!
//! * `ω̃(t) = Σ_{i≥1} κ^{iβ} ω(min(κ^{-i}t, 1))`
//! * `ω♯(t) = sup_{s∈[t,1]} (t/s)^β ω̃(s)`
//! * `ω̂(t) = ω̃(t) + ω̃(4t) + ω♯(4t)` for `t ≤ 1/4`
//! * `ω*(t) = ω̂(t) + ∫₀ᵗ ω̃(s)/s ds + ω̃(4t) + ∫₀^{4t} ω̃(s)/s ds` for `t ≤ 1/4`
//!
//! The input is read on `[0, 1]`; a shorter domain is continued by its right-end
//! value. Series tails are summed in closed form, so [`TransformChain`] evaluates
//! every transform pointwise without truncation error beyond quadrature.

use super::{dini_integral, log_grid, Modulus};
use crate::error::{Error, Result};
use crate::quadrature::{gk15, integrate};
use crate::scalar::Real;

/// Cells per decade of the cumulative Dini table and of the sup search grid.
const PER_DECADE: usize = 64;
/// Decades covered by the precomputed tables below `t = 1`.
const DECADES: usize = 20;

#[derive(Clone, Debug)]
pub struct TransformChain<T> {
    base: Modulus<T>,
    kappa: T,
    beta: T,
    /// `κ^β`.
    ratio: T,
    /// `ω(1)`.
    top: T,
    /// `∫₀¹ ω(s)/s ds`, `None` when divergent.
    dini_total: Option<T>,
    /// `tail[k] = ∫_{y_k}^1 ω(s)/s ds` at `y_k = e^{-k·h}`.
    tail: Vec<T>,
    log_step: T,
    /// Sup-search grid for `ω♯`: abscissae, `s^{-β}ω̃(s)`, suffix argmax.
    sharp_s: Vec<T>,
    sharp_h: Vec<T>,
    sharp_arg: Vec<usize>,
}

impl<T: Real> TransformChain<T> {
    pub fn new(base: &Modulus<T>, kappa: T, beta: T) -> Result<Self> {
        if !(kappa > T::zero() && kappa < T::lit(0.5)) {
            return Err(Error::param(format!("kappa = {kappa} outside (0, 1/2)")));
        }
        if !(beta > T::zero() && beta < T::one()) {
            return Err(Error::param(format!("beta = {beta} outside (0, 1)")));
        }
        let upper = base.right_end().min(T::one());
        let head = dini_integral(base, T::zero(), upper)?.value();
        let dini_total = head.map(|h| {
            // Constant continuation on [a, 1].
            h + base.eval(upper) * (T::one() / upper).ln()
        });
        let log_step = T::LN_10() / T::of(PER_DECADE);
        let cells = PER_DECADE * DECADES;
        let mut tail = Vec::with_capacity(cells + 1);
        tail.push(T::zero());
        let mut acc = T::zero();
        let tol = T::epsilon() * T::lit(64.0);
        for k in 0..cells {
            let (s0, s1) = (log_step * T::of(k), log_step * T::of(k + 1));
            acc = acc + integrate(|s| base.eval_at_log(s), s0, s1, T::min_positive_value(), tol, 64).value;
            tail.push(acc);
        }
        let mut chain = Self {
            base: base.clone(),
            kappa,
            beta,
            ratio: kappa.powf(beta),
            top: base.eval(T::one()),
            dini_total,
            tail,
            log_step,
            sharp_s: Vec::new(),
            sharp_h: Vec::new(),
            sharp_arg: Vec::new(),
        };
        chain.build_sharp_grid();
        Ok(chain)
    }

    pub fn base(&self) -> &Modulus<T> {
        &self.base
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Whether the input is Dini, i.e. whether `ω*` is finite.
    pub fn is_dini(&self) -> bool {
        self.dini_total.is_some()
    }

    /// Largest `i` with `κ^{-i} t ≤ 1`.
    fn inner_terms(&self, t: T) -> usize {
        if t >= T::one() {
            return 0;
        }
        let q = (T::one() / t).ln() / (T::one() / self.kappa).ln();
        let mut m = q.floor().to_usize().unwrap_or(usize::MAX / 2);
        // Guard against round-off at the boundary κ^{-m} t ≈ 1.
        while m > 0 && t / self.kappa.powi(m as i32) > T::one() + T::epsilon() * T::lit(8.0) {
            m -= 1;
        }
        m
    }

    /// `Σ_{i≥m} r^i` and `Σ_{i≥m} i r^i`.
    fn geometric(&self, m: usize) -> (T, T) {
        let r = self.ratio;
        let rm = r.powi(m as i32);
        let one = T::one();
        let mm = T::of(m);
        (rm / (one - r), rm * (mm * (one - r) + r) / ((one - r) * (one - r)))
    }

    pub fn tilde(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let m = self.inner_terms(t);
        let mut sum = T::zero();
        let mut scale = T::one();
        for i in 1..=m {
            scale = scale * self.ratio;
            sum = sum + scale * self.base.eval((t / self.kappa.powi(i as i32)).min(T::one()));
        }
        sum + self.top * self.geometric(m + 1).0
    }

    /// `∫₀^y ω(s)/s ds` for `y ≤ 1`, `None` if divergent.
    fn cumulative(&self, y: T) -> Option<T> {
        let total = self.dini_total?;
        if y <= T::zero() {
            return Some(T::zero());
        }
        let s = -y.ln();
        let k = (s / self.log_step).floor().to_usize().unwrap_or(usize::MAX);
        if k + 1 < self.tail.len() {
            let sk = self.log_step * T::of(k);
            let piece = gk15(&mut |u| self.base.eval_at_log(u), sk, s).value;
            Some(total - self.tail[k] - piece)
        } else {
            dini_integral(&self.base, T::zero(), y).ok()?.value()
        }
    }

    /// `∫₀^x ω̃(s)/s ds = Σ_{i≥1} κ^{iβ} D(κ^{-i}x)` where `D` integrates the
    /// continued modulus `ω(min(·, 1))`.
    pub fn tilde_integral(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        let Some(total) = self.dini_total else {
            return T::infinity();
        };
        let m = self.inner_terms(x);
        let mut sum = T::zero();
        let mut scale = T::one();
        for i in 1..=m {
            scale = scale * self.ratio;
            let y = (x / self.kappa.powi(i as i32)).min(T::one());
            sum = sum + scale * self.cumulative(y).unwrap_or(T::infinity());
        }
        // For i > m: D = total + ω(1)·(ln x + i·ln(1/κ)).
        let (g0, g1) = self.geometric(m + 1);
        let a = total + self.top * x.ln();
        let b = self.top * (T::one() / self.kappa).ln();
        sum + a * g0 + b * g1
    }

    fn build_sharp_grid(&mut self) {
        let lo = T::lit(10f64.powi(-(DECADES as i32)));
        let mut s = log_grid(lo, T::one(), PER_DECADE * DECADES + 1);
        // Kinks of ω̃ sit at powers of κ.
        let mut p = T::one();
        while p > lo {
            s.push(p);
            p = p * self.kappa;
        }
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s.dedup();
        let h: Vec<T> = s.iter().map(|&x| self.tilde(x) / x.powf(self.beta)).collect();
        let mut arg = vec![0; s.len()];
        let mut best = s.len() - 1;
        for k in (0..s.len()).rev() {
            if h[k] >= h[best] {
                best = k;
            }
            arg[k] = best;
        }
        self.sharp_s = s;
        self.sharp_h = h;
        self.sharp_arg = arg;
    }

    fn h(&self, s: T) -> T {
        self.tilde(s) / s.powf(self.beta)
    }

    /// `sup_{s∈[t,1]} s^{-β}ω̃(s)` by grid search with golden-section refinement.
    fn sup_h(&self, t: T) -> T {
        let mut best = self.h(t);
        let n = self.sharp_s.len();
        let k = self.sharp_s.partition_point(|&s| s <= t);
        if k >= n {
            return best;
        }
        if t < self.sharp_s[0] {
            for s in log_grid(t, self.sharp_s[0], PER_DECADE * 4) {
                best = best.max(self.h(s));
            }
        }
        let j = self.sharp_arg[k];
        best = best.max(self.sharp_h[j]);
        let lo = if j > 0 { self.sharp_s[j - 1].max(t) } else { self.sharp_s[j].max(t) };
        let hi = if j + 1 < n { self.sharp_s[j + 1] } else { self.sharp_s[j] };
        for (a, b) in [(lo, self.sharp_s[j]), (self.sharp_s[j], hi)] {
            if b > a {
                best = best.max(self.golden_max(a.ln(), b.ln()));
            }
        }
        best
    }

    fn golden_max(&self, mut a: T, mut b: T) -> T {
        let g = T::lit(0.618_033_988_749_894_8);
        let f = |u: T| self.h(u.exp());
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..60 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        fc.max(fd)
    }

    /// `ω♯(t)` for `t ∈ (0, 1]`; clamped to `ω♯(1) = ω̃(1)` beyond.
    pub fn sharp(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let t = t.min(T::one());
        t.powf(self.beta) * self.sup_h(t)
    }

    /// `ω̂(t)` for `t ∈ (0, 1/4]`; clamped beyond.
    pub fn hat(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let t = t.min(T::lit(0.25));
        let t4 = T::lit(4.0) * t;
        self.tilde(t) + self.tilde(t4) + self.sharp(t4)
    }

    /// `ω*(t)` for `t ∈ (0, 1/4]`; infinite when the input is not Dini.
    pub fn star(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let t = t.min(T::lit(0.25));
        let t4 = T::lit(4.0) * t;
        self.hat(t) + self.tilde_integral(t) + self.tilde(t4) + self.tilde_integral(t4)
    }

    /// `∫₀ˣ ω̂(s)/s ds` for `x ≤ 1/4`, infinite when the input is not Dini.
    /// The `ω♯` part is integrated numerically down to `s = 4x·e^{-700}`.
    pub fn hat_integral(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        let x = x.min(T::lit(0.25));
        let x4 = T::lit(4.0) * x;
        let top = x4.ln();
        let sharp = integrate(|u| self.sharp(u.exp()), top - T::lit(700.0), top, T::min_positive_value(), T::lit(1e-7), 80).value;
        self.tilde_integral(x) + self.tilde_integral(x4) + sharp
    }

    /// Tabulates all four transforms on `nodes` log-spaced points down to `t_min`.
    pub fn tabulate(&self, t_min: T, nodes: usize) -> Result<Transforms<T>> {
        let full = log_grid(t_min, T::one(), nodes);
        let quarter = log_grid(t_min, T::lit(0.25), nodes);
        let table = |grid: &[T], f: &dyn Fn(T) -> T| -> Result<Modulus<T>> {
            let mut acc = T::zero();
            let w = grid
                .iter()
                .map(|&t| {
                    acc = acc.max(f(t));
                    acc
                })
                .collect();
            Modulus::table(grid.to_vec(), w)
        };
        let star = if self.is_dini() { Some(table(&quarter, &|t| self.star(t))?) } else { None };
        Ok(Transforms {
            tilde: table(&full, &|t| self.tilde(t))?,
            sharp: table(&full, &|t| self.sharp(t))?,
            hat: table(&quarter, &|t| self.hat(t))?,
            star,
            dini: self.is_dini(),
        })
    }
}

/// Tabulated transforms. `star` is absent when the input fails the Dini test.
#[derive(Clone, Debug)]
pub struct Transforms<T> {
    pub tilde: Modulus<T>,
    pub sharp: Modulus<T>,
    pub hat: Modulus<T>,
    pub star: Option<Modulus<T>>,
    pub dini: bool,
}

/// Builds the chain and tabulates it on 40 points per decade down to `1e-12`.
pub fn transform_chain<T: Real>(w: &Modulus<T>, kappa: T, beta: T) -> Result<Transforms<T>> {
    if w.is_zero() {
        let z = |a: f64| Modulus::zero(T::lit(a));
        return Ok(Transforms { tilde: z(1.0), sharp: z(1.0), hat: z(0.25), star: Some(z(0.25)), dini: true });
    }
    TransformChain::new(w, kappa, beta)?.tabulate(T::lit(1e-12), 481)
}
