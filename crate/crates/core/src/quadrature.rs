//! One-dimensional quadrature: adaptive Gauss–Kronrod and Gauss–Legendre rules.

use crate::scalar::Real;

/// A quadrature value together with an error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
}

impl<T: Real> Estimate<T> {
    pub fn zero() -> Self {
        Self {
            value: T::zero(),
            error: T::zero(),
        }
    }
}

impl<T: Real> std::ops::Add for Estimate<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Single 15-point Kronrod panel with the embedded 7-point Gauss rule.
/// The error estimate is the raw Kronrod/Gauss difference.
pub fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Estimate<T> {
    let half = T::lit(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let fc = f(c);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let s = f(c - dx) + f(c + dx);
        kron = kron + T::lit(WGK[j]) * s;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * s;
        }
    }
    Estimate {
        value: kron * h,
        error: ((kron - gauss) * h).abs(),
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Panels with the largest error are bisected until the summed error drops
/// below `max(abs_tol, rel_tol * |value|)` or `max_panels` is reached.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
    max_panels: usize,
) -> Estimate<T> {
    if a == b {
        return Estimate::zero();
    }
    let mut panels: Vec<(T, T, Estimate<T>)> = vec![(a, b, gk15(&mut f, a, b))];
    loop {
        let total = panels
            .iter()
            .fold(Estimate::zero(), |acc, p| acc + p.2);
        let target = abs_tol.max(rel_tol * total.value.abs());
        if total.error <= target || panels.len() >= max_panels {
            return total;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, p)| {
                if p.2.error > be {
                    (i, p.2.error)
                } else {
                    (bi, be)
                }
            });
        let (lo, hi, _) = panels.swap_remove(worst);
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            return total;
        }
        panels.push((lo, mid, gk15(&mut f, lo, mid)));
        panels.push((mid, hi, gk15(&mut f, mid, hi)));
    }
}

/// Composite Kronrod rule on `n` equal panels (no adaptivity).
pub fn composite<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, n: usize) -> Estimate<T> {
    let n = n.max(1);
    let h = (b - a) / T::of(n);
    (0..n).fold(Estimate::zero(), |acc, i| {
        let lo = a + h * T::of(i);
        acc + gk15(&mut f, lo, lo + h)
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (
        nodes.into_iter().map(T::lit).collect(),
        weights.into_iter().map(T::lit).collect(),
    )
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed Gauss–Legendre rule mapped onto an interval.
#[derive(Clone, Debug)]
pub struct GaussRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussRule<T> {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = T::lit(0.5);
        let c = half * (a + b);
        let h = half * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussRule::<f64>::new(6);
        // degree 11 is the highest exact degree for 6 nodes
        let v = rule.integrate(0.0, 2.0, |x| x.powi(11));
        assert!((v - 2f64.powi(12) / 12.0).abs() < 1e-10);
        let (_, w) = gauss_legendre::<f64>(17);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, 1e-10, 1e-12, 2000);
        assert!((est.value - 2.0).abs() < 1e-8, "{:?}", est);
    }

    #[test]
    fn adaptive_works_in_single_precision() {
        let est = integrate(|x: f32| x.sin(), 0.0, std::f32::consts::PI, 1e-6, 1e-6, 200);
        assert!((est.value - 2.0).abs() < 1e-5);
    }

    #[test]
    fn error_estimate_dominates_actual_error() {
        let est = composite(|x: f64| (3.0 * x).exp(), 0.0, 2.0, 1);
        let exact = ((6.0f64).exp() - 1.0) / 3.0;
        assert!((est.value - exact).abs() <= est.error);
    }
}
