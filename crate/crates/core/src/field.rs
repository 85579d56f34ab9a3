//! Grid-sampled fields and planar regions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub type P2 = [f64; 2];
pub type M2 = [[f64; 2]; 2];

/// Shared point functions used for coefficients and data.
pub type ScalarFn = Arc<dyn Fn(P2) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(P2) -> P2 + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(P2) -> M2 + Send + Sync>;

#[inline]
pub fn norm(p: P2) -> f64 {
    p[0].hypot(p[1])
}

#[inline]
pub fn dist(p: P2, q: P2) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Frobenius norm.
#[inline]
pub fn frob(m: &M2) -> f64 {
    (m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2)).sqrt()
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn sym_eigenvalues(m: &M2) -> (f64, f64) {
    let a = m[0][0];
    let d = m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d).powi(2) + b * b).sqrt();
    (mid - rad, mid + rad)
}

/// Uniform tensor grid of `n[0] × n[1]` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub origin: P2,
    pub h: [f64; 2],
    pub n: [usize; 2],
}

impl Grid2 {
    /// Grid on `[lo, hi]` with `cells` intervals per axis.
    pub fn new(lo: P2, hi: P2, cells: [usize; 2]) -> Self {
        Self {
            origin: lo,
            h: [(hi[0] - lo[0]) / cells[0] as f64, (hi[1] - lo[1]) / cells[1] as f64],
            n: [cells[0] + 1, cells[1] + 1],
        }
    }

    pub fn square(lo: P2, hi: P2, cells: usize) -> Self {
        Self::new(lo, hi, [cells, cells])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.n[0], k / self.n[0])
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> P2 {
        [self.origin[0] + self.h[0] * i as f64, self.origin[1] + self.h[1] * j as f64]
    }

    pub fn upper(&self) -> P2 {
        self.node(self.n[0] - 1, self.n[1] - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, P2)> + '_ {
        (0..self.n[1]).flat_map(move |j| (0..self.n[0]).map(move |i| (i, j, self.node(i, j))))
    }

    /// Cell containing `p` and local coordinates in `[0, 1]²`.
    pub fn locate(&self, p: P2) -> Option<(usize, usize, f64, f64)> {
        let mut out = [(0usize, 0f64); 2];
        for d in 0..2 {
            let s = (p[d] - self.origin[d]) / self.h[d];
            let cells = (self.n[d] - 1) as f64;
            if !(s >= -1e-9 && s <= cells + 1e-9) {
                return None;
            }
            let s = s.clamp(0.0, cells);
            let i = (s.floor() as usize).min(self.n[d] - 2);
            out[d] = (i, s - i as f64);
        }
        Some((out[0].0, out[1].0, out[0].1, out[1].1))
    }

    /// Index of the nearest node.
    pub fn nearest(&self, p: P2) -> (usize, usize) {
        let f = |d: usize| {
            let s = ((p[d] - self.origin[d]) / self.h[d]).round();
            s.clamp(0.0, (self.n[d] - 1) as f64) as usize
        };
        (f(0), f(1))
    }
}

/// Values stored at grid nodes.
pub trait NodeValue: Copy + Default + Send + Sync {
    fn axpy(self, a: f64, x: Self) -> Self;
}

impl NodeValue for f64 {
    #[inline]
    fn axpy(self, a: f64, x: Self) -> Self {
        self + a * x
    }
}

impl NodeValue for P2 {
    #[inline]
    fn axpy(self, a: f64, x: Self) -> Self {
        [self[0] + a * x[0], self[1] + a * x[1]]
    }
}

impl NodeValue for M2 {
    #[inline]
    fn axpy(self, a: f64, x: Self) -> Self {
        [self[0].axpy(a, x[0]), self[1].axpy(a, x[1])]
    }
}

/// Grid-sampled field with a validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<V> {
    pub grid: Grid2,
    pub values: Vec<V>,
    pub mask: Vec<bool>,
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<P2>;
pub type MatrixField = Field<M2>;

impl<V: NodeValue> Field<V> {
    pub fn from_fn(grid: Grid2, mut f: impl FnMut(P2) -> V) -> Self {
        let values = grid.nodes().map(|(_, _, p)| f(p)).collect();
        Self { grid, values, mask: vec![true; grid.len()] }
    }

    /// Samples `f` on nodes inside `region`; other nodes are masked out.
    pub fn from_fn_in(grid: Grid2, region: &dyn Region, mut f: impl FnMut(P2) -> V) -> Self {
        let mut mask = Vec::with_capacity(grid.len());
        let values = grid
            .nodes()
            .map(|(_, _, p)| {
                let inside = region.contains(p);
                mask.push(inside);
                if inside {
                    f(p)
                } else {
                    V::default()
                }
            })
            .collect();
        Self { grid, values, mask }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> V {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn valid(&self, i: usize, j: usize) -> bool {
        self.mask[self.grid.index(i, j)]
    }

    /// Value at a signed node offset, if it exists and is valid.
    #[inline]
    pub fn get(&self, i: isize, j: isize) -> Option<V> {
        if i < 0 || j < 0 || i as usize >= self.grid.n[0] || j as usize >= self.grid.n[1] {
            return None;
        }
        let k = self.grid.index(i as usize, j as usize);
        self.mask[k].then(|| self.values[k])
    }

    /// Bilinear interpolation; requires the four surrounding nodes to be valid.
    pub fn eval(&self, p: P2) -> Option<V> {
        let (i, j, fx, fy) = self.grid.locate(p)?;
        let (i, j) = (i as isize, j as isize);
        let v00 = self.get(i, j)?;
        let v10 = self.get(i + 1, j)?;
        let v01 = self.get(i, j + 1)?;
        let v11 = self.get(i + 1, j + 1)?;
        Some(
            V::default()
                .axpy((1.0 - fx) * (1.0 - fy), v00)
                .axpy(fx * (1.0 - fy), v10)
                .axpy((1.0 - fx) * fy, v01)
                .axpy(fx * fy, v11),
        )
    }

    pub fn map<W: NodeValue>(&self, f: impl Fn(V) -> W) -> Field<W> {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect(), mask: self.mask.clone() }
    }

    pub fn valid_nodes(&self) -> impl Iterator<Item = (usize, usize, P2, V)> + '_ {
        self.grid
            .nodes()
            .zip(self.values.iter().zip(&self.mask))
            .filter(|(_, (_, &m))| m)
            .map(|((i, j, p), (&v, _))| (i, j, p, v))
    }

    pub fn count_valid(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

impl ScalarField {
    /// First derivative along axis `d` at a node: central when both neighbours
    /// are valid, otherwise second-order one-sided, otherwise first order.
    pub fn diff(&self, i: usize, j: usize, d: usize) -> Option<f64> {
        let (i, j) = (i as isize, j as isize);
        let step = |k: isize| if d == 0 { (i + k, j) } else { (i, j + k) };
        let at = |k: isize| {
            let (a, b) = step(k);
            self.get(a, b)
        };
        let h = self.grid.h[d];
        let c = at(0)?;
        match (at(-1), at(1)) {
            (Some(m), Some(p)) => Some((p - m) / (2.0 * h)),
            (None, Some(p)) => match at(2) {
                Some(pp) => Some((-3.0 * c + 4.0 * p - pp) / (2.0 * h)),
                None => Some((p - c) / h),
            },
            (Some(m), None) => match at(-2) {
                Some(mm) => Some((3.0 * c - 4.0 * m + mm) / (2.0 * h)),
                None => Some((c - m) / h),
            },
            (None, None) => None,
        }
    }

    pub fn gradient_at(&self, i: usize, j: usize) -> Option<P2> {
        Some([self.diff(i, j, 0)?, self.diff(i, j, 1)?])
    }

    /// Hessian at a node from central differences; `None` unless all nine
    /// stencil nodes are valid.
    pub fn hessian_at(&self, i: usize, j: usize) -> Option<M2> {
        let (i, j) = (i as isize, j as isize);
        let g = |a: isize, b: isize| self.get(i + a, j + b);
        let [hx, hy] = self.grid.h;
        let c = g(0, 0)?;
        let uxx = (g(1, 0)? - 2.0 * c + g(-1, 0)?) / (hx * hx);
        let uyy = (g(0, 1)? - 2.0 * c + g(0, -1)?) / (hy * hy);
        let uxy = (g(1, 1)? - g(1, -1)? - g(-1, 1)? + g(-1, -1)?) / (4.0 * hx * hy);
        Some([[uxx, uxy], [uxy, uyy]])
    }

    /// FD gradient field; nodes without a stencil are masked out.
    pub fn gradient(&self) -> VectorField {
        self.derived(|i, j| self.gradient_at(i, j))
    }

    pub fn hessian(&self) -> MatrixField {
        self.derived(|i, j| self.hessian_at(i, j))
    }

    fn derived<W: NodeValue>(&self, f: impl Fn(usize, usize) -> Option<W>) -> Field<W> {
        let mut mask = vec![false; self.grid.len()];
        let values = self
            .grid
            .nodes()
            .map(|(i, j, _)| {
                let k = self.grid.index(i, j);
                match self.mask[k].then(|| f(i, j)).flatten() {
                    Some(v) => {
                        mask[k] = true;
                        v
                    }
                    None => W::default(),
                }
            })
            .collect();
        Field { grid: self.grid, values, mask }
    }

    pub fn max_abs(&self) -> f64 {
        self.valid_nodes().map(|(_, _, _, v)| v.abs()).fold(0.0, f64::max)
    }
}

/// Planar region given by a membership test.
pub trait Region: Send + Sync {
    fn contains(&self, p: P2) -> bool;
    /// Axis-aligned bounding box `(lo, hi)`.
    fn bounds(&self) -> (P2, P2);

    /// Parameter `s ∈ [0, 1]` where the segment from `inside` to `outside`
    /// leaves the region, located by bisection.
    fn crossing(&self, inside: P2, outside: P2) -> f64 {
        let (mut a, mut b) = (0.0, 1.0);
        let at = |s: f64| [inside[0] + s * (outside[0] - inside[0]), inside[1] + s * (outside[1] - inside[1])];
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if self.contains(at(m)) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: P2,
    pub hi: P2,
}

impl Region for Rect {
    fn contains(&self, p: P2) -> bool {
        p[0] >= self.lo[0] && p[0] <= self.hi[0] && p[1] >= self.lo[1] && p[1] <= self.hi[1]
    }
    fn bounds(&self) -> (P2, P2) {
        (self.lo, self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: P2,
    pub radius: f64,
}

impl Region for Disk {
    fn contains(&self, p: P2) -> bool {
        dist(p, self.center) <= self.radius
    }
    fn bounds(&self) -> (P2, P2) {
        let [x, y] = self.center;
        let r = self.radius;
        ([x - r, y - r], [x + r, y + r])
    }
    fn crossing(&self, inside: P2, outside: P2) -> f64 {
        // |inside + s·d − c| = r, larger root.
        let d = [outside[0] - inside[0], outside[1] - inside[1]];
        let w = [inside[0] - self.center[0], inside[1] - self.center[1]];
        let a = d[0] * d[0] + d[1] * d[1];
        let b = 2.0 * (w[0] * d[0] + w[1] * d[1]);
        let c = w[0] * w[0] + w[1] * w[1] - self.radius * self.radius;
        ((-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a)).clamp(0.0, 1.0)
    }
}

/// `B(c, r) ∩ {y ≥ c_y}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfDisk {
    pub center: P2,
    pub radius: f64,
}

impl Region for HalfDisk {
    fn contains(&self, p: P2) -> bool {
        p[1] >= self.center[1] && dist(p, self.center) <= self.radius
    }
    fn bounds(&self) -> (P2, P2) {
        let [x, y] = self.center;
        let r = self.radius;
        ([x - r, y], [x + r, y + r])
    }
    fn crossing(&self, inside: P2, outside: P2) -> f64 {
        let disk = Disk { center: self.center, radius: self.radius }.crossing(inside, outside);
        let dy = outside[1] - inside[1];
        if dy < 0.0 {
            let flat = (self.center[1] - inside[1]) / dy;
            if (0.0..=1.0).contains(&flat) {
                return flat.min(disk);
            }
        }
        disk
    }
}

/// Half-disk `B(c, R) ∩ {y ≥ c_y}` with its two corners rounded by arcs of
/// radius `ρ` (the union of all `ρ`-disks inside the half-disk). The boundary
/// is `C^{1,1}` and contains the flat segment `|x − c_x| ≤ √((R−ρ)² − ρ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundedHalfDisk {
    pub center: P2,
    pub radius: f64,
    pub rounding: f64,
}

impl RoundedHalfDisk {
    /// The reference domain used for corrector problems: `R = 0.95`, `ρ = 0.2`,
    /// scaled by `r` and centred at `c`. It lies between the half-disks of
    /// radius `r/2` and `r`.
    pub fn reference(center: P2, r: f64) -> Self {
        Self { center, radius: 0.95 * r, rounding: 0.2 * r }
    }

    /// Half-length of the flat boundary segment.
    pub fn flat_half_width(&self) -> f64 {
        let inner = self.radius - self.rounding;
        (inner * inner - self.rounding * self.rounding).sqrt()
    }

    /// Distance from `p` (relative to the centre) to the convex core
    /// `{q : q_y ≥ ρ, |q| ≤ R − ρ}`.
    fn core_distance(&self, p: P2) -> f64 {
        let inner = self.radius - self.rounding;
        let rho = self.rounding;
        let r = norm(p);
        if p[1] >= rho && r <= inner {
            return 0.0;
        }
        let xc = self.flat_half_width();
        let seg = [p[0].clamp(-xc, xc), rho];
        let mut best = dist(p, seg);
        if r > 0.0 {
            let arc = [p[0] * inner / r, p[1] * inner / r];
            if arc[1] >= rho {
                best = best.min(dist(p, arc));
            }
        }
        best
    }
}

impl Region for RoundedHalfDisk {
    fn contains(&self, p: P2) -> bool {
        let q = [p[0] - self.center[0], p[1] - self.center[1]];
        q[1] >= 0.0 && self.core_distance(q) <= self.rounding * (1.0 + 1e-12)
    }
    fn bounds(&self) -> (P2, P2) {
        let [x, y] = self.center;
        let r = self.radius;
        ([x - r, y], [x + r, y + r])
    }
}
