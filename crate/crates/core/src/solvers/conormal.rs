//! Bilinear finite elements for
//! `D_i(a^{ij}D_ju + a^iu) + b^iD_iu + cu = div g⃗ + f` with the conormal
//! condition `(A∇u + a⃗u)·ν + a⁰u = g⃗·ν + g⁰`.
//!
//! The discrete domain is the union of grid cells whose four corners lie in
//! the region; its boundary carries the natural condition.

use super::coeffs::CoefficientField;
use super::linsys::SparseBuilder;
use super::solution::{DiscreteSolution, NodeTag};
use crate::error::{Error, Result};
use crate::field::{Grid2, Region, ScalarField, ScalarFn, VectorFn, P2};

#[derive(Clone, Default)]
pub struct ConormalData {
    pub g: Option<VectorFn>,
    pub g0: Option<ScalarFn>,
    pub f: Option<ScalarFn>,
}

#[derive(Clone, Copy, Debug)]
pub struct ConormalOptions {
    /// Fix the free constant of a pure conormal problem by a zero-mean constraint.
    pub pin_mean: bool,
}

impl Default for ConormalOptions {
    fn default() -> Self {
        Self { pin_mean: true }
    }
}

const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Active cells and the unknown numbering of their corners.
struct Mesh {
    grid: Grid2,
    active: Vec<bool>,
    index: Vec<Option<usize>>,
    n: usize,
}

impl Mesh {
    fn new(grid: Grid2, region: &dyn Region) -> Self {
        let inside: Vec<bool> = grid.nodes().map(|(_, _, p)| region.contains(p)).collect();
        let (cx, cy) = (grid.n[0] - 1, grid.n[1] - 1);
        let mut active = vec![false; cx * cy];
        let mut used = vec![false; grid.len()];
        for j in 0..cy {
            for i in 0..cx {
                let corners = [grid.index(i, j), grid.index(i + 1, j), grid.index(i, j + 1), grid.index(i + 1, j + 1)];
                if corners.iter().all(|&k| inside[k]) {
                    active[j * cx + i] = true;
                    for k in corners {
                        used[k] = true;
                    }
                }
            }
        }
        let mut n = 0;
        let index = used
            .iter()
            .map(|&u| {
                u.then(|| {
                    n += 1;
                    n - 1
                })
            })
            .collect();
        Self { grid, active, index, n }
    }

    fn cell_active(&self, i: isize, j: isize) -> bool {
        let (cx, cy) = (self.grid.n[0] as isize - 1, self.grid.n[1] as isize - 1);
        i >= 0 && j >= 0 && i < cx && j < cy && self.active[(j * cx + i) as usize]
    }
}

/// Bilinear shape functions on a cell with local coordinates `(s, t)`:
/// corners ordered (0,0), (1,0), (0,1), (1,1).
fn shape(s: f64, t: f64, h: [f64; 2]) -> ([f64; 4], [P2; 4]) {
    let n = [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t];
    let g = [
        [-(1.0 - t) / h[0], -(1.0 - s) / h[1]],
        [(1.0 - t) / h[0], -s / h[1]],
        [-t / h[0], (1.0 - s) / h[1]],
        [t / h[0], s / h[1]],
    ];
    (n, g)
}

pub fn solve_conormal(
    coeffs: &CoefficientField,
    data: &ConormalData,
    region: &dyn Region,
    grid: Grid2,
    opts: ConormalOptions,
) -> Result<DiscreteSolution> {
    let mesh = Mesh::new(grid, region);
    if mesh.n == 0 {
        return Err(Error::Resolution("no grid cell lies inside the region".into()));
    }
    let singular = coeffs.principal_only();
    if singular && !opts.pin_mean {
        return Err(Error::Singular("pure conormal problem without lower-order terms needs mean pinning".into()));
    }
    let pinned = singular && opts.pin_mean;
    let mut k = SparseBuilder::new(mesh.n);
    let mut rhs = vec![0.0; mesh.n];
    let mut mass = vec![0.0; mesh.n];
    let h = grid.h;
    let (cx, cy) = (grid.n[0] - 1, grid.n[1] - 1);
    let area = 0.25 * h[0] * h[1];
    let mut boundary_edges = 0usize;
    for j in 0..cy {
        for i in 0..cx {
            if !mesh.active[j * cx + i] {
                continue;
            }
            let nodes = [grid.index(i, j), grid.index(i + 1, j), grid.index(i, j + 1), grid.index(i + 1, j + 1)];
            let dof: Vec<usize> = nodes.iter().map(|&n| mesh.index[n].unwrap()).collect();
            let origin = grid.node(i, j);
            let mut ke = [[0.0; 4]; 4];
            let mut fe = [0.0; 4];
            for &t in &GAUSS {
                for &s in &GAUSS {
                    let p = [origin[0] + s * h[0], origin[1] + t * h[1]];
                    let (n, g) = shape(s, t, h);
                    let a = coeffs.a_at(p);
                    let av = coeffs.a_vec_at(p);
                    let b = coeffs.b_at(p);
                    let c = coeffs.c_at(p);
                    let gv = data.g.as_ref().map_or([0.0; 2], |f| f(p));
                    let fv = data.f.as_ref().map_or(0.0, |f| f(p));
                    for r in 0..4 {
                        for q in 0..4 {
                            let agq = [a[0][0] * g[q][0] + a[0][1] * g[q][1], a[1][0] * g[q][0] + a[1][1] * g[q][1]];
                            let flux = (agq[0] + av[0] * n[q]) * g[r][0] + (agq[1] + av[1] * n[q]) * g[r][1];
                            let lower = (b[0] * g[q][0] + b[1] * g[q][1] + c * n[q]) * n[r];
                            ke[r][q] += area * (flux - lower);
                        }
                        fe[r] += area * (gv[0] * g[r][0] + gv[1] * g[r][1] - fv * n[r]);
                        mass[dof[r]] += area * n[r];
                    }
                }
            }
            for r in 0..4 {
                for q in 0..4 {
                    k.add(dof[r], dof[q], ke[r][q]);
                }
                rhs[dof[r]] += fe[r];
            }
            // Edges on the discrete boundary: (local corner pair, neighbour cell).
            let edges = [((0, 1), (0, -1)), ((2, 3), (0, 1)), ((0, 2), (-1, 0)), ((1, 3), (1, 0))];
            for ((ea, eb), (di, dj)) in edges {
                if mesh.cell_active(i as isize + di, j as isize + dj) {
                    continue;
                }
                boundary_edges += 1;
                let (pa, pb) = (grid.node(i + (ea & 1), j + (ea >> 1)), grid.node(i + (eb & 1), j + (eb >> 1)));
                let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
                for &s in &GAUSS {
                    let p = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                    let n = [1.0 - s, s];
                    let a0 = coeffs.a0_at(p);
                    let g0 = data.g0.as_ref().map_or(0.0, |f| f(p));
                    let loc = [dof[ea], dof[eb]];
                    for r in 0..2 {
                        for q in 0..2 {
                            k.add(loc[r], loc[q], 0.5 * len * a0 * n[q] * n[r]);
                        }
                        rhs[loc[r]] += 0.5 * len * g0 * n[r];
                    }
                }
            }
        }
    }
    // Columns of the stiffness matrix sum to zero, so the multiplier of the mean
    // constraint is explicit. After projecting it out the system is compatible and a
    // diagonal shift at one node fixes the constant without changing the solution
    // of the remaining equations.
    let mut multiplier = 0.0;
    if pinned {
        let total: f64 = mass.iter().sum();
        multiplier = rhs.iter().sum::<f64>() / total;
        for (r, m) in rhs.iter_mut().zip(&mass) {
            *r -= multiplier * m;
        }
        let first = mesh.index.iter().position(Option::is_some).expect("nonempty mesh");
        let a = coeffs.a_at(grid.node(first % grid.n[0], first / grid.n[0]));
        k.add(0, 0, 0.5 * (a[0][0] + a[1][1]));
    }
    let mut sol = k.solve(&rhs)?;
    if pinned {
        let total: f64 = mass.iter().sum();
        let mean = sol.x.iter().zip(&mass).map(|(x, m)| x * m).sum::<f64>() / total;
        for x in sol.x.iter_mut() {
            *x -= mean;
        }
    }
    let mut u = ScalarField { grid, values: vec![0.0; grid.len()], mask: vec![false; grid.len()] };
    let mut tags = vec![NodeTag::Outside; grid.len()];
    for (node, idx) in mesh.index.iter().enumerate() {
        if let Some(d) = idx {
            u.values[node] = sol.x[*d];
            u.mask[node] = true;
            tags[node] = NodeTag::Interior;
        }
    }
    for j in 0..grid.n[1] {
        for i in 0..grid.n[0] {
            let k = grid.index(i, j);
            if !u.mask[k] {
                continue;
            }
            let (i, j) = (i as isize, j as isize);
            let all = [(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)].iter().all(|&(a, b)| mesh.cell_active(a, b));
            if !all {
                tags[k] = NodeTag::Conormal;
            }
        }
    }
    let mut log = vec![format!("{} unknowns, {} boundary edges", mesh.n, boundary_edges)];
    if pinned {
        log.push(format!("mean pinned; compatibility multiplier {multiplier:.3e}"));
    }
    Ok(DiscreteSolution { u, tags, residual: sol.residual, log })
}
