//! Discrete solutions on tensor grids.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Grid2, MatrixField, Region, ScalarField, VectorField, M2, P2};

/// Role of a grid node in a discrete problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NodeTag {
    Outside,
    Interior,
    /// Curved part carrying Dirichlet data.
    Dirichlet,
    /// Flat part carrying `D_n u = 0`.
    Neumann,
    /// Natural boundary of a divergence-form problem.
    Conormal,
}

#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub u: ScalarField,
    pub tags: Vec<NodeTag>,
    /// Relative residual of the linear system.
    pub residual: f64,
    pub log: Vec<String>,
}

#[derive(Serialize)]
struct CsvRow {
    x: f64,
    y: f64,
    u: f64,
    ux: Option<f64>,
    uy: Option<f64>,
    uxx: Option<f64>,
    uxy: Option<f64>,
    uyy: Option<f64>,
}

impl DiscreteSolution {
    pub fn grid(&self) -> Grid2 {
        self.u.grid
    }

    pub fn h(&self) -> f64 {
        self.u.grid.h[0].max(self.u.grid.h[1])
    }

    pub fn eval(&self, p: P2) -> Option<f64> {
        self.u.eval(p)
    }

    pub fn gradient(&self) -> VectorField {
        self.u.gradient()
    }

    pub fn hessian(&self) -> MatrixField {
        self.u.hessian()
    }

    pub fn count(&self, tag: NodeTag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }

    /// Nodal values inside `region`.
    pub fn values_in<'a>(&'a self, region: &'a dyn Region) -> impl Iterator<Item = (P2, f64)> + 'a {
        self.u.valid_nodes().filter(move |(_, _, p, _)| region.contains(*p)).map(|(_, _, p, v)| (p, v))
    }

    /// Node table `x, y, u, ux, uy, uxx, uxy, uyy`; missing derivatives are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let grad = self.gradient();
        let hess = self.hessian();
        let mut w = csv::Writer::from_writer(out);
        for (i, j, p, u) in self.u.valid_nodes() {
            let g = grad.valid(i, j).then(|| grad.at(i, j));
            let h: Option<M2> = hess.valid(i, j).then(|| hess.at(i, j));
            w.serialize(CsvRow {
                x: p[0],
                y: p[1],
                u,
                ux: g.map(|g| g[0]),
                uy: g.map(|g| g[1]),
                uxx: h.map(|h| h[0][0]),
                uxy: h.map(|h| h[0][1]),
                uyy: h.map(|h| h[1][1]),
            })
            .map_err(|e| Error::Numeric(format!("csv: {e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `(⨍|v|^p)^{1/p}` by direct quadrature over equal-weight samples.
pub fn p_mean(values: impl IntoIterator<Item = f64>, p: f64) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v.abs().powf(p);
        n += 1;
    }
    (n > 0).then(|| (sum / n as f64).powf(1.0 / p))
}
