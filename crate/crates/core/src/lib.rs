//! Numerical toolkit for boundary regularity of elliptic equations whose
//! coefficients have Dini mean oscillation.
//!
//! The scalar-generic kernels (quadrature, simplex search, RK4, moduli and
//! their transforms, the ODE envelope check) take any [`Real`]; grid fields,
//! geometry, solvers and the harness work in `f64`.

pub mod error;
pub mod fd;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod modulus;
pub mod oblique;
pub mod ode;
pub mod optimize;
pub mod quadrature;
pub mod scalar;
pub mod scenario;
pub mod solvers;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Modulus64 = modulus::Modulus<f64>;
pub type Modulus32 = modulus::Modulus<f32>;
pub type TransformChain64 = modulus::TransformChain<f64>;
pub type TransformChain32 = modulus::TransformChain<f32>;
