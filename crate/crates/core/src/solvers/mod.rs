//! Desk-scale discrete solvers: bilinear elements for the conormal problem,
//! positive finite differences for the mixed nondivergence problem, the
//! reflection construction, frozen-coefficient correctors and weak-(1,1)
//! profiles.

mod coeffs;
mod conormal;
mod corrector;
mod linsys;
mod mixed;
mod reflect;
mod solution;
mod weak11;

pub use coeffs::{CoefficientField, EllipticitySummary};
pub use conormal::{solve_conormal, ConormalData, ConormalOptions};
pub use corrector::{frozen_corrector, sample_or_nearest, CorrectorData, CorrectorMode, CorrectorReport};
pub use linsys::{LinearSolution, SparseBuilder, DIRECT_LIMIT};
pub use mixed::{solve_mixed_nd, solve_nd, NdDomain};
pub use reflect::{asymmetry, flat_trace_normal_derivative, reflect_extend, reflection_study, Reflected, ReflectionRow, ReflectionStudy};
pub use solution::{p_mean, DiscreteSolution, NodeTag};
pub use weak11::{weak11_profile, AnnulusRow, Weak11Case, Weak11Profile, Weak11Row};
