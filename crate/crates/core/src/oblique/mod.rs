//! Oblique boundary data: straightening flow, envelope lemma, Neumann lift
//! and the reduction pipeline.

mod envelope;
mod field;
mod flow;
mod lift;
mod reduce;

pub use envelope::{envelope_check, EnvelopeOutcome, EnvelopeProblem, MatrixFn};
pub use field::{ObliqueField, VectorFamily};
pub use flow::{straightening_flow, FlowState, Straightening};
pub use lift::{boundary_lift, BoundaryLift, LiftReport, LiftRow};
pub use reduce::{assemble_f0_modulus, reduce_to_neumann, InputModuli, ObliqueProblem, ProvenanceEntry, ReduceConfig, ReducedProblem};
