//! Excess-decay measurement, iteration-inequality fits and assembled modulus bounds.

mod bound;
mod decay;
mod excess;
mod global;

pub use bound::{modulus_bound_compare, sample_pairs, AssembledRhs, BinRow, BoundAssembly, BoundConfig, BoundInputs, PairSample};
pub use decay::{choose_beta, decay_study, excess_table, fit_iteration, DecayConfig, ExcessTable, IterationFit, StepCheck, BETA_CANDIDATES};
pub use excess::{excess, excess_of_samples, excess_on, DerivativeField, ExcessMode, MIN_SAMPLES};
pub use global::{c2_global_pipeline, FitBall, GlobalConfig, GlobalReport, ModulusRow};
