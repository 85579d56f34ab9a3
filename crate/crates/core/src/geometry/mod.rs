//! Graph domains, regularized distance, Dini extension and flattening maps.

mod diffeo;
mod distance;
mod domain;
mod extension;
mod flatten;
mod mollifier;

pub use diffeo::{round_trip_error, solve_monotone, DiffeoMap, MapSample};
pub use distance::{DerivativeReport, DerivativeRow, FixedPoint, RegularizedDistance};
pub use domain::{BoundaryShape, GraphDomain, GraphPatch};
pub use extension::{DiniExtension, ExtensionReport, ExtensionRow};
pub use flatten::{
    flatten_by_distance, h_field_modulus_check, FlatData, FlatteningMap, Flattened, HFieldCheck, HFieldRow,
};
pub use mollifier::{Mollifier, Profile};
