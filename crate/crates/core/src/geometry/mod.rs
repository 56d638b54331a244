//! Explicit-atlas manifolds of dimension one and two, vector fields and flows.

mod chart;
mod field;
mod manifold;

pub use chart::Chart;
pub use field::{FieldKind, VectorField, FLOW_TOL};
pub use manifold::{Manifold, Shape};
