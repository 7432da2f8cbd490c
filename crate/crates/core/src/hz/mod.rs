//! Hybrid zonotopes: representation, set operations and MILP-backed queries.

mod ops;
mod query;
mod sample;
mod set;

pub use ops::MAX_DENSE_ENTRIES;
pub use query::EMPTINESS_BAND;
pub use set::{Assignment, Complexity, ConstrainedZonotope, HybridZonotope, Interval, Point, SetDocument};
