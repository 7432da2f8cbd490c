//! Exact reachability analysis and safety verification for linear systems
//! in feedback with ReLU networks, using hybrid zonotopes.
//!
//! The pieces, bottom up:
//!
//! * [`milp`]: bounded-variable simplex and branch-and-bound, plus encoders
//!   for set questions.
//! * [`hz`]: the [`HybridZonotope`] type, its closed operations and
//!   MILP-backed queries (emptiness, membership, bounds, sampling).
//! * [`nn`]: ReLU networks and exact layer-by-layer set propagation.
//! * [`reach`]: exact closed-loop images and horizon recursion.
//! * [`reduce`]: over-approximating complexity reduction.
//! * [`verify`]: unsafe-set avoidance checks with witnesses.
//! * [`oracle`]: brute-force references used to validate all of the above.

pub mod error;
pub mod hz;
pub mod linalg;
pub mod milp;
pub mod nn;
pub mod oracle;
pub mod reach;
pub mod reduce;
pub mod verify;

pub use error::{HzError, Result};
pub use hz::{Assignment, Complexity, ConstrainedZonotope, HybridZonotope, Interval, Point};
