//! Core of the judge: problem and outcome model, exact scores, per-instance
//! checks, aggregation rules and the bundled facility-location problem.
//!
//! Nothing in this crate touches processes or the filesystem, so it builds
//! for `wasm32` as well as for the judge host.

pub mod checks;
pub mod facility;
pub mod model;
pub mod score;
pub mod scoring;

pub use model::*;
pub use score::Score;
