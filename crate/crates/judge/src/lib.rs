//! Judging pipeline: compile a submission, run it in a sandbox on every
//! test instance, check and score the outputs, and serve the results.

pub mod artifact;
pub mod compile;
pub mod engine;
pub mod package;
pub mod pipeline;
pub mod plot;
pub mod replay;
pub mod sandbox;
pub mod service;
pub mod toolchain;

pub use artifact::Artifact;
