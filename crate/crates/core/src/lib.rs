//! Confidence-driven inference: unbiased estimates and valid confidence
//! intervals from cheap surrogate annotations (with verbalized confidence)
//! fused with a small, adaptively sampled set of human annotations.
//!
//! The crate is organized bottom-up:
//!
//! - [`corpus`], [`seed`] and [`error`] hold the shared data model.
//! - [`losses`] defines each estimand as an M-estimator and solves it.
//! - [`sampling`] decides which instances receive a human annotation.
//! - [`inference`] fits the fused objective and builds intervals.
//! - [`evaluation`] runs the seeded multi-trial comparison harness.

// NaN must fail validation checks, hence `!(x > 0.0)` over `x <= 0.0`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// A plan built in one piece has exactly one batch range.
#![allow(clippy::single_range_in_vec_init)]

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod losses;
pub mod sampling;
pub mod seed;
pub mod stats;

pub use corpus::{validate_corpus, Budget, Corpus, CorpusMode, Instance, Violation};
pub use error::{Error, Result};
pub use seed::RngSeed;
