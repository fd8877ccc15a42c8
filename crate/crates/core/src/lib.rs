//! Citation-percentile analytics over publication corpora.
//!
//! The crate computes exact top-k% citation classes with explicit tie
//! semantics, the percentile-rank indicators built on them (P-top-k%,
//! PP-top-k%, I3, %I3), the mean-based normalizations they are usually
//! contrasted with (RC/MNCS and refined percentile scores), and the
//! non-parametric tests used to compare subsets. A seeded synthetic
//! generator produces skewed, field-heterogeneous corpora for property
//! checks and normalization experiments.
//!
//! All aggregation is exact (integer histograms, rational credit sums), so
//! results are independent of worker count and summation order.

pub mod corpus;
pub mod decompose;
mod error;
pub mod fixtures;
pub mod indicators;
pub mod percentile;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
