//! Randomized proximal subspace descent for composite problems
//! `min f(x) + g(x)`, with coordinate and fixed-variation subspace families
//! and identification-driven adaptive sampling.
//!
//! * [`subspace`] — covering families, random selections, averaged
//!   projections and their inverse square roots;
//! * [`prox`] — proximal operators (l1, group l1/l2, 1D total variation)
//!   and sparsity patterns;
//! * [`model`] — smooth objectives, constants, LibSVM ingestion and
//!   synthetic data;
//! * [`solver`] — plain, randomized and adaptive engines plus run metrics;
//! * [`oracle`] — independent brute-force references used by tests.

pub mod error;
pub mod model;
pub mod oracle;
pub mod prox;
pub mod solver;
pub mod subspace;

pub use error::{Error, Result};
