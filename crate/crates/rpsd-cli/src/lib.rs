//! Experiment runner and plotting around the `rpsd` solvers: seeded batch
//! runs over (algorithm, seed) pairs, CSV metrics, a JSON manifest, and
//! static SVG plots of the three comparison criteria.

pub mod config;
pub mod error;
pub mod experiment;
pub mod plot;
