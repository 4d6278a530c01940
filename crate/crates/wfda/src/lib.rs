//! Weighted Fisher discriminant analysis in the input and feature spaces.
//!
//! Fisher discriminant analysis (FDA) treats every pair of classes alike; the
//! weighted variants here multiply each class-pair term of the between-class
//! scatter by a weight. Manual schemes (APAC, powered distance, confusion,
//! k-nearest classes, cosine) and an automatic scheme (alternating
//! optimization with an ℓ0 sparsity budget) are provided, all available both
//! in the input space and, through kernels, in the feature space.
//!
//! The `examples/` directory has one runnable example per capability; the
//! `wfda` binary wires ingestion, fitting, evaluation, and exports into a
//! small batch CLI.

pub mod autoweight;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod fda;
pub mod kfda;
pub mod linalg;
pub mod pgm;
pub mod scatter;
pub mod weighting;

pub use error::{Error, Result};
