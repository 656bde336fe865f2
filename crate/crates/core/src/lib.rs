//! Gradient-based competitive learning with a vanilla competitive layer (VCL),
//! whose weights are the prototypes, and a dual competitive layer (DCL),
//! trained on the transposed data so that its outputs are the prototypes.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: SVD, pseudoinverse, Gram matrix, distance matrices.
//! - [`datasets`]: seeded synthetic generators, standardization, CSV.
//! - [`layers`]: VCL, DCL and the deep dual stack.
//! - [`loss`]: Voronoi assignment, Hebbian edges, loss and gradients.
//! - [`trainer`]: full-batch training, traces, experiments, grid search.
//! - [`bundle`]: on-disk run bundles.
//! - [`analysis`]: gradient-flow predictions and subspace checks.

pub mod analysis;
pub mod bundle;
pub mod datasets;
pub mod error;
pub mod layers;
pub mod linalg;
pub mod loss;
pub mod trainer;

pub use error::{Error, Result};
pub use layers::{Model, ModelKind};
pub use linalg::{DataMatrix, PrototypeSet};
