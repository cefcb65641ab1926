//! Probe-based evaluation of fixed-dimension embeddings.
//!
//! Embeddings are scored on informativeness, parameter- and
//! representation-equivariance, invariance and disentanglement by applying
//! parametric data-space transformations and training shallow probes.

pub mod axes;
pub mod data;
pub mod error;
pub mod extractors;
pub mod fixtures;
pub mod numerics;
pub mod runner;
pub mod seed;
pub mod transforms;

pub use error::{Error, Result};
