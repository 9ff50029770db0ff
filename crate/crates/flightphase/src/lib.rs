//! Flight-phase classification of aviation safety narratives.
//!
//! A framework-free pipeline: report ingestion (JSON/CSV exports or seeded
//! synthetic corpora), text normalization and fixed-length integer encoding,
//! two from-scratch classifiers (a simple recurrent network trained with
//! backpropagation through time and a residual dense network over mean-pooled
//! embeddings), Adam training, and multi-metric evaluation.
//!
//! Numeric code is generic over the scalar type: training defaults to `f32`,
//! gradient checking runs in `f64`. Every run is deterministic for a fixed
//! seed — a fixed-stream generator, fixed accumulation orders, and a
//! single-threaded reference path.

pub mod eval;
pub mod gradcheck;
pub mod ingest;
pub mod models;
pub mod nncore;
pub mod pipeline;
pub mod runconfig;
pub mod textproc;
mod util;

pub use util::fnv1a64;

/// Training-precision matrix.
pub type Matrix32 = nncore::Matrix<f32>;
/// Checking-precision matrix.
pub type Matrix64 = nncore::Matrix<f64>;
/// Training-precision model artifact.
pub type Artifact32 = pipeline::ModelArtifact<f32>;
/// Checking-precision model artifact.
pub type Artifact64 = pipeline::ModelArtifact<f64>;
