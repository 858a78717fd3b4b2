//! Event-concept toolkit: discovers event-specific visual concepts from
//! noisy tag corpora and embedding neighborhoods, trains a bank of
//! per-concept linear classifiers over precomputed image features, and uses
//! concatenated concept scores as a compact representation for recognizing
//! events from very few labeled examples.
//!
//! Pipeline stages, each its own module:
//!
//! 1. [`corpus_io`] loads embeddings, tag corpora, n-gram counts,
//!    visual-representativeness tables, feature matrices and image
//!    manifests, and persists trained banks.
//! 2. [`segmentation`] splits tags into stickiness-maximal segments and
//!    ranks them corpus-wide.
//! 3. [`concept_discovery`] merges top segments with embedding nearest
//!    neighbors into the deduplicated concept pool.
//! 4. [`concept_clustering`] groups correlated concepts with mini-batch
//!    k-means and materializes per-concept training manifests whose
//!    negatives exclude cluster-mates' images.
//! 5. [`linear_models`] trains L2-regularized logistic regression and
//!    linear SVMs with a deterministic monotone solver.
//! 6. [`concept_bank`] trains one classifier per concept and converts
//!    feature vectors into concept-score vectors.
//! 7. [`eval_harness`] runs the one-shot and split protocols and emits
//!    per-class and overall accuracy reports.

pub mod concept_bank;
pub mod concept_clustering;
pub mod concept_discovery;
pub mod corpus_io;
pub mod error;
pub mod eval_harness;
pub mod linear_models;
pub mod segmentation;
pub mod seeding;
pub mod text;

pub use error::{Error, Result};
