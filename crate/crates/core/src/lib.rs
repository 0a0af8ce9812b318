//! Retrieval-augmented fact verification.
//!
//! A claim is verified in three steps: BM25 candidates are re-ranked by a
//! trained linear adapter over embeddings, similar labeled claims are picked
//! as demonstrations, and a language model writes a supporting and a refuting
//! argument before naming the class. The numeric modules are generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below fix the common choice.

pub mod corpus;
pub mod demos;
pub mod dense;
pub mod embedding;
pub mod metrics;
pub mod pipeline;
pub mod provider;
pub mod scalar;
pub mod sparse;
pub mod verifier;

pub use scalar::Scalar;

pub type Embedding = embedding::EmbeddingVector<f64>;
pub type Embedding32 = embedding::EmbeddingVector<f32>;
pub type Adapter = dense::AdapterParams<f64>;
pub type Adapter32 = dense::AdapterParams<f32>;
pub type Scored = sparse::ScoredDocument<f64>;
pub type Report = metrics::ClassificationReport<f64>;
