//! Continual-learning training strategies and benchmark primitives for
//! domain-incremental classification streams.
//!
//! The crate is organized around five building blocks:
//!
//! - [`nn`]: deterministic CPU tensor numerics — layer forward/backward
//!   passes, softmax cross-entropy, and plain SGD with decoupled weight decay.
//! - [`model`]: a two-part classifier (feature extractor plus a single linear
//!   softmax head) with snapshotting, head freezing, and a binary checkpoint
//!   format.
//! - [`data`]: experience streams — a synthetic domain-shift generator,
//!   folder/CSV ingestion, stratified splits, and a stream cache format.
//! - [`strategies`]: the three training protocols over a stream of
//!   experiences: naive finetuning, feature-anchored continual finetuning
//!   (frozen head + embedding-drift penalty), and joint retraining.
//! - [`metrics`]: macro one-vs-rest AUROC, macro F1, per-checkpoint
//!   evaluation matrices, union-test trend series, and joint-comparison
//!   deltas.
//!
//! Everything is deterministic: a single root seed fans out into named
//! sub-streams (see [`seed`]), and all reductions run in a fixed order.

pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod nn;
pub(crate) mod rng;
pub mod seed;
pub mod strategies;

pub use error::{Error, Result};
