//! Training strategies over an experience stream.
//!
//! Three protocols share one training loop. Naive finetunes the whole
//! network on each experience in turn. LFL does the same for the first
//! experience, then for each later one snapshots the network, freezes the
//! softmax head, and adds a penalty that pulls current embeddings toward
//! the snapshot's. Joint trains a fresh network once on the union of all
//! train splits and serves as the upper baseline.
//!
//! Naive and LFL draw their shuffle order from the same per-experience seed
//! stream, so LFL with a zero penalty weight and no head freezing follows
//! Naive's parameter trajectory bit for bit.

pub mod penalty;
pub mod protocol;
pub mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use penalty::{embedding_drift, lfl_loss, DriftPenalty};
pub use protocol::{resume_protocol, run_protocol, ProtocolResult};
pub use train::{EpochLog, TrainLog};

/// Optimization settings shared by every strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    #[serde(default = "defaults::lr")]
    pub lr: f64,
    /// Weight of the embedding-drift penalty (LFL only).
    #[serde(default = "defaults::lambda_e")]
    pub lambda_e: f64,
    /// Decoupled L2 coefficient applied inside the optimizer.
    #[serde(default = "defaults::weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "defaults::epochs_per_experience")]
    pub epochs_per_experience: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn lr() -> f64 {
        0.002
    }
    pub fn lambda_e() -> f64 {
        1.0
    }
    pub fn weight_decay() -> f64 {
        1e-4
    }
    pub fn epochs_per_experience() -> usize {
        30
    }
    pub fn batch_size() -> usize {
        32
    }
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            lr: defaults::lr(),
            lambda_e: defaults::lambda_e(),
            weight_decay: defaults::weight_decay(),
            epochs_per_experience: defaults::epochs_per_experience(),
            batch_size: defaults::batch_size(),
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.lambda_e >= 0.0) || !self.lambda_e.is_finite() {
            return Err(Error::Config(format!(
                "lambda_e must be non-negative, got {}",
                self.lambda_e
            )));
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return Err(Error::Config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.epochs_per_experience == 0 {
            return Err(Error::Config("epochs_per_experience must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Which norm the embedding penalty applies to the per-sample drift vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingNorm {
    /// Half the squared L2 distance, smooth at zero drift.
    #[default]
    Squared,
    /// Half the plain L2 distance; its gradient is zeroed exactly at zero
    /// drift, where the norm has no derivative.
    Unsquared,
}

/// LFL-specific switches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LflConfig {
    /// Freeze the softmax head after the first experience.
    #[serde(default = "defaults_lfl::freeze_head")]
    pub freeze_head: bool,
    #[serde(default)]
    pub embedding_norm: EmbeddingNorm,
}

mod defaults_lfl {
    pub fn freeze_head() -> bool {
        true
    }
}

impl Default for LflConfig {
    fn default() -> Self {
        LflConfig {
            freeze_head: true,
            embedding_norm: EmbeddingNorm::Squared,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Naive,
    Lfl,
    Joint,
}

impl StrategyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Naive => "naive",
            StrategyKind::Lfl => "lfl",
            StrategyKind::Joint => "joint",
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(StrategyKind::Naive),
            "lfl" => Ok(StrategyKind::Lfl),
            "joint" => Ok(StrategyKind::Joint),
            other => Err(Error::Config(format!(
                "unknown strategy \"{other}\" (expected naive, lfl, or joint)"
            ))),
        }
    }
}
