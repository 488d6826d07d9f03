//! The epoch/batch loop shared by every strategy.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{batch_from, Sample};
use crate::error::{Error, Result};
use crate::model::{FrozenSnapshot, LayeredNet};
use crate::rng;
use crate::seed::derive_seed;
use crate::strategies::penalty::lfl_loss;
use crate::strategies::{EmbeddingNorm, Hyperparams};
use crate::nn::{backprop, sgd_step};

/// Loss components of one epoch. Wall time is kept out of serialized
/// results so rerun outputs stay byte-identical; it is surfaced separately
/// through the run manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// Experience index this epoch trained on.
    pub stage: usize,
    /// Global 1-based epoch number across the whole protocol.
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's samples.
    pub l_c: f64,
    /// Mean embedding-penalty contribution, already scaled by lambda_e.
    pub weighted_l_e: f64,
    /// Decoupled L2 term, half weight_decay times the trainable squared
    /// norm, measured on the post-epoch parameters.
    pub r_term: f64,
    pub samples: usize,
    #[serde(skip)]
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainLog {
    pub fn total_samples(&self) -> usize {
        self.epochs.iter().map(|e| e.samples).sum()
    }

    pub fn stage_samples(&self, stage: usize) -> usize {
        self.epochs
            .iter()
            .filter(|e| e.stage == stage)
            .map(|e| e.samples)
            .sum()
    }

    pub fn total_wall_seconds(&self) -> f64 {
        self.epochs.iter().map(|e| e.wall_seconds).sum()
    }

    pub fn stage_wall_seconds(&self, stage: usize) -> f64 {
        self.epochs
            .iter()
            .filter(|e| e.stage == stage)
            .map(|e| e.wall_seconds)
            .sum()
    }
}

/// Trains one experience for the configured epochs.
///
/// The shuffle RNG is seeded from the stage index alone (not the strategy),
/// so strategies that perform the same computation produce the same batches.
/// `per_epoch` runs after every epoch, outside the timed region, with the
/// global epoch number and the epoch index local to this stage.
pub(crate) fn train_stage(
    net: &mut LayeredNet,
    train: &[Sample],
    stage: usize,
    hp: &Hyperparams,
    snapshot: Option<&FrozenSnapshot>,
    norm: EmbeddingNorm,
    epoch_offset: usize,
    log: &mut TrainLog,
    per_epoch: &mut dyn FnMut(&LayeredNet, usize, usize) -> Result<()>,
) -> Result<()> {
    if train.is_empty() {
        return Err(Error::Input(format!(
            "experience {stage} has an empty train split"
        )));
    }
    let mut shuffle_rng = rng::chacha(derive_seed(hp.seed, &format!("shuffle/{stage}")));
    let mut order: Vec<usize> = (0..train.len()).collect();
    for local in 0..hp.epochs_per_experience {
        let timer = Instant::now();
        rng::shuffle(&mut shuffle_rng, &mut order);
        let mut ce_sum = 0.0f64;
        let mut penalty_sum = 0.0f64;
        let mut seen = 0usize;
        for chunk in order.chunks(hp.batch_size) {
            let (x, labels) = batch_from(train, chunk)?;
            let (loss, grads) = match snapshot {
                Some(snap) if hp.lambda_e > 0.0 => {
                    lfl_loss(net, snap, &x, &labels, hp.lambda_e, norm)?
                }
                _ => backprop(net.layers(), net.params(), &x, &labels, None)?,
            };
            sgd_step(net.params_mut(), &grads, hp.lr, hp.weight_decay)?;
            ce_sum += loss.data * chunk.len() as f64;
            penalty_sum += loss.penalty * chunk.len() as f64;
            seen += chunk.len();
        }
        let wall_seconds = timer.elapsed().as_secs_f64();
        let r_term = 0.5 * hp.weight_decay * net.params().trainable_l2_sq();
        let epoch = epoch_offset + local + 1;
        log.epochs.push(EpochLog {
            stage,
            epoch,
            l_c: ce_sum / seen as f64,
            weighted_l_e: penalty_sum / seen as f64,
            r_term,
            samples: seen,
            wall_seconds,
        });
        per_epoch(net, epoch, local)?;
    }
    Ok(())
}
