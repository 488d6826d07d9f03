//! The embedding-drift penalty and the combined LFL loss.

use crate::error::{Error, Result};
use crate::model::{FrozenSnapshot, LayeredNet};
use crate::nn::{backprop, ActivationPenalty, BatchLoss, ParamSet, Scalar, Tensor};
use crate::strategies::EmbeddingNorm;

/// Pulls the embedding activation of a batch toward a frozen target batch.
///
/// The penalty value is the batch mean of half the (squared) L2 distance
/// between current and target embeddings, scaled by `lambda`; the gradient
/// is injected at the embedding activation during backprop.
pub struct DriftPenalty<F: Scalar = f32> {
    at: usize,
    lambda: f64,
    norm: EmbeddingNorm,
    target: Tensor<F>,
}

impl DriftPenalty<f32> {
    /// Penalty for one batch: the target embeddings come from the snapshot.
    pub fn new(
        net: &LayeredNet,
        snapshot: &FrozenSnapshot,
        x: &Tensor<f32>,
        lambda: f64,
        norm: EmbeddingNorm,
    ) -> Result<Self> {
        if snapshot.embedding_dim() != net.embedding_dim() {
            return Err(Error::Config(format!(
                "snapshot embedding dim {} does not match the network's {}",
                snapshot.embedding_dim(),
                net.embedding_dim()
            )));
        }
        Ok(DriftPenalty {
            at: net.body_len(),
            lambda,
            norm,
            target: snapshot.embed_batch(x)?,
        })
    }
}

impl<F: Scalar> DriftPenalty<F> {
    /// Builds the penalty around a precomputed target batch. `at` is the
    /// activation index the penalty reads (the embedding sits at the index
    /// equal to the body length).
    pub fn from_target(at: usize, lambda: f64, norm: EmbeddingNorm, target: Tensor<F>) -> Self {
        DriftPenalty {
            at,
            lambda,
            norm,
            target,
        }
    }
}

impl<F: Scalar> ActivationPenalty<F> for DriftPenalty<F> {
    fn at(&self) -> usize {
        self.at
    }

    fn eval(&self, activation: &Tensor<F>) -> Result<(f64, Tensor<F>)> {
        if activation.shape() != self.target.shape() {
            return Err(Error::shape(
                "embedding penalty",
                format!(
                    "activation {:?} does not match target {:?}",
                    activation.shape(),
                    self.target.shape()
                ),
            ));
        }
        let batch = activation.shape()[0];
        let dim = activation.len() / batch;
        let scale = self.lambda / batch as f64;
        let mut value = 0.0f64;
        let mut grad = vec![0.0f64; activation.len()];
        for b in 0..batch {
            let row = b * dim;
            match self.norm {
                EmbeddingNorm::Squared => {
                    for i in row..row + dim {
                        let d = activation.data()[i].to_f64() - self.target.data()[i].to_f64();
                        value += 0.5 * d * d;
                        grad[i] = scale * d;
                    }
                }
                EmbeddingNorm::Unsquared => {
                    let mut sq = 0.0f64;
                    for i in row..row + dim {
                        let d = activation.data()[i].to_f64() - self.target.data()[i].to_f64();
                        sq += d * d;
                    }
                    let norm = sq.sqrt();
                    value += 0.5 * norm;
                    if norm > 0.0 {
                        for i in row..row + dim {
                            let d =
                                activation.data()[i].to_f64() - self.target.data()[i].to_f64();
                            grad[i] = scale * d / (2.0 * norm);
                        }
                    }
                }
            }
        }
        let grad_data: Vec<F> = grad.into_iter().map(F::from_f64).collect();
        Ok((
            scale * value,
            Tensor::from_vec(activation.shape(), grad_data)?,
        ))
    }
}

/// Cross-entropy plus the embedding-drift penalty for one batch. A zero
/// `lambda_e` takes the plain cross-entropy path, identical to Naive's.
pub fn lfl_loss(
    net: &LayeredNet,
    snapshot: &FrozenSnapshot,
    x: &Tensor<f32>,
    labels: &[usize],
    lambda_e: f64,
    norm: EmbeddingNorm,
) -> Result<(BatchLoss, ParamSet<f32>)> {
    if lambda_e == 0.0 {
        return backprop(net.layers(), net.params(), x, labels, None);
    }
    let penalty = DriftPenalty::new(net, snapshot, x, lambda_e, norm)?;
    backprop(net.layers(), net.params(), x, labels, Some(&penalty))
}

/// Mean L2 distance between the network's and the snapshot's embeddings
/// over a probe set.
pub fn embedding_drift(
    net: &LayeredNet,
    snapshot: &FrozenSnapshot,
    probe: &Tensor<f32>,
) -> Result<f64> {
    let current = net.embed_batch(probe)?;
    let target = snapshot.embed_batch(probe)?;
    if current.shape() != target.shape() {
        return Err(Error::shape(
            "embedding drift",
            format!("{:?} vs {:?}", current.shape(), target.shape()),
        ));
    }
    let batch = current.shape()[0];
    let dim = current.len() / batch;
    let mut total = 0.0f64;
    for b in 0..batch {
        let mut sq = 0.0f64;
        for i in b * dim..(b + 1) * dim {
            let d = current.data()[i].to_f64() - target.data()[i].to_f64();
            sq += d * d;
        }
        total += sq.sqrt();
    }
    Ok(total / batch as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ArchConfig};
    use crate::rng;

    fn unit_target() -> Tensor<f32> {
        Tensor::from_vec(&[1, 2], vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn orthogonal_unit_embeddings_cost_one() {
        let penalty = DriftPenalty::from_target(2, 1.0, EmbeddingNorm::Squared, unit_target());
        let activation = Tensor::from_vec(&[1, 2], vec![1.0f32, 0.0]).unwrap();
        let (value, grad) = penalty.eval(&activation).unwrap();
        assert_eq!(value, 1.0);
        assert_eq!(grad.data(), &[1.0, -1.0]);
    }

    #[test]
    fn unsquared_norm_value_and_gradient() {
        let penalty = DriftPenalty::from_target(2, 1.0, EmbeddingNorm::Unsquared, unit_target());
        let activation = Tensor::from_vec(&[1, 2], vec![1.0f32, 0.0]).unwrap();
        let (value, grad) = penalty.eval(&activation).unwrap();
        let root2 = 2.0f64.sqrt();
        assert!((value - 0.5 * root2).abs() < 1e-7);
        assert!((grad.data()[0] as f64 - 1.0 / (2.0 * root2)).abs() < 1e-7);
        assert!((grad.data()[1] as f64 + 1.0 / (2.0 * root2)).abs() < 1e-7);
    }

    #[test]
    fn unsquared_norm_is_flat_at_zero_drift() {
        let penalty = DriftPenalty::from_target(2, 1.0, EmbeddingNorm::Unsquared, unit_target());
        let (value, grad) = penalty.eval(&unit_target()).unwrap();
        assert_eq!(value, 0.0);
        assert!(grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn lambda_scales_value_and_gradient_linearly() {
        let activation = Tensor::from_vec(&[1, 2], vec![0.4f32, 0.7]).unwrap();
        let one = DriftPenalty::from_target(2, 1.0, EmbeddingNorm::Squared, unit_target());
        let three = DriftPenalty::from_target(2, 3.0, EmbeddingNorm::Squared, unit_target());
        let (v1, g1) = one.eval(&activation).unwrap();
        let (v3, g3) = three.eval(&activation).unwrap();
        assert!((v3 - 3.0 * v1).abs() < 1e-12);
        for (a, b) in g1.data().iter().zip(g3.data()) {
            assert!((b - 3.0 * a).abs() < 1e-7);
        }
    }

    #[test]
    fn value_is_the_batch_mean() {
        let target = Tensor::from_vec(&[2, 2], vec![0.0f32, 1.0, 0.5, 0.5]).unwrap();
        // First row drifts to unit cost, second row not at all.
        let activation = Tensor::from_vec(&[2, 2], vec![1.0f32, 0.0, 0.5, 0.5]).unwrap();
        let penalty = DriftPenalty::from_target(2, 2.0, EmbeddingNorm::Squared, target);
        let (value, grad) = penalty.eval(&activation).unwrap();
        assert_eq!(value, 2.0 * (1.0 + 0.0) / 2.0);
        assert_eq!(&grad.data()[2..], &[0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng::chacha(9);
        let target_data: Vec<f64> = (0..6).map(|_| rng::uniform(&mut rng, -1.0, 1.0)).collect();
        let act_data: Vec<f64> = (0..6).map(|_| rng::uniform(&mut rng, -1.0, 1.0)).collect();
        let target = Tensor::<f64>::from_vec(&[2, 3], target_data).unwrap();
        for norm in [EmbeddingNorm::Squared, EmbeddingNorm::Unsquared] {
            let penalty = DriftPenalty::from_target(1, 0.7, norm, target.clone());
            let activation = Tensor::<f64>::from_vec(&[2, 3], act_data.clone()).unwrap();
            let (_, grad) = penalty.eval(&activation).unwrap();
            for i in 0..6 {
                let eps = 1e-6;
                let mut bumped = act_data.clone();
                bumped[i] += eps;
                let up = penalty
                    .eval(&Tensor::from_vec(&[2, 3], bumped.clone()).unwrap())
                    .unwrap()
                    .0;
                bumped[i] -= 2.0 * eps;
                let down = penalty
                    .eval(&Tensor::from_vec(&[2, 3], bumped).unwrap())
                    .unwrap()
                    .0;
                let numeric = (up - down) / (2.0 * eps);
                assert!(
                    (grad.data()[i] - numeric).abs() < 1e-6,
                    "{norm:?} element {i}: {} vs {numeric}",
                    grad.data()[i]
                );
            }
        }
    }

    #[test]
    fn matching_snapshot_leaves_only_cross_entropy() {
        let arch = ArchConfig::mlp(5, &[8], 6);
        let net = build_model(&arch, 3, 21).unwrap();
        let snapshot = net.snapshot();
        let x = Tensor::from_vec(&[2, 5], vec![0.1f32; 10]).unwrap();
        let (loss, _) = lfl_loss(&net, &snapshot, &x, &[0, 2], 1.0, EmbeddingNorm::Squared).unwrap();
        assert_eq!(loss.penalty, 0.0);
        assert_eq!(loss.total, loss.data);
    }

    #[test]
    fn zero_lambda_matches_plain_backprop_bit_for_bit() {
        let arch = ArchConfig::mlp(5, &[8], 6);
        let net = build_model(&arch, 3, 22).unwrap();
        let other = build_model(&arch, 3, 23).unwrap();
        let snapshot = other.snapshot();
        let x = Tensor::from_vec(&[3, 5], (0..15).map(|i| i as f32 / 20.0).collect()).unwrap();
        let labels = [0, 1, 2];
        let (lfl, lfl_grads) =
            lfl_loss(&net, &snapshot, &x, &labels, 0.0, EmbeddingNorm::Squared).unwrap();
        let (plain, plain_grads) =
            backprop(net.layers(), net.params(), &x, &labels, None).unwrap();
        assert_eq!(lfl.total.to_bits(), plain.total.to_bits());
        assert!(lfl_grads.bits_eq(&plain_grads));
    }

    #[test]
    fn embedding_dim_mismatch_is_a_config_error() {
        let net = build_model(&ArchConfig::mlp(5, &[8], 6), 3, 24).unwrap();
        let other = build_model(&ArchConfig::mlp(5, &[8], 4), 3, 24).unwrap();
        let x = Tensor::from_vec(&[1, 5], vec![0.2f32; 5]).unwrap();
        let err =
            lfl_loss(&net, &other.snapshot(), &x, &[1], 1.0, EmbeddingNorm::Squared).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn drift_of_identical_nets_is_zero() {
        let net = build_model(&ArchConfig::mlp(4, &[6], 5), 3, 25).unwrap();
        let probe = Tensor::from_vec(&[4, 4], vec![0.3f32; 16]).unwrap();
        assert_eq!(embedding_drift(&net, &net.snapshot(), &probe).unwrap(), 0.0);
    }
}
