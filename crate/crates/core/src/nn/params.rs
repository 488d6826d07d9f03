use crate::error::{Error, Result};
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    Weight,
    Bias,
}

#[derive(Debug, Clone)]
pub struct ParamEntry<F: Scalar = f32> {
    pub layer: usize,
    pub role: ParamRole,
    pub tensor: Tensor<F>,
    pub trainable: bool,
}

/// Ordered collection of all learnable tensors of a network.
///
/// Entry order is fixed at construction (layer index ascending, weight before
/// bias) and survives snapshot, checkpoint, and gradient round-trips, so two
/// sets built from the same layer stack can be walked in lockstep.
#[derive(Debug, Clone, Default)]
pub struct ParamSet<F: Scalar = f32> {
    entries: Vec<ParamEntry<F>>,
}

impl<F: Scalar> ParamSet<F> {
    pub fn new() -> Self {
        ParamSet {
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, entry: ParamEntry<F>) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[ParamEntry<F>] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [ParamEntry<F>] {
        &mut self.entries
    }

    pub fn get(&self, layer: usize, role: ParamRole) -> Option<&ParamEntry<F>> {
        self.entries
            .iter()
            .find(|e| e.layer == layer && e.role == role)
    }

    pub fn get_mut(&mut self, layer: usize, role: ParamRole) -> Option<&mut ParamEntry<F>> {
        self.entries
            .iter_mut()
            .find(|e| e.layer == layer && e.role == role)
    }

    /// Total number of scalar values across all entries.
    pub fn num_values(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.len()).sum()
    }

    /// A same-structure set with every tensor zeroed; used for gradients.
    pub fn zeros_like(&self) -> Self {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|e| ParamEntry {
                    layer: e.layer,
                    role: e.role,
                    tensor: Tensor::zeros(e.tensor.shape()),
                    trainable: e.trainable,
                })
                .collect(),
        }
    }

    pub fn convert<G: Scalar>(&self) -> ParamSet<G> {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|e| ParamEntry {
                    layer: e.layer,
                    role: e.role,
                    tensor: e.tensor.convert(),
                    trainable: e.trainable,
                })
                .collect(),
        }
    }

    /// Checks that `other` has identical entry count, ids, roles, and shapes.
    pub fn structure_matches(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| {
                a.layer == b.layer && a.role == b.role && a.tensor.shape() == b.tensor.shape()
            })
    }

    pub fn require_structure(&self, other: &Self, context: &str) -> Result<()> {
        if self.structure_matches(other) {
            Ok(())
        } else {
            Err(Error::Internal(format!(
                "{context}: parameter sets have different structure"
            )))
        }
    }

    /// Squared L2 norm of all trainable values, accumulated in f64.
    pub fn trainable_l2_sq(&self) -> f64 {
        let mut acc = 0.0f64;
        for e in &self.entries {
            if e.trainable {
                for v in e.tensor.data() {
                    let v = v.to_f64();
                    acc += v * v;
                }
            }
        }
        acc
    }

    pub fn bits_eq(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.layer == b.layer && a.role == b.role && a.tensor.bits_eq(&b.tensor))
    }
}
