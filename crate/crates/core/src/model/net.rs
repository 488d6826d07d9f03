use crate::error::{Error, Result};
use crate::model::arch::ArchConfig;
use crate::nn::layer::forward_layer;
use crate::nn::loss::softmax_rows;
use crate::nn::{forward, LayerSpec, ParamEntry, ParamRole, ParamSet, Tensor};
use crate::rng;

/// A feature extractor plus a single linear softmax head.
///
/// Layers 0..body_len are the body; layer body_len is the head, a dense map
/// from the embedding to class logits. The embedding is the body's final
/// (post-ReLU) activation, exactly what the head consumes.
#[derive(Debug, Clone)]
pub struct LayeredNet {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    body_len: usize,
    embedding_dim: usize,
    num_classes: usize,
    params: ParamSet<f32>,
}

/// Immutable deep copy of a network, used as the reference point for the
/// embedding-drift penalty. It exposes no mutable access, so training the
/// live network can never change what the snapshot computes.
#[derive(Debug, Clone)]
pub struct FrozenSnapshot {
    net: LayeredNet,
}

/// Builds a network with freshly initialized parameters.
///
/// Weights are uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero, drawn
/// from a ChaCha8 stream, so a fixed seed reproduces parameters bit-exactly.
pub fn build_model(arch: &ArchConfig, num_classes: usize, seed: u64) -> Result<LayeredNet> {
    if num_classes < 2 {
        return Err(Error::Config(format!(
            "num_classes must be at least 2, got {num_classes}"
        )));
    }
    let mut layers = arch.body.clone();
    layers.push(LayerSpec::Dense {
        input: arch.embedding_dim,
        output: num_classes,
    });

    let mut rng = rng::chacha(seed);
    let mut params = ParamSet::new();
    for (i, layer) in layers.iter().enumerate() {
        let Some((fan_in, fan_out)) = layer.fan_in_out() else {
            continue;
        };
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for (role, shape) in layer.param_shapes() {
            let tensor = match role {
                ParamRole::Weight => {
                    let len = shape.iter().product();
                    let data = (0..len)
                        .map(|_| rng::uniform(&mut rng, -limit, limit) as f32)
                        .collect();
                    Tensor::from_vec(&shape, data)?
                }
                ParamRole::Bias => Tensor::zeros(&shape),
            };
            params.push(ParamEntry {
                layer: i,
                role,
                tensor,
                trainable: true,
            });
        }
    }

    LayeredNet::from_parts(
        arch.input_shape.clone(),
        layers,
        arch.embedding_dim,
        num_classes,
        params,
    )
}

impl LayeredNet {
    /// Assembles a network from explicit parts, validating that the layer
    /// shapes chain from the input to the embedding and on to the logits.
    pub fn from_parts(
        input_shape: Vec<usize>,
        layers: Vec<LayerSpec>,
        embedding_dim: usize,
        num_classes: usize,
        params: ParamSet<f32>,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least a head layer".into()));
        }
        let body_len = layers.len() - 1;
        match layers[body_len] {
            LayerSpec::Dense { input, output } => {
                if input != embedding_dim {
                    return Err(Error::Config(format!(
                        "head (layer {body_len}) expects input {input}, embedding_dim is {embedding_dim}"
                    )));
                }
                if output != num_classes {
                    return Err(Error::Config(format!(
                        "head (layer {body_len}) outputs {output}, num_classes is {num_classes}"
                    )));
                }
            }
            ref other => {
                return Err(Error::Config(format!(
                    "head (layer {body_len}) must be dense, got {other:?}"
                )))
            }
        }

        let mut shape = input_shape.clone();
        for (i, layer) in layers.iter().enumerate() {
            shape = match layer.output_shape(&shape) {
                Ok(s) => s,
                Err(Error::Shape { message, .. }) => {
                    return Err(Error::Config(format!("layer {i}: {message}")))
                }
                Err(e) => return Err(e),
            };
            if i + 1 == body_len && shape != [embedding_dim] {
                return Err(Error::Config(format!(
                    "body output shape {shape:?} does not match embedding_dim {embedding_dim}"
                )));
            }
        }

        let net = LayeredNet {
            input_shape,
            layers,
            body_len,
            embedding_dim,
            num_classes,
            params,
        };
        net.validate_params()?;
        Ok(net)
    }

    fn validate_params(&self) -> Result<()> {
        for (i, layer) in self.layers.iter().enumerate() {
            for (role, shape) in layer.param_shapes() {
                let entry = self.params.get(i, role).ok_or_else(|| {
                    Error::Config(format!("missing {role:?} parameters for layer {i}"))
                })?;
                if entry.tensor.shape() != shape {
                    return Err(Error::Config(format!(
                        "layer {i} {role:?} has shape {:?}, expected {shape:?}",
                        entry.tensor.shape()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn body(&self) -> &[LayerSpec] {
        &self.layers[..self.body_len]
    }

    pub fn body_len(&self) -> usize {
        self.body_len
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn params(&self) -> &ParamSet<f32> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<f32> {
        &mut self.params
    }

    /// Feature embedding of a single sample.
    pub fn embed(&self, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let batch = self.embed_batch(&batch_of_one(x)?)?;
        batch.reshaped(&[self.embedding_dim])
    }

    /// Feature embeddings of a `[batch, ...]` input, shape `[batch, dim]`.
    pub fn embed_batch(&self, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let acts = forward(self.body(), &self.params, x)?;
        Ok(acts.into_iter().next_back().unwrap())
    }

    /// Class probabilities for one sample. This is literally
    /// softmax(head(embed(x))): the same body pass and the same head layer,
    /// no separate inference path.
    pub fn predict(&self, x: &Tensor<f32>) -> Result<Vec<f64>> {
        let batch = self.predict_batch(&batch_of_one(x)?)?;
        Ok(batch.into_iter().next().unwrap())
    }

    pub fn predict_batch(&self, x: &Tensor<f32>) -> Result<Vec<Vec<f64>>> {
        let emb = self.embed_batch(x)?;
        softmax_rows(&self.head_logits(&emb)?)
    }

    /// Applies the head to a `[batch, embedding_dim]` matrix.
    pub fn head_logits(&self, embeddings: &Tensor<f32>) -> Result<Tensor<f32>> {
        if embeddings.shape().len() != 2 || embeddings.shape()[1] != self.embedding_dim {
            return Err(Error::shape(
                "head",
                format!(
                    "expected [batch, {}], got {:?}",
                    self.embedding_dim,
                    embeddings.shape()
                ),
            ));
        }
        let head = &self.layers[self.body_len];
        let w = self.params.get(self.body_len, ParamRole::Weight).unwrap();
        let b = self.params.get(self.body_len, ParamRole::Bias).unwrap();
        Ok(forward_layer(
            head,
            Some(&w.tensor),
            Some(&b.tensor),
            embeddings,
            &[self.num_classes],
        ))
    }

    pub fn snapshot(&self) -> FrozenSnapshot {
        FrozenSnapshot { net: self.clone() }
    }

    /// Marks the head's weight and bias non-trainable. Idempotent; the body
    /// is untouched.
    pub fn freeze_head(&mut self) {
        let body_len = self.body_len;
        for e in self.params.entries_mut() {
            if e.layer == body_len {
                e.trainable = false;
            }
        }
    }

    pub fn head_is_frozen(&self) -> bool {
        self.params
            .entries()
            .iter()
            .filter(|e| e.layer == self.body_len)
            .all(|e| !e.trainable)
    }

    /// The head's (weight, bias) tensors, for bit-level comparisons.
    pub fn head_params(&self) -> (&Tensor<f32>, &Tensor<f32>) {
        let w = self.params.get(self.body_len, ParamRole::Weight).unwrap();
        let b = self.params.get(self.body_len, ParamRole::Bias).unwrap();
        (&w.tensor, &b.tensor)
    }

    /// True when both networks have identical layer stacks and dimensions
    /// (parameters may differ).
    pub fn arch_matches(&self, other: &LayeredNet) -> bool {
        self.input_shape == other.input_shape
            && self.layers == other.layers
            && self.embedding_dim == other.embedding_dim
            && self.num_classes == other.num_classes
    }
}

impl FrozenSnapshot {
    pub fn embed(&self, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        self.net.embed(x)
    }

    pub fn embed_batch(&self, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        self.net.embed_batch(x)
    }

    pub fn embedding_dim(&self) -> usize {
        self.net.embedding_dim()
    }

    pub fn params(&self) -> &ParamSet<f32> {
        self.net.params()
    }
}

fn batch_of_one(x: &Tensor<f32>) -> Result<Tensor<f32>> {
    let mut shape = vec![1];
    shape.extend_from_slice(x.shape());
    x.reshaped(&shape)
}
