use crate::nn::LayerSpec;

/// Architecture of the feature-extractor body. The head is always a single
/// dense layer from `embedding_dim` to the class count and is appended at
/// build time, never listed here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchConfig {
    pub input_shape: Vec<usize>,
    pub body: Vec<LayerSpec>,
    pub embedding_dim: usize,
}

impl ArchConfig {
    /// Fully-connected body over vector inputs: one dense+ReLU block per
    /// hidden width, then a dense+ReLU block into the embedding.
    pub fn mlp(input_dim: usize, hidden: &[usize], embedding_dim: usize) -> Self {
        let mut body = Vec::new();
        let mut prev = input_dim;
        for &h in hidden {
            body.push(LayerSpec::Dense { input: prev, output: h });
            body.push(LayerSpec::Relu);
            prev = h;
        }
        body.push(LayerSpec::Dense { input: prev, output: embedding_dim });
        body.push(LayerSpec::Relu);
        ArchConfig {
            input_shape: vec![input_dim],
            body,
            embedding_dim,
        }
    }

    /// Small CNN for 1x32x32 grayscale inputs with a 64-wide embedding.
    pub fn cnn32() -> Self {
        ArchConfig {
            input_shape: vec![1, 32, 32],
            body: vec![
                LayerSpec::Conv2d {
                    in_channels: 1,
                    out_channels: 8,
                    kernel: 3,
                    stride: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool2x2,
                LayerSpec::Conv2d {
                    in_channels: 8,
                    out_channels: 16,
                    kernel: 3,
                    stride: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool2x2,
                LayerSpec::Flatten,
                LayerSpec::Dense { input: 576, output: 64 },
                LayerSpec::Relu,
            ],
            embedding_dim: 64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mlp_chains_hidden_widths() {
        let arch = ArchConfig::mlp(16, &[64], 32);
        assert_eq!(arch.input_shape, vec![16]);
        assert_eq!(arch.body.len(), 4);
        assert_eq!(
            arch.body[2],
            LayerSpec::Dense { input: 64, output: 32 }
        );
        assert_eq!(arch.embedding_dim, 32);
    }

    #[test]
    fn cnn32_body_shapes_chain_to_embedding() {
        let arch = ArchConfig::cnn32();
        let mut shape = arch.input_shape.clone();
        for layer in &arch.body {
            shape = layer.output_shape(&shape).unwrap();
        }
        assert_eq!(shape, vec![arch.embedding_dim]);
    }
}
