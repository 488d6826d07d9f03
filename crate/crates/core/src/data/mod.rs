//! Domain-incremental experience streams.
//!
//! A stream is an ordered list of [`Experience`]s sharing one label
//! vocabulary while the input distribution shifts from one experience to the
//! next. Streams come from the synthetic generator ([`synthetic`]), from
//! class-folder/CSV ingestion ([`folder`]), or from a cache file written
//! earlier ([`cache`]).

pub mod cache;
pub mod folder;
pub mod split;
pub mod synthetic;

use crate::error::{Error, Result};
use crate::nn::Tensor;

pub use split::split;
pub use synthetic::{generate_synthetic_stream, DataMode, DomainSpec, StreamSpec};

/// Class labels are a fixed three-way road-surface vocabulary by default;
/// the generator accepts other class counts for tests.
pub const CLASS_NAMES: [&str; 3] = ["asphalt", "paved", "unpaved"];

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Feature vector `[d]` or grayscale image `[1, h, w]`, values in [0, 1].
    pub x: Tensor<f32>,
    pub label: usize,
}

/// One dataset of the stream, already divided into train and test.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub id: usize,
    pub name: String,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl Experience {
    /// Sample shape shared by every sample of this experience.
    pub fn input_shape(&self) -> Option<&[usize]> {
        self.train
            .first()
            .or_else(|| self.test.first())
            .map(|s| s.x.shape())
    }
}

/// Stacks the selected samples into one `[batch, ...]` tensor plus labels.
pub fn batch_from(samples: &[Sample], indices: &[usize]) -> Result<(Tensor<f32>, Vec<usize>)> {
    let first = indices
        .first()
        .and_then(|&i| samples.get(i))
        .ok_or_else(|| Error::Input("cannot build an empty batch".into()))?;
    let sample_shape = first.x.shape().to_vec();
    let mut shape = vec![indices.len()];
    shape.extend_from_slice(&sample_shape);
    let mut data = Vec::with_capacity(indices.len() * first.x.len());
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        let s = samples
            .get(i)
            .ok_or_else(|| Error::Input(format!("batch index {i} out of range")))?;
        if s.x.shape() != sample_shape {
            return Err(Error::Input(format!(
                "mixed sample shapes in batch: {:?} vs {:?}",
                s.x.shape(),
                sample_shape
            )));
        }
        data.extend_from_slice(s.x.data());
        labels.push(s.label);
    }
    Ok((Tensor::from_vec(&shape, data)?, labels))
}

/// Convenience for evaluation: batches every sample in order.
pub fn batch_all(samples: &[Sample]) -> Result<(Tensor<f32>, Vec<usize>)> {
    let indices: Vec<usize> = (0..samples.len()).collect();
    batch_from(samples, &indices)
}
