//! Deterministic CPU neural-network numerics.
//!
//! Parameters and activations are stored in 32-bit floats by default, while
//! every reduction (dot products, convolutions, loss means) accumulates in
//! 64-bit. The kernels are generic over [`Scalar`] so the same code can be
//! instantiated at `f64` for finite-difference gradient checking, where
//! single-precision noise would drown out the comparison.

pub mod backprop;
pub mod gradcheck;
pub mod layer;
pub mod loss;
pub mod params;
pub mod scalar;
pub mod sgd;
pub mod tensor;

pub use backprop::{backprop, forward, ActivationPenalty, BatchLoss};
pub use layer::LayerSpec;
pub use params::{ParamEntry, ParamRole, ParamSet};
pub use scalar::Scalar;
pub use sgd::sgd_step;
pub use tensor::Tensor;
