//! Finite-difference verification of the analytic gradients.
//!
//! Checks run on the f64 instantiation of the kernels: with f32 parameters
//! the central-difference quotient carries roughly 1e-3 relative noise at
//! epsilon 1e-3, which would swamp the tolerance this check enforces.
//!
//! ReLU kinks and pooling ties make one-sided derivatives; [`kink_margin`]
//! reports how close a network/input pair sits to one so callers can reject
//! configurations where the comparison is meaningless.

use crate::error::Result;
use crate::nn::backprop::{backprop, forward, ActivationPenalty};
use crate::nn::layer::LayerSpec;
use crate::nn::loss::cross_entropy_batch;
use crate::nn::params::{ParamRole, ParamSet};
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub epsilon: f64,
    /// Maximum allowed |analytic - numeric| / max(|analytic|, |numeric|).
    pub rel_tol: f64,
    /// Differences below this pass regardless of relative size.
    pub abs_floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            epsilon: 1e-3,
            rel_tol: 1e-4,
            abs_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradMismatch {
    pub layer: usize,
    pub role: ParamRole,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Number of parameter elements compared.
    pub checked: usize,
    /// Largest observed relative error.
    pub worst_rel: f64,
    pub failures: Vec<GradMismatch>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares analytic parameter gradients against central finite differences
/// of the full batch loss (cross-entropy plus optional penalty).
pub fn check_gradients(
    layers: &[LayerSpec],
    params: &ParamSet<f64>,
    x: &Tensor<f64>,
    labels: &[usize],
    penalty: Option<&dyn ActivationPenalty<f64>>,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let (_, grads) = backprop(layers, params, x, labels, penalty)?;
    let mut work = params.clone();
    let mut checked = 0;
    let mut worst_rel = 0.0f64;
    let mut failures = Vec::new();

    for entry_idx in 0..params.entries().len() {
        if !params.entries()[entry_idx].trainable {
            continue;
        }
        let len = params.entries()[entry_idx].tensor.len();
        for i in 0..len {
            let original = work.entries()[entry_idx].tensor.data()[i];

            work.entries_mut()[entry_idx].tensor.data_mut()[i] = original + cfg.epsilon;
            let plus = total_loss(layers, &work, x, labels, penalty)?;
            work.entries_mut()[entry_idx].tensor.data_mut()[i] = original - cfg.epsilon;
            let minus = total_loss(layers, &work, x, labels, penalty)?;
            work.entries_mut()[entry_idx].tensor.data_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * cfg.epsilon);
            let analytic = grads.entries()[entry_idx].tensor.data()[i];
            let diff = (analytic - numeric).abs();
            let scale = analytic.abs().max(numeric.abs());
            let rel = diff / scale.max(cfg.abs_floor);
            worst_rel = worst_rel.max(rel);
            checked += 1;
            if diff > cfg.abs_floor && diff > cfg.rel_tol * scale {
                failures.push(GradMismatch {
                    layer: params.entries()[entry_idx].layer,
                    role: params.entries()[entry_idx].role,
                    index: i,
                    analytic,
                    numeric,
                });
            }
        }
    }

    Ok(GradCheckReport {
        checked,
        worst_rel,
        failures,
    })
}

fn total_loss(
    layers: &[LayerSpec],
    params: &ParamSet<f64>,
    x: &Tensor<f64>,
    labels: &[usize],
    penalty: Option<&dyn ActivationPenalty<f64>>,
) -> Result<f64> {
    let activations = forward(layers, params, x)?;
    let (data, _) = cross_entropy_batch(activations.last().unwrap(), labels)?;
    let extra = match penalty {
        Some(p) => p.eval(&activations[p.at()])?.0,
        None => 0.0,
    };
    Ok(data + extra)
}

/// Smallest distance to a non-smooth point in the current forward pass: the
/// absolute value of any ReLU pre-activation and the top-two gap of any
/// pooling window. Infinite when the stack has neither layer kind.
pub fn kink_margin(
    layers: &[LayerSpec],
    params: &ParamSet<f64>,
    x: &Tensor<f64>,
) -> Result<f64> {
    let activations = forward(layers, params, x)?;
    let mut margin = f64::INFINITY;
    for (i, layer) in layers.iter().enumerate() {
        let input = &activations[i];
        match layer {
            LayerSpec::Relu => {
                for v in input.data() {
                    margin = margin.min(v.abs());
                }
            }
            LayerSpec::MaxPool2x2 => {
                let (b, c, h, w) =
                    (input.shape()[0], input.shape()[1], input.shape()[2], input.shape()[3]);
                let data = input.data();
                for bi in 0..b {
                    for ci in 0..c {
                        let plane = (bi * c + ci) * h * w;
                        for oy in 0..h / 2 {
                            for ox in 0..w / 2 {
                                let mut vals = [0.0f64; 4];
                                for dy in 0..2 {
                                    for dx in 0..2 {
                                        vals[dy * 2 + dx] =
                                            data[plane + (oy * 2 + dy) * w + (ox * 2 + dx)];
                                    }
                                }
                                vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
                                // A window whose top two entries are both
                                // exactly zero is a ReLU-clamped region: the
                                // ReLU margin above already guards those
                                // values, and they stay at zero under any
                                // perturbation small enough to respect it.
                                if vals[0] == 0.0 && vals[1] == 0.0 {
                                    continue;
                                }
                                margin = margin.min(vals[0] - vals[1]);
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
    Ok(margin)
}
