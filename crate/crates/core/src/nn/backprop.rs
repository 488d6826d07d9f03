use crate::error::{Error, Result};
use crate::nn::layer::{backward_layer, forward_layer, LayerSpec};
use crate::nn::loss::cross_entropy_batch;
use crate::nn::params::{ParamRole, ParamSet};
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;

/// Extra loss term read from one intermediate activation during backprop.
///
/// The continual-learning embedding penalty is the one implementor that
/// matters; gradient checking reuses the same interface.
pub trait ActivationPenalty<F: Scalar> {
    /// Index into the activation list returned by [`forward`] (0 is the
    /// input, `i + 1` is the output of layer `i`).
    fn at(&self) -> usize;

    /// Penalty value and its gradient with respect to that activation batch.
    fn eval(&self, activation: &Tensor<F>) -> Result<(f64, Tensor<F>)>;
}

/// Loss components of one batch. `total` is `data + penalty`; the decoupled
/// weight-decay term lives in the optimizer, not here.
#[derive(Debug, Clone, Copy)]
pub struct BatchLoss {
    pub total: f64,
    pub data: f64,
    pub penalty: f64,
}

/// Runs the full stack over an input batch, returning every activation.
///
/// `activations[0]` is the input itself and `activations[i + 1]` the output
/// of layer `i`, so the final logits sit at `activations[layers.len()]`.
pub fn forward<F: Scalar>(
    layers: &[LayerSpec],
    params: &ParamSet<F>,
    x: &Tensor<F>,
) -> Result<Vec<Tensor<F>>> {
    if x.shape().is_empty() || x.shape()[0] == 0 {
        return Err(Error::Input("forward pass needs a non-empty batch".into()));
    }
    let mut sample_shape = x.shape()[1..].to_vec();
    let mut activations = Vec::with_capacity(layers.len() + 1);
    activations.push(x.clone());
    for (i, layer) in layers.iter().enumerate() {
        let out_shape = layer.output_shape(&sample_shape).map_err(|e| match e {
            Error::Shape { message, .. } => Error::shape(format!("layer {i}"), message),
            other => other,
        })?;
        let (w, b) = layer_params(params, i, layer)?;
        let out = forward_layer(layer, w, b, activations.last().unwrap(), &out_shape);
        activations.push(out);
        sample_shape = out_shape;
    }
    Ok(activations)
}

/// Reverse-mode gradients of mean cross-entropy (plus an optional activation
/// penalty) over one batch.
///
/// The returned set mirrors `params` exactly; entries marked non-trainable
/// carry exact zeros.
pub fn backprop<F: Scalar>(
    layers: &[LayerSpec],
    params: &ParamSet<F>,
    x: &Tensor<F>,
    labels: &[usize],
    penalty: Option<&dyn ActivationPenalty<F>>,
) -> Result<(BatchLoss, ParamSet<F>)> {
    let activations = forward(layers, params, x)?;
    let logits = activations.last().unwrap();
    let (data_loss, logit_grad) = cross_entropy_batch(logits, labels)?;

    let mut penalty_loss = 0.0;
    let mut penalty_grad: Option<(usize, Tensor<F>)> = None;
    if let Some(p) = penalty {
        let at = p.at();
        if at >= activations.len() {
            return Err(Error::Internal(format!(
                "penalty hook at activation {at}, but only {} exist",
                activations.len()
            )));
        }
        let (value, grad) = p.eval(&activations[at])?;
        if grad.shape() != activations[at].shape() {
            return Err(Error::Internal(
                "penalty gradient shape does not match its activation".into(),
            ));
        }
        penalty_loss = value;
        penalty_grad = Some((at, grad));
    }

    let mut grads = params.zeros_like();
    let mut flowing = logit_grad;
    if let Some((at, extra)) = &penalty_grad {
        if *at == activations.len() - 1 {
            add_into(&mut flowing, extra);
        }
    }
    for i in (0..layers.len()).rev() {
        let (w, _) = layer_params(params, i, &layers[i])?;
        let (gx, gw, gb) = backward_layer(&layers[i], w, &activations[i], &flowing);
        if let Some(gw) = gw {
            set_grad(&mut grads, i, ParamRole::Weight, gw)?;
        }
        if let Some(gb) = gb {
            set_grad(&mut grads, i, ParamRole::Bias, gb)?;
        }
        flowing = gx;
        if let Some((at, extra)) = &penalty_grad {
            if *at == i {
                add_into(&mut flowing, extra);
            }
        }
    }

    for e in grads.entries_mut() {
        if !e.trainable {
            e.tensor = Tensor::zeros(e.tensor.shape());
        }
    }

    let loss = BatchLoss {
        total: data_loss + penalty_loss,
        data: data_loss,
        penalty: penalty_loss,
    };
    Ok((loss, grads))
}

fn layer_params<'a, F: Scalar>(
    params: &'a ParamSet<F>,
    index: usize,
    layer: &LayerSpec,
) -> Result<(Option<&'a Tensor<F>>, Option<&'a Tensor<F>>)> {
    if !layer.has_params() {
        return Ok((None, None));
    }
    let w = params
        .get(index, ParamRole::Weight)
        .ok_or_else(|| Error::Internal(format!("missing weight entry for layer {index}")))?;
    let b = params
        .get(index, ParamRole::Bias)
        .ok_or_else(|| Error::Internal(format!("missing bias entry for layer {index}")))?;
    Ok((Some(&w.tensor), Some(&b.tensor)))
}

fn set_grad<F: Scalar>(
    grads: &mut ParamSet<F>,
    layer: usize,
    role: ParamRole,
    value: Tensor<F>,
) -> Result<()> {
    let entry = grads
        .get_mut(layer, role)
        .ok_or_else(|| Error::Internal(format!("missing gradient slot for layer {layer}")))?;
    entry.tensor = value;
    Ok(())
}

fn add_into<F: Scalar>(dst: &mut Tensor<F>, src: &Tensor<F>) {
    for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d = F::from_f64(d.to_f64() + s.to_f64());
    }
}
