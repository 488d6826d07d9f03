use crate::error::{Error, Result};
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;

/// Softmax of each row of a `[batch, classes]` logit matrix, in f64 with
/// max-subtraction for stability.
pub fn softmax_rows<F: Scalar>(logits: &Tensor<F>) -> Result<Vec<Vec<f64>>> {
    let [batch, classes] = *logits.shape() else {
        return Err(Error::shape(
            "softmax",
            format!("expected [batch, classes] logits, got {:?}", logits.shape()),
        ));
    };
    let data = logits.data();
    let mut rows = Vec::with_capacity(batch);
    for b in 0..batch {
        let row = &data[b * classes..(b + 1) * classes];
        rows.push(softmax_slice(row));
    }
    Ok(rows)
}

fn softmax_slice<F: Scalar>(row: &[F]) -> Vec<f64> {
    let max = row
        .iter()
        .map(|v| v.to_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v.to_f64() - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of one logit vector against a class index.
///
/// Returns the loss and its gradient with respect to the logits, which is
/// `softmax(logits) - onehot(label)`.
pub fn softmax_cross_entropy<F: Scalar>(logits: &Tensor<F>, label: usize) -> Result<(f64, Tensor<F>)> {
    let [classes] = *logits.shape() else {
        return Err(Error::shape(
            "cross-entropy",
            format!("expected rank-1 logits, got {:?}", logits.shape()),
        ));
    };
    if label >= classes {
        return Err(Error::Input(format!(
            "label {label} out of range for {classes} classes"
        )));
    }
    let (loss, grad) = sample_loss_grad(logits.data(), label);
    let grad = Tensor::from_vec(&[classes], grad.into_iter().map(F::from_f64).collect())?;
    Ok((loss, grad))
}

/// Mean cross-entropy over a `[batch, classes]` logit matrix. The returned
/// gradient is already scaled by 1/batch, so downstream layer gradients come
/// out as batch means.
pub fn cross_entropy_batch<F: Scalar>(
    logits: &Tensor<F>,
    labels: &[usize],
) -> Result<(f64, Tensor<F>)> {
    let [batch, classes] = *logits.shape() else {
        return Err(Error::shape(
            "cross-entropy",
            format!("expected [batch, classes] logits, got {:?}", logits.shape()),
        ));
    };
    if labels.len() != batch {
        return Err(Error::Input(format!(
            "{} labels for a batch of {batch}",
            labels.len()
        )));
    }
    if batch == 0 {
        return Err(Error::Input("empty batch".into()));
    }
    let data = logits.data();
    let scale = 1.0 / batch as f64;
    let mut total = 0.0f64;
    let mut grad = Tensor::zeros(logits.shape());
    let gd = grad.data_mut();
    for (b, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::Input(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        let row = &data[b * classes..(b + 1) * classes];
        let (loss, g) = sample_loss_grad(row, label);
        total += loss;
        for (k, gv) in g.into_iter().enumerate() {
            gd[b * classes + k] = F::from_f64(gv * scale);
        }
    }
    Ok((total * scale, grad))
}

fn sample_loss_grad<F: Scalar>(row: &[F], label: usize) -> (f64, Vec<f64>) {
    let max = row
        .iter()
        .map(|v| v.to_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = row.iter().map(|v| v.to_f64() - max).collect();
    let sum_exp: f64 = shifted.iter().map(|v| v.exp()).sum();
    let log_sum = sum_exp.ln();
    let loss = log_sum - shifted[label];
    let mut grad: Vec<f64> = shifted.iter().map(|v| v.exp() / sum_exp).collect();
    grad[label] -= 1.0;
    (loss, grad)
}
