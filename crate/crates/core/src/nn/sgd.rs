use crate::error::Result;
use crate::nn::params::ParamSet;
use crate::nn::scalar::Scalar;

/// One SGD step with decoupled L2 weight decay.
///
/// Trainable entries move by `w - lr * (g + weight_decay * w)`, computed in
/// f64 per element. Frozen entries are skipped entirely, so their bits are
/// untouched.
pub fn sgd_step<F: Scalar>(
    params: &mut ParamSet<F>,
    grads: &ParamSet<F>,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    params.require_structure(grads, "sgd_step")?;
    for (p, g) in params.entries_mut().iter_mut().zip(grads.entries()) {
        if !p.trainable {
            continue;
        }
        for (w, gv) in p.tensor.data_mut().iter_mut().zip(g.tensor.data()) {
            let w64 = w.to_f64();
            *w = F::from_f64(w64 - lr * (gv.to_f64() + weight_decay * w64));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::{ParamEntry, ParamRole};
    use crate::nn::tensor::Tensor;

    fn single(value: f32, trainable: bool) -> ParamSet<f32> {
        let mut p = ParamSet::new();
        p.push(ParamEntry {
            layer: 0,
            role: ParamRole::Weight,
            tensor: Tensor::from_vec(&[1], vec![value]).unwrap(),
            trainable,
        });
        p
    }

    #[test]
    fn plain_step_matches_arithmetic() {
        let mut p = single(1.0, true);
        let g = single(0.5, true);
        sgd_step(&mut p, &g, 0.002, 0.0).unwrap();
        assert_eq!(p.entries()[0].tensor.data()[0], 0.999);
    }

    #[test]
    fn zero_grad_zero_decay_is_fixed_point() {
        let mut p = single(1.25, true);
        let g = single(0.0, true);
        sgd_step(&mut p, &g, 0.1, 0.0).unwrap();
        assert_eq!(p.entries()[0].tensor.data()[0], 1.25);
    }

    #[test]
    fn pure_decay_shrinks_weight() {
        let mut p = single(1.0, true);
        let g = single(0.0, true);
        sgd_step(&mut p, &g, 0.1, 0.5).unwrap();
        assert_eq!(p.entries()[0].tensor.data()[0], 0.95);
    }

    #[test]
    fn frozen_entry_bits_untouched() {
        // A value that would change under decay if the entry were updated.
        let mut p = single(-0.0, false);
        let before = p.entries()[0].tensor.data()[0].to_bits();
        let g = single(123.0, false);
        sgd_step(&mut p, &g, 0.1, 0.5).unwrap();
        assert_eq!(p.entries()[0].tensor.data()[0].to_bits(), before);
    }

    #[test]
    fn structure_mismatch_is_internal_error() {
        let mut p = single(1.0, true);
        let mut g = single(1.0, true);
        g.entries_mut()[0].tensor = Tensor::zeros(&[2]);
        assert!(sgd_step(&mut p, &g, 0.1, 0.0).is_err());
    }
}
