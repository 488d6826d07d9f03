use crate::error::{Error, Result};
use crate::nn::params::ParamRole;
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;

/// One layer of a feed-forward stack.
///
/// Convolutions use valid padding only (no border fill) and pooling is fixed
/// at non-overlapping 2x2 max, which keeps the backward pass small while
/// still supporting a conventional small CNN.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSpec {
    Dense {
        input: usize,
        output: usize,
    },
    Relu,
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
    },
    MaxPool2x2,
    Flatten,
}

impl LayerSpec {
    /// Shape of one output sample given one input sample's shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let fail = |msg: String| Err(Error::shape(format!("{self:?}"), msg));
        match *self {
            LayerSpec::Dense { input: d_in, output } => {
                if input != [d_in] {
                    return fail(format!("expects input shape [{d_in}], got {input:?}"));
                }
                Ok(vec![output])
            }
            LayerSpec::Relu => Ok(input.to_vec()),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
            } => {
                if kernel == 0 || stride == 0 {
                    return fail("kernel and stride must be positive".into());
                }
                let [c, h, w] = *input else {
                    return fail(format!("expects [channels, h, w] input, got {input:?}"));
                };
                if c != in_channels {
                    return fail(format!("expects {in_channels} input channels, got {c}"));
                }
                if h < kernel || w < kernel {
                    return fail(format!("kernel {kernel} larger than input {h}x{w}"));
                }
                let oh = (h - kernel) / stride + 1;
                let ow = (w - kernel) / stride + 1;
                Ok(vec![out_channels, oh, ow])
            }
            LayerSpec::MaxPool2x2 => {
                let [c, h, w] = *input else {
                    return fail(format!("expects [channels, h, w] input, got {input:?}"));
                };
                if h < 2 || w < 2 {
                    return fail(format!("needs at least 2x2 spatial input, got {h}x{w}"));
                }
                // Odd trailing rows/columns fall outside every window and are
                // dropped, as in floor-mode pooling.
                Ok(vec![c, h / 2, w / 2])
            }
            LayerSpec::Flatten => {
                if input.is_empty() {
                    return fail("expects at least rank-1 input".into());
                }
                Ok(vec![input.iter().product()])
            }
        }
    }

    /// Parameter tensors this layer owns, in (role, shape) form.
    pub fn param_shapes(&self) -> Vec<(ParamRole, Vec<usize>)> {
        match *self {
            LayerSpec::Dense { input, output } => vec![
                (ParamRole::Weight, vec![output, input]),
                (ParamRole::Bias, vec![output]),
            ],
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![
                (
                    ParamRole::Weight,
                    vec![out_channels, in_channels, kernel, kernel],
                ),
                (ParamRole::Bias, vec![out_channels]),
            ],
            _ => vec![],
        }
    }

    /// Fan-in and fan-out for weight initialization, when parameterized.
    pub fn fan_in_out(&self) -> Option<(usize, usize)> {
        match *self {
            LayerSpec::Dense { input, output } => Some((input, output)),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => Some((in_channels * kernel * kernel, out_channels * kernel * kernel)),
            _ => None,
        }
    }

    pub fn has_params(&self) -> bool {
        !self.param_shapes().is_empty()
    }
}

/// Runs one layer forward over a batch. `x` has shape `[batch, ...sample]`
/// and the kernels trust shapes already validated by the caller.
pub(crate) fn forward_layer<F: Scalar>(
    spec: &LayerSpec,
    weight: Option<&Tensor<F>>,
    bias: Option<&Tensor<F>>,
    x: &Tensor<F>,
    out_sample_shape: &[usize],
) -> Tensor<F> {
    let batch = x.shape()[0];
    let mut out_shape = vec![batch];
    out_shape.extend_from_slice(out_sample_shape);

    match *spec {
        LayerSpec::Dense { input, output } => {
            let w = weight.unwrap().data();
            let b = bias.unwrap().data();
            let xs = x.data();
            let mut out = Tensor::zeros(&out_shape);
            let os = out.data_mut();
            for bi in 0..batch {
                for o in 0..output {
                    let mut acc = b[o].to_f64();
                    let wrow = &w[o * input..(o + 1) * input];
                    let xrow = &xs[bi * input..(bi + 1) * input];
                    for i in 0..input {
                        acc += wrow[i].to_f64() * xrow[i].to_f64();
                    }
                    os[bi * output + o] = F::from_f64(acc);
                }
            }
            out
        }
        LayerSpec::Relu => {
            let mut out = x.clone();
            for v in out.data_mut() {
                if !(*v > F::ZERO) {
                    *v = F::ZERO;
                }
            }
            out
        }
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
        } => {
            let (h, w_in) = (x.shape()[2], x.shape()[3]);
            let (oh, ow) = (out_sample_shape[1], out_sample_shape[2]);
            let wd = weight.unwrap().data();
            let bd = bias.unwrap().data();
            let xs = x.data();
            let mut out = Tensor::zeros(&out_shape);
            let os = out.data_mut();
            for bi in 0..batch {
                for oc in 0..out_channels {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut acc = bd[oc].to_f64();
                            for ic in 0..in_channels {
                                for ky in 0..kernel {
                                    let iy = oy * stride + ky;
                                    let xbase = ((bi * in_channels + ic) * h + iy) * w_in
                                        + ox * stride;
                                    let wbase = ((oc * in_channels + ic) * kernel + ky) * kernel;
                                    for kx in 0..kernel {
                                        acc += wd[wbase + kx].to_f64()
                                            * xs[xbase + kx].to_f64();
                                    }
                                }
                            }
                            os[((bi * out_channels + oc) * oh + oy) * ow + ox] =
                                F::from_f64(acc);
                        }
                    }
                }
            }
            out
        }
        LayerSpec::MaxPool2x2 => {
            let (c, h, w) = (x.shape()[1], x.shape()[2], x.shape()[3]);
            let (oh, ow) = (h / 2, w / 2);
            let xs = x.data();
            let mut out = Tensor::zeros(&out_shape);
            let os = out.data_mut();
            for bi in 0..batch {
                for ci in 0..c {
                    let plane = (bi * c + ci) * h * w;
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let (_, best) = pool_argmax(xs, plane, w, oy, ox);
                            os[((bi * c + ci) * oh + oy) * ow + ox] = best;
                        }
                    }
                }
            }
            out
        }
        LayerSpec::Flatten => x.reshaped(&out_shape).expect("flatten preserves length"),
    }
}

/// Index and value of the window maximum; the first maximum in row-major
/// scan order wins ties, which keeps forward and backward consistent.
fn pool_argmax<F: Scalar>(xs: &[F], plane: usize, w: usize, oy: usize, ox: usize) -> (usize, F) {
    let mut best_idx = plane + (oy * 2) * w + ox * 2;
    let mut best = xs[best_idx];
    for dy in 0..2 {
        for dx in 0..2 {
            let idx = plane + (oy * 2 + dy) * w + (ox * 2 + dx);
            if xs[idx] > best {
                best = xs[idx];
                best_idx = idx;
            }
        }
    }
    (best_idx, best)
}

/// Gradients of one layer: input gradient plus weight/bias gradients when the
/// layer has parameters. `grad_out` matches the layer's forward output.
pub(crate) fn backward_layer<F: Scalar>(
    spec: &LayerSpec,
    weight: Option<&Tensor<F>>,
    x: &Tensor<F>,
    grad_out: &Tensor<F>,
) -> (Tensor<F>, Option<Tensor<F>>, Option<Tensor<F>>) {
    let batch = x.shape()[0];
    match *spec {
        LayerSpec::Dense { input, output } => {
            let w = weight.unwrap().data();
            let xs = x.data();
            let gs = grad_out.data();
            let mut gw = vec![0.0f64; output * input];
            let mut gb = vec![0.0f64; output];
            let mut gx = vec![0.0f64; batch * input];
            for bi in 0..batch {
                let xrow = &xs[bi * input..(bi + 1) * input];
                let grow = &gs[bi * output..(bi + 1) * output];
                for o in 0..output {
                    let g = grow[o].to_f64();
                    gb[o] += g;
                    let wrow = &w[o * input..(o + 1) * input];
                    for i in 0..input {
                        gw[o * input + i] += g * xrow[i].to_f64();
                        gx[bi * input + i] += g * wrow[i].to_f64();
                    }
                }
            }
            (
                from_f64_buf(x.shape(), gx),
                Some(from_f64_buf(&[output, input], gw)),
                Some(from_f64_buf(&[output], gb)),
            )
        }
        LayerSpec::Relu => {
            let mut gx = grad_out.clone();
            for (g, v) in gx.data_mut().iter_mut().zip(x.data()) {
                if !(*v > F::ZERO) {
                    *g = F::ZERO;
                }
            }
            (gx, None, None)
        }
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
        } => {
            let (h, w_in) = (x.shape()[2], x.shape()[3]);
            let (oh, ow) = (grad_out.shape()[2], grad_out.shape()[3]);
            let wd = weight.unwrap().data();
            let xs = x.data();
            let gs = grad_out.data();
            let mut gw = vec![0.0f64; out_channels * in_channels * kernel * kernel];
            let mut gb = vec![0.0f64; out_channels];
            let mut gx = vec![0.0f64; xs.len()];
            for bi in 0..batch {
                for oc in 0..out_channels {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let g = gs[((bi * out_channels + oc) * oh + oy) * ow + ox].to_f64();
                            gb[oc] += g;
                            for ic in 0..in_channels {
                                for ky in 0..kernel {
                                    let iy = oy * stride + ky;
                                    let xbase = ((bi * in_channels + ic) * h + iy) * w_in
                                        + ox * stride;
                                    let wbase = ((oc * in_channels + ic) * kernel + ky) * kernel;
                                    for kx in 0..kernel {
                                        gw[wbase + kx] += g * xs[xbase + kx].to_f64();
                                        gx[xbase + kx] += g * wd[wbase + kx].to_f64();
                                    }
                                }
                            }
                        }
                    }
                }
            }
            (
                from_f64_buf(x.shape(), gx),
                Some(from_f64_buf(
                    &[out_channels, in_channels, kernel, kernel],
                    gw,
                )),
                Some(from_f64_buf(&[out_channels], gb)),
            )
        }
        LayerSpec::MaxPool2x2 => {
            let (c, h, w) = (x.shape()[1], x.shape()[2], x.shape()[3]);
            let (oh, ow) = (h / 2, w / 2);
            let xs = x.data();
            let gs = grad_out.data();
            let mut gx = Tensor::zeros(x.shape());
            let gxd = gx.data_mut();
            for bi in 0..batch {
                for ci in 0..c {
                    let plane = (bi * c + ci) * h * w;
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let (idx, _) = pool_argmax(xs, plane, w, oy, ox);
                            gxd[idx] = gs[((bi * c + ci) * oh + oy) * ow + ox];
                        }
                    }
                }
            }
            (gx, None, None)
        }
        LayerSpec::Flatten => (
            grad_out.reshaped(x.shape()).expect("flatten preserves length"),
            None,
            None,
        ),
    }
}

fn from_f64_buf<F: Scalar>(shape: &[usize], buf: Vec<f64>) -> Tensor<F> {
    let mut t = Tensor::zeros(shape);
    for (dst, src) in t.data_mut().iter_mut().zip(buf) {
        *dst = F::from_f64(src);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(shape: &[usize], data: &[f32]) -> Tensor<f32> {
        Tensor::from_vec(shape, data.to_vec()).unwrap()
    }

    #[test]
    fn dense_identity_passes_input_through() {
        let spec = LayerSpec::Dense { input: 2, output: 2 };
        let w = tensor(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        let b = tensor(&[2], &[0.0, 0.0]);
        let x = tensor(&[1, 2], &[3.0, -1.0]);
        let y = forward_layer(&spec, Some(&w), Some(&b), &x, &[2]);
        assert_eq!(y.data(), &[3.0, -1.0]);
    }

    #[test]
    fn relu_clamps_negatives_and_zero() {
        let spec = LayerSpec::Relu;
        let x = tensor(&[1, 3], &[-2.0, 0.0, 5.0]);
        let y = forward_layer(&spec, None, None, &x, &[3]);
        assert_eq!(y.data(), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn conv_1x1_kernel_scales_input() {
        let spec = LayerSpec::Conv2d {
            in_channels: 1,
            out_channels: 1,
            kernel: 1,
            stride: 1,
        };
        let w = tensor(&[1, 1, 1, 1], &[2.0]);
        let b = tensor(&[1], &[0.0]);
        let x = tensor(&[1, 1, 2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let y = forward_layer(&spec, Some(&w), Some(&b), &x, &[1, 2, 2]);
        assert_eq!(y.data(), &[2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn conv_shape_inference_valid_padding() {
        let spec = LayerSpec::Conv2d {
            in_channels: 1,
            out_channels: 3,
            kernel: 3,
            stride: 1,
        };
        assert_eq!(spec.output_shape(&[1, 32, 32]).unwrap(), vec![3, 30, 30]);
        let strided = LayerSpec::Conv2d {
            in_channels: 1,
            out_channels: 1,
            kernel: 3,
            stride: 2,
        };
        assert_eq!(strided.output_shape(&[1, 7, 7]).unwrap(), vec![1, 3, 3]);
        assert!(spec.output_shape(&[2, 32, 32]).is_err());
        assert!(spec.output_shape(&[1, 2, 2]).is_err());
    }

    #[test]
    fn maxpool_takes_first_max_on_ties() {
        let spec = LayerSpec::MaxPool2x2;
        let x = tensor(&[1, 1, 2, 2], &[7.0, 7.0, 1.0, 2.0]);
        let y = forward_layer(&spec, None, None, &x, &[1, 1, 1]);
        assert_eq!(y.data(), &[7.0]);
        let g = tensor(&[1, 1, 1, 1], &[1.0]);
        let (gx, _, _) = backward_layer(&spec, None, &x, &g);
        assert_eq!(gx.data(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn maxpool_floors_odd_dims() {
        assert_eq!(
            LayerSpec::MaxPool2x2.output_shape(&[1, 3, 5]).unwrap(),
            vec![1, 1, 2]
        );
        assert_eq!(
            LayerSpec::MaxPool2x2.output_shape(&[2, 4, 6]).unwrap(),
            vec![2, 2, 3]
        );
        assert!(LayerSpec::MaxPool2x2.output_shape(&[1, 1, 4]).is_err());
    }

    #[test]
    fn maxpool_ignores_trailing_odd_row() {
        let spec = LayerSpec::MaxPool2x2;
        // 3x3 plane: only the top-left 2x2 window exists; bottom row and
        // right column never reach the output.
        let x = tensor(&[1, 1, 3, 3], &[1.0, 2.0, 9.0, 3.0, 4.0, 9.0, 9.0, 9.0, 9.0]);
        let y = forward_layer(&spec, None, None, &x, &[1, 1, 1]);
        assert_eq!(y.data(), &[4.0]);
        let g = tensor(&[1, 1, 1, 1], &[1.0]);
        let (gx, _, _) = backward_layer(&spec, None, &x, &g);
        assert_eq!(gx.data(), &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn flatten_collapses_sample_dims() {
        let spec = LayerSpec::Flatten;
        assert_eq!(spec.output_shape(&[2, 3, 4]).unwrap(), vec![24]);
        let x = tensor(&[2, 1, 2, 2], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let y = forward_layer(&spec, None, None, &x, &[4]);
        assert_eq!(y.shape(), &[2, 4]);
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn dense_backward_accumulates_over_batch() {
        let spec = LayerSpec::Dense { input: 2, output: 1 };
        let w = tensor(&[1, 2], &[2.0, -1.0]);
        let x = tensor(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let g = tensor(&[2, 1], &[1.0, 0.5]);
        let (gx, gw, gb) = backward_layer(&spec, Some(&w), &x, &g);
        assert_eq!(gb.unwrap().data(), &[1.5]);
        assert_eq!(gw.unwrap().data(), &[1.0 + 1.5, 2.0 + 2.0]);
        assert_eq!(gx.data(), &[2.0, -1.0, 1.0, -0.5]);
    }
}
