//! Neural-network kernels: 3x3 same-padding convolution, 2x2 max pooling,
//! dense layers, activations, and binary cross-entropy, each with an exact
//! backward pass.
//!
//! Every kernel iterates in a fixed order, so results are bit-identical
//! across runs. Inputs are validated with assertions: callers (the model
//! layer) are responsible for turning user-facing shape problems into
//! errors before reaching these kernels.

use super::tensor::{Element, TensorOf};

fn idx4(c: usize, h: usize, w: usize, n: usize, ci: usize, y: usize, x: usize) -> usize {
    ((n * c + ci) * h + y) * w + x
}

/// 3x3 convolution, stride 1, zero ("same") padding.
///
/// `input` is `[N, C, H, W]`, `weight` is `[F, C, 3, 3]`, `bias` is `[F]`;
/// the output is `[N, F, H, W]`. Each output pixel accumulates its terms in
/// `(channel, ky, kx)` order.
pub fn conv2d_forward<E: Element>(
    input: &TensorOf<E>,
    weight: &TensorOf<E>,
    bias: &TensorOf<E>,
) -> TensorOf<E> {
    let [n_batch, c_in, h, w] = dims4(input.shape(), "conv input");
    let [f_out, cw, kh, kw] = dims4(weight.shape(), "conv weight");
    assert_eq!(cw, c_in, "conv weight channels must match input channels");
    assert_eq!((kh, kw), (3, 3), "conv kernels are fixed at 3x3");
    assert_eq!(bias.shape(), &[f_out], "conv bias must be [filters]");

    let mut out = TensorOf::zeros(vec![n_batch, f_out, h, w]);
    let src = input.data();
    let wts = weight.data();
    let bs = bias.data();
    let dst = out.data_mut();
    for n in 0..n_batch {
        for f in 0..f_out {
            let plane = idx4(f_out, h, w, n, f, 0, 0);
            dst[plane..plane + h * w].fill(bs[f]);
            for c in 0..c_in {
                for ky in 0..3 {
                    for kx in 0..3 {
                        let wv = wts[((f * c_in + c) * 3 + ky) * 3 + kx];
                        // Output rows where the tap lands inside the image.
                        let y_lo = 1usize.saturating_sub(ky);
                        let y_hi = (h + 1 - ky).min(h);
                        let x_lo = 1usize.saturating_sub(kx);
                        let x_hi = (w + 1 - kx).min(w);
                        for y in y_lo..y_hi {
                            let iy = y + ky - 1;
                            let src_row = idx4(c_in, h, w, n, c, iy, 0);
                            let dst_row = plane + y * w;
                            for x in x_lo..x_hi {
                                let ix = x + kx - 1;
                                dst[dst_row + x] += wv * src[src_row + ix];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Gradients of [`conv2d_forward`] with respect to input, weight, and bias.
pub fn conv2d_backward<E: Element>(
    input: &TensorOf<E>,
    weight: &TensorOf<E>,
    grad_out: &TensorOf<E>,
) -> (TensorOf<E>, TensorOf<E>, TensorOf<E>) {
    let [n_batch, c_in, h, w] = dims4(input.shape(), "conv input");
    let [f_out, _, _, _] = dims4(weight.shape(), "conv weight");
    assert_eq!(
        grad_out.shape(),
        &[n_batch, f_out, h, w],
        "conv grad_out shape mismatch"
    );

    let src = input.data();
    let wts = weight.data();
    let go = grad_out.data();

    let mut grad_bias = TensorOf::zeros(vec![f_out]);
    let gb = grad_bias.data_mut();
    for n in 0..n_batch {
        for f in 0..f_out {
            let plane = idx4(f_out, h, w, n, f, 0, 0);
            for v in &go[plane..plane + h * w] {
                gb[f] += *v;
            }
        }
    }

    let mut grad_weight = TensorOf::zeros(vec![f_out, c_in, 3, 3]);
    let gw = grad_weight.data_mut();
    for n in 0..n_batch {
        for f in 0..f_out {
            let plane = idx4(f_out, h, w, n, f, 0, 0);
            for c in 0..c_in {
                for ky in 0..3 {
                    for kx in 0..3 {
                        let mut acc = E::ZERO;
                        let y_lo = 1usize.saturating_sub(ky);
                        let y_hi = (h + 1 - ky).min(h);
                        let x_lo = 1usize.saturating_sub(kx);
                        let x_hi = (w + 1 - kx).min(w);
                        for y in y_lo..y_hi {
                            let iy = y + ky - 1;
                            let src_row = idx4(c_in, h, w, n, c, iy, 0);
                            let go_row = plane + y * w;
                            for x in x_lo..x_hi {
                                acc += go[go_row + x] * src[src_row + x + kx - 1];
                            }
                        }
                        gw[((f * c_in + c) * 3 + ky) * 3 + kx] += acc;
                    }
                }
            }
        }
    }

    let mut grad_input = TensorOf::zeros(vec![n_batch, c_in, h, w]);
    let gi = grad_input.data_mut();
    for n in 0..n_batch {
        for c in 0..c_in {
            for f in 0..f_out {
                let plane = idx4(f_out, h, w, n, f, 0, 0);
                for ky in 0..3 {
                    for kx in 0..3 {
                        let wv = wts[((f * c_in + c) * 3 + ky) * 3 + kx];
                        let y_lo = 1usize.saturating_sub(ky);
                        let y_hi = (h + 1 - ky).min(h);
                        let x_lo = 1usize.saturating_sub(kx);
                        let x_hi = (w + 1 - kx).min(w);
                        for y in y_lo..y_hi {
                            let iy = y + ky - 1;
                            let gi_row = idx4(c_in, h, w, n, c, iy, 0);
                            let go_row = plane + y * w;
                            for x in x_lo..x_hi {
                                gi[gi_row + x + kx - 1] += wv * go[go_row + x];
                            }
                        }
                    }
                }
            }
        }
    }

    (grad_input, grad_weight, grad_bias)
}

/// 2x2 max pooling, stride 2. Trailing odd rows/columns are dropped
/// (output is `[N, C, H/2, W/2]` with floor division). Returns the pooled
/// tensor and, per output element, the flat input index of its maximum
/// (first occurrence wins on ties) for gradient routing.
pub fn maxpool2_forward<E: Element>(input: &TensorOf<E>) -> (TensorOf<E>, Vec<usize>) {
    let [n_batch, c_in, h, w] = dims4(input.shape(), "pool input");
    let (oh, ow) = (h / 2, w / 2);
    assert!(oh > 0 && ow > 0, "pool input must be at least 2x2");
    let src = input.data();
    let mut out = TensorOf::zeros(vec![n_batch, c_in, oh, ow]);
    let mut argmax = vec![0usize; out.len()];
    let dst = out.data_mut();
    let mut o = 0usize;
    for n in 0..n_batch {
        for c in 0..c_in {
            for oy in 0..oh {
                for ox in 0..ow {
                    let base = idx4(c_in, h, w, n, c, 2 * oy, 2 * ox);
                    let mut best_idx = base;
                    let mut best = src[base];
                    for (dy, dx) in [(0usize, 1usize), (1, 0), (1, 1)] {
                        let i = base + dy * w + dx;
                        if src[i] > best {
                            best = src[i];
                            best_idx = i;
                        }
                    }
                    dst[o] = best;
                    argmax[o] = best_idx;
                    o += 1;
                }
            }
        }
    }
    (out, argmax)
}

/// Routes pooled gradients back to the argmax positions.
pub fn maxpool2_backward<E: Element>(
    grad_out: &TensorOf<E>,
    argmax: &[usize],
    input_shape: &[usize],
) -> TensorOf<E> {
    assert_eq!(grad_out.len(), argmax.len(), "pool argmax length mismatch");
    let mut grad_input = TensorOf::zeros(input_shape.to_vec());
    let gi = grad_input.data_mut();
    for (g, &i) in grad_out.data().iter().zip(argmax) {
        gi[i] += *g;
    }
    grad_input
}

/// Fully connected layer: `input` `[N, I]` x `weight` `[O, I]` + `bias` `[O]`.
pub fn dense_forward<E: Element>(
    input: &TensorOf<E>,
    weight: &TensorOf<E>,
    bias: &TensorOf<E>,
) -> TensorOf<E> {
    let [n_batch, in_dim] = dims2(input.shape(), "dense input");
    let [out_dim, wi] = dims2(weight.shape(), "dense weight");
    assert_eq!(wi, in_dim, "dense weight width must match input");
    assert_eq!(bias.shape(), &[out_dim], "dense bias must be [out]");

    let src = input.data();
    let wts = weight.data();
    let bs = bias.data();
    let mut out = TensorOf::zeros(vec![n_batch, out_dim]);
    let dst = out.data_mut();
    for n in 0..n_batch {
        let row = &src[n * in_dim..(n + 1) * in_dim];
        for o in 0..out_dim {
            let wrow = &wts[o * in_dim..(o + 1) * in_dim];
            let mut acc = bs[o];
            for i in 0..in_dim {
                acc += row[i] * wrow[i];
            }
            dst[n * out_dim + o] = acc;
        }
    }
    out
}

/// Gradients of [`dense_forward`] with respect to input, weight, and bias.
pub fn dense_backward<E: Element>(
    input: &TensorOf<E>,
    weight: &TensorOf<E>,
    grad_out: &TensorOf<E>,
) -> (TensorOf<E>, TensorOf<E>, TensorOf<E>) {
    let [n_batch, in_dim] = dims2(input.shape(), "dense input");
    let [out_dim, _] = dims2(weight.shape(), "dense weight");
    assert_eq!(grad_out.shape(), &[n_batch, out_dim], "dense grad_out shape");

    let src = input.data();
    let wts = weight.data();
    let go = grad_out.data();

    let mut grad_input = TensorOf::zeros(vec![n_batch, in_dim]);
    let gi = grad_input.data_mut();
    for n in 0..n_batch {
        for o in 0..out_dim {
            let g = go[n * out_dim + o];
            let wrow = &wts[o * in_dim..(o + 1) * in_dim];
            let girow = &mut gi[n * in_dim..(n + 1) * in_dim];
            for i in 0..in_dim {
                girow[i] += g * wrow[i];
            }
        }
    }

    let mut grad_weight = TensorOf::zeros(vec![out_dim, in_dim]);
    let gw = grad_weight.data_mut();
    for n in 0..n_batch {
        let row = &src[n * in_dim..(n + 1) * in_dim];
        for o in 0..out_dim {
            let g = go[n * out_dim + o];
            let gwrow = &mut gw[o * in_dim..(o + 1) * in_dim];
            for i in 0..in_dim {
                gwrow[i] += g * row[i];
            }
        }
    }

    let mut grad_bias = TensorOf::zeros(vec![out_dim]);
    let gb = grad_bias.data_mut();
    for n in 0..n_batch {
        for o in 0..out_dim {
            gb[o] += go[n * out_dim + o];
        }
    }

    (grad_input, grad_weight, grad_bias)
}

/// Elementwise `max(0, x)`.
pub fn relu_forward<E: Element>(input: &TensorOf<E>) -> TensorOf<E> {
    let mut out = input.clone();
    for v in out.data_mut() {
        if *v < E::ZERO {
            *v = E::ZERO;
        }
    }
    out
}

/// Masks gradients where the pre-activation was not strictly positive.
pub fn relu_backward<E: Element>(pre: &TensorOf<E>, grad_out: &TensorOf<E>) -> TensorOf<E> {
    assert_eq!(pre.shape(), grad_out.shape(), "relu shape mismatch");
    let mut out = grad_out.clone();
    for (g, p) in out.data_mut().iter_mut().zip(pre.data()) {
        if !(*p > E::ZERO) {
            *g = E::ZERO;
        }
    }
    out
}

/// Elementwise `max(0, x) + slope * min(0, x)`.
pub fn leaky_relu_forward<E: Element>(input: &TensorOf<E>, slope: E) -> TensorOf<E> {
    let mut out = input.clone();
    for v in out.data_mut() {
        if *v < E::ZERO {
            *v = *v * slope;
        }
    }
    out
}

/// Gradient of [`leaky_relu_forward`].
pub fn leaky_relu_backward<E: Element>(
    pre: &TensorOf<E>,
    grad_out: &TensorOf<E>,
    slope: E,
) -> TensorOf<E> {
    assert_eq!(pre.shape(), grad_out.shape(), "leaky relu shape mismatch");
    let mut out = grad_out.clone();
    for (g, p) in out.data_mut().iter_mut().zip(pre.data()) {
        if !(*p > E::ZERO) {
            *g = *g * slope;
        }
    }
    out
}

/// Numerically stable logistic function.
pub fn sigmoid_scalar<E: Element>(z: E) -> E {
    if z >= E::ZERO {
        E::ONE / (E::ONE + (-z).exp())
    } else {
        let e = z.exp();
        e / (E::ONE + e)
    }
}

/// Elementwise logistic function.
pub fn sigmoid<E: Element>(input: &TensorOf<E>) -> TensorOf<E> {
    let mut out = input.clone();
    for v in out.data_mut() {
        *v = sigmoid_scalar(*v);
    }
    out
}

/// Mean binary cross-entropy computed from logits (pre-sigmoid values),
/// in the overflow-free form `max(z, 0) - z*y + ln(1 + exp(-|z|))`.
///
/// Returns the mean loss and the gradient with respect to each logit,
/// `(sigmoid(z) - y) / N`.
pub fn bce_with_logits<E: Element>(logits: &TensorOf<E>, targets: &[E]) -> (E, TensorOf<E>) {
    assert_eq!(logits.len(), targets.len(), "logit/target length mismatch");
    assert!(!targets.is_empty(), "cross-entropy over an empty batch");
    let inv_n = E::ONE / E::from_f64(targets.len() as f64);
    let mut grad = logits.clone();
    let mut total = E::ZERO;
    for (g, (&z, &y)) in grad.data_mut().iter_mut().zip(logits.data().iter().zip(targets)) {
        let pos = z.maximum(E::ZERO);
        total += pos - z * y + (E::ONE + (-z.abs()).exp()).ln();
        *g = (sigmoid_scalar(z) - y) * inv_n;
    }
    (total * inv_n, grad)
}

fn dims4(shape: &[usize], what: &str) -> [usize; 4] {
    assert_eq!(shape.len(), 4, "{} must be rank 4, got {:?}", what, shape);
    [shape[0], shape[1], shape[2], shape[3]]
}

fn dims2(shape: &[usize], what: &str) -> [usize; 2] {
    assert_eq!(shape.len(), 2, "{} must be rank 2, got {:?}", what, shape);
    [shape[0], shape[1]]
}
