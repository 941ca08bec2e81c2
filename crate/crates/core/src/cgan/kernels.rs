//! Strided convolution kernels for the GAN: 4x4 stride-2 downsampling
//! convolution (discriminator) and its transposed counterpart that doubles
//! resolution (generator). Padding 1 on both, so spatial size exactly halves
//! or doubles. Fixed loop orders keep results bit-reproducible.

use crate::verify::tensor::Tensor;

fn idx4(c: usize, h: usize, w: usize, n: usize, ci: usize, y: usize, x: usize) -> usize {
    ((n * c + ci) * h + y) * w + x
}

/// 4x4 convolution, stride 2, padding 1: `[N, C, S, S]` -> `[N, F, S/2, S/2]`
/// with weight `[F, C, 4, 4]` and bias `[F]`. `S` must be even and at least 4.
pub fn conv_stride2_forward(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Tensor {
    let (n_batch, c_in, h, w) = shape4(input, "conv input");
    let f_out = weight.shape()[0];
    assert_eq!(weight.shape(), &[f_out, c_in, 4, 4], "conv weight must be [F, C, 4, 4]");
    assert_eq!(bias.shape(), &[f_out], "conv bias must be [F]");
    assert!(h % 2 == 0 && w % 2 == 0 && h >= 4 && w >= 4, "input side must be even, >= 4");
    let (oh, ow) = (h / 2, w / 2);

    let src = input.data();
    let wts = weight.data();
    let mut out = Tensor::zeros(vec![n_batch, f_out, oh, ow]);
    let dst = out.data_mut();
    for n in 0..n_batch {
        for f in 0..f_out {
            let plane = idx4(f_out, oh, ow, n, f, 0, 0);
            dst[plane..plane + oh * ow].fill(bias.data()[f]);
            for c in 0..c_in {
                for ky in 0..4 {
                    for kx in 0..4 {
                        let wv = wts[((f * c_in + c) * 4 + ky) * 4 + kx];
                        for oy in 0..oh {
                            let iy = (2 * oy + ky) as i64 - 1;
                            if iy < 0 || iy >= h as i64 {
                                continue;
                            }
                            let src_row = idx4(c_in, h, w, n, c, iy as usize, 0);
                            let dst_row = plane + oy * ow;
                            for ox in 0..ow {
                                let ix = (2 * ox + kx) as i64 - 1;
                                if ix < 0 || ix >= w as i64 {
                                    continue;
                                }
                                dst[dst_row + ox] += wv * src[src_row + ix as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Gradients of [`conv_stride2_forward`] w.r.t. input, weight, and bias.
pub fn conv_stride2_backward(
    input: &Tensor,
    weight: &Tensor,
    grad_out: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let (n_batch, c_in, h, w) = shape4(input, "conv input");
    let f_out = weight.shape()[0];
    let (oh, ow) = (h / 2, w / 2);
    assert_eq!(grad_out.shape(), &[n_batch, f_out, oh, ow], "conv grad_out shape");

    let src = input.data();
    let wts = weight.data();
    let go = grad_out.data();

    let mut grad_bias = Tensor::zeros(vec![f_out]);
    for n in 0..n_batch {
        for f in 0..f_out {
            let plane = idx4(f_out, oh, ow, n, f, 0, 0);
            for v in &go[plane..plane + oh * ow] {
                grad_bias.data_mut()[f] += *v;
            }
        }
    }

    let mut grad_weight = Tensor::zeros(vec![f_out, c_in, 4, 4]);
    let gw = grad_weight.data_mut();
    let mut grad_input = Tensor::zeros(vec![n_batch, c_in, h, w]);
    let gi = grad_input.data_mut();
    for n in 0..n_batch {
        for f in 0..f_out {
            let plane = idx4(f_out, oh, ow, n, f, 0, 0);
            for c in 0..c_in {
                for ky in 0..4 {
                    for kx in 0..4 {
                        let widx = ((f * c_in + c) * 4 + ky) * 4 + kx;
                        let wv = wts[widx];
                        let mut acc = 0.0;
                        for oy in 0..oh {
                            let iy = (2 * oy + ky) as i64 - 1;
                            if iy < 0 || iy >= h as i64 {
                                continue;
                            }
                            let src_row = idx4(c_in, h, w, n, c, iy as usize, 0);
                            let go_row = plane + oy * ow;
                            for ox in 0..ow {
                                let ix = (2 * ox + kx) as i64 - 1;
                                if ix < 0 || ix >= w as i64 {
                                    continue;
                                }
                                let g = go[go_row + ox];
                                acc += g * src[src_row + ix as usize];
                                gi[src_row + ix as usize] += g * wv;
                            }
                        }
                        gw[widx] += acc;
                    }
                }
            }
        }
    }

    (grad_input, grad_weight, grad_bias)
}

/// Transposed 4x4 convolution, stride 2, padding 1:
/// `[N, C, H, W]` -> `[N, F, 2H, 2W]` with weight `[C, F, 4, 4]` and bias
/// `[F]`. Each input pixel scatters a 4x4 stamp at double coordinates.
pub fn conv_transpose2_forward(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Tensor {
    let (n_batch, c_in, h, w) = shape4(input, "transpose-conv input");
    assert_eq!(weight.shape().len(), 4, "transpose-conv weight must be rank 4");
    assert_eq!(weight.shape()[0], c_in, "transpose-conv weight must be [C, F, 4, 4]");
    let f_out = weight.shape()[1];
    assert_eq!(weight.shape(), &[c_in, f_out, 4, 4], "transpose-conv weight must be [C, F, 4, 4]");
    assert_eq!(bias.shape(), &[f_out], "transpose-conv bias must be [F]");
    let (oh, ow) = (2 * h, 2 * w);

    let src = input.data();
    let wts = weight.data();
    let mut out = Tensor::zeros(vec![n_batch, f_out, oh, ow]);
    let dst = out.data_mut();
    for n in 0..n_batch {
        for f in 0..f_out {
            let plane = idx4(f_out, oh, ow, n, f, 0, 0);
            dst[plane..plane + oh * ow].fill(bias.data()[f]);
            for c in 0..c_in {
                for ky in 0..4 {
                    for kx in 0..4 {
                        let wv = wts[((c * f_out + f) * 4 + ky) * 4 + kx];
                        for y in 0..h {
                            let oy = (2 * y + ky) as i64 - 1;
                            if oy < 0 || oy >= oh as i64 {
                                continue;
                            }
                            let src_row = idx4(c_in, h, w, n, c, y, 0);
                            let dst_row = plane + oy as usize * ow;
                            for x in 0..w {
                                let ox = (2 * x + kx) as i64 - 1;
                                if ox < 0 || ox >= ow as i64 {
                                    continue;
                                }
                                dst[dst_row + ox as usize] += wv * src[src_row + x];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Gradients of [`conv_transpose2_forward`] w.r.t. input, weight, and bias.
pub fn conv_transpose2_backward(
    input: &Tensor,
    weight: &Tensor,
    grad_out: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let (n_batch, c_in, h, w) = shape4(input, "transpose-conv input");
    let f_out = weight.shape()[1];
    let (oh, ow) = (2 * h, 2 * w);
    assert_eq!(grad_out.shape(), &[n_batch, f_out, oh, ow], "transpose-conv grad_out shape");

    let src = input.data();
    let wts = weight.data();
    let go = grad_out.data();

    let mut grad_bias = Tensor::zeros(vec![f_out]);
    for n in 0..n_batch {
        for f in 0..f_out {
            let plane = idx4(f_out, oh, ow, n, f, 0, 0);
            for v in &go[plane..plane + oh * ow] {
                grad_bias.data_mut()[f] += *v;
            }
        }
    }

    let mut grad_weight = Tensor::zeros(vec![c_in, f_out, 4, 4]);
    let gw = grad_weight.data_mut();
    let mut grad_input = Tensor::zeros(vec![n_batch, c_in, h, w]);
    let gi = grad_input.data_mut();
    for n in 0..n_batch {
        for f in 0..f_out {
            let plane = idx4(f_out, oh, ow, n, f, 0, 0);
            for c in 0..c_in {
                for ky in 0..4 {
                    for kx in 0..4 {
                        let widx = ((c * f_out + f) * 4 + ky) * 4 + kx;
                        let wv = wts[widx];
                        let mut acc = 0.0;
                        for y in 0..h {
                            let oy = (2 * y + ky) as i64 - 1;
                            if oy < 0 || oy >= oh as i64 {
                                continue;
                            }
                            let src_row = idx4(c_in, h, w, n, c, y, 0);
                            let go_row = plane + oy as usize * ow;
                            for x in 0..w {
                                let ox = (2 * x + kx) as i64 - 1;
                                if ox < 0 || ox >= ow as i64 {
                                    continue;
                                }
                                let g = go[go_row + ox as usize];
                                acc += g * src[src_row + x];
                                gi[src_row + x] += g * wv;
                            }
                        }
                        gw[widx] += acc;
                    }
                }
            }
        }
    }

    (grad_input, grad_weight, grad_bias)
}

fn shape4(t: &Tensor, what: &str) -> (usize, usize, usize, usize) {
    let s = t.shape();
    assert_eq!(s.len(), 4, "{} must be rank 4, got {:?}", what, s);
    (s[0], s[1], s[2], s[3])
}
