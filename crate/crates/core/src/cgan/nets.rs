//! Generator and discriminator assemblies.
//!
//! Generator: an 8x8 noise plane plus one-hot class planes, upsampled by a
//! stack of 4x4/stride-2 transposed convolutions (LeakyReLU between them),
//! finished by a 3x3 convolution and a sigmoid into one image channel.
//!
//! Discriminator: the image plus the same class planes, two 4x4/stride-2
//! convolutions (LeakyReLU), flatten, inverted dropout before the output
//! (training only), and a single dense logit.

use super::kernels::{
    conv_stride2_backward, conv_stride2_forward, conv_transpose2_backward,
    conv_transpose2_forward,
};
use super::GanConfig;
use crate::rng::SplitMix64;
use crate::verify::ops;
use crate::verify::tensor::Tensor;

/// Shapes of the generator weights, in storage order: per upsampling stage a
/// transpose-conv weight `[C_in, F, 4, 4]` and bias `[F]`, then the 3x3 head
/// `[1, F, 3, 3]` and its bias `[1]`.
pub(crate) fn gen_weight_shapes(config: &GanConfig) -> Vec<Vec<usize>> {
    let mut shapes = Vec::new();
    let mut c_in = 1 + config.num_classes;
    for _ in 0..config.upsample_layers {
        shapes.push(vec![c_in, config.gen_filters, 4, 4]);
        shapes.push(vec![config.gen_filters]);
        c_in = config.gen_filters;
    }
    shapes.push(vec![1, config.gen_filters, 3, 3]);
    shapes.push(vec![1]);
    shapes
}

/// Shapes of the discriminator weights: two stride-2 conv stages
/// `[F, C, 4, 4]` + `[F]`, then the dense output `[1, F * (S/4)^2]` + `[1]`.
pub(crate) fn disc_weight_shapes(config: &GanConfig) -> Vec<Vec<usize>> {
    let side = config.output_side();
    let flat = config.disc_filters * (side / 4) * (side / 4);
    vec![
        vec![config.disc_filters, 1 + config.num_classes, 4, 4],
        vec![config.disc_filters],
        vec![config.disc_filters, config.disc_filters, 4, 4],
        vec![config.disc_filters],
        vec![1, flat],
        vec![1],
    ]
}

fn kaiming_fill(shapes: Vec<Vec<usize>>, gen: &mut SplitMix64) -> Vec<Tensor> {
    shapes
        .into_iter()
        .map(|shape| {
            if shape.len() == 1 {
                return Tensor::zeros(shape);
            }
            // For transpose weights [C, F, k, k] the contributing fan per
            // output pixel is C * k^2 / stride^2; for plain conv and dense
            // it is the full trailing product. The uniform bound only needs
            // the right order of magnitude, so use the trailing product
            // uniformly.
            let fan_in: usize = shape[1..].iter().product();
            let limit = (6.0 / fan_in as f64).sqrt();
            let len = shape.iter().product();
            let data = (0..len).map(|_| gen.range_f64(-limit, limit)).collect();
            Tensor::new(shape, data)
        })
        .collect()
}

/// Deterministic weight init for both networks from the config seed.
pub(crate) fn init_gan_weights(config: &GanConfig) -> (Vec<Tensor>, Vec<Tensor>) {
    use crate::rng::{derive, streams};
    let base = derive(config.seed, streams::GAN_INIT);
    let mut gen_rng = SplitMix64::new(derive(base, 1));
    let mut disc_rng = SplitMix64::new(derive(base, 2));
    (
        kaiming_fill(gen_weight_shapes(config), &mut gen_rng),
        kaiming_fill(disc_weight_shapes(config), &mut disc_rng),
    )
}

/// Generator activations kept for the backward pass.
pub(crate) struct GenCache {
    input: Tensor,
    /// Pre-activation output of each transpose stage.
    pre: Vec<Tensor>,
    /// Post-LeakyReLU output of each transpose stage.
    act: Vec<Tensor>,
    /// Final image batch `[N, 1, S, S]`, values in (0, 1).
    pub out: Tensor,
}

/// Runs the generator on `[N, 1 + num_classes, 8, 8]`.
pub(crate) fn gen_forward(config: &GanConfig, weights: &[Tensor], input: &Tensor) -> GenCache {
    let slope = config.leaky_slope;
    let mut pre = Vec::with_capacity(config.upsample_layers);
    let mut act = Vec::with_capacity(config.upsample_layers);
    let mut current = input.clone();
    for l in 0..config.upsample_layers {
        let p = conv_transpose2_forward(&current, &weights[2 * l], &weights[2 * l + 1]);
        let a = ops::leaky_relu_forward(&p, slope);
        pre.push(p);
        act.push(a.clone());
        current = a;
    }
    let head = 2 * config.upsample_layers;
    let head_pre = ops::conv2d_forward(&current, &weights[head], &weights[head + 1]);
    let out = ops::sigmoid(&head_pre);
    GenCache { input: input.clone(), pre, act, out }
}

/// Gradient of a scalar loss w.r.t. every generator weight, given the loss
/// gradient w.r.t. the output image batch.
pub(crate) fn gen_backward(
    config: &GanConfig,
    weights: &[Tensor],
    cache: &GenCache,
    grad_image: &Tensor,
) -> Vec<Tensor> {
    let slope = config.leaky_slope;
    let mut grads: Vec<Tensor> = gen_weight_shapes(config).into_iter().map(Tensor::zeros).collect();

    // Through the sigmoid: d/dz sigmoid(z) = out * (1 - out).
    let mut grad_head_pre = grad_image.clone();
    for (g, &o) in grad_head_pre.data_mut().iter_mut().zip(cache.out.data()) {
        *g *= o * (1.0 - o);
    }

    let head = 2 * config.upsample_layers;
    let head_input = &cache.act[config.upsample_layers - 1];
    let (mut grad_act, gw, gb) = ops::conv2d_backward(head_input, &weights[head], &grad_head_pre);
    grads[head] = gw;
    grads[head + 1] = gb;

    for l in (0..config.upsample_layers).rev() {
        let grad_pre = ops::leaky_relu_backward(&cache.pre[l], &grad_act, slope);
        let stage_input = if l == 0 { &cache.input } else { &cache.act[l - 1] };
        let (gi, gw, gb) = conv_transpose2_backward(stage_input, &weights[2 * l], &grad_pre);
        grads[2 * l] = gw;
        grads[2 * l + 1] = gb;
        grad_act = gi;
    }
    grads
}

/// Discriminator activations kept for the backward pass.
pub(crate) struct DiscCache {
    input: Tensor,
    pre1: Tensor,
    act1: Tensor,
    pre2: Tensor,
    /// Flattened features after dropout (identical to before-dropout when no
    /// mask was applied).
    flat_dropped: Tensor,
    /// The dropout mask actually applied (1/keep or 0 per element), or None
    /// at inference.
    mask: Option<Tensor>,
    /// Output logits `[N, 1]`.
    pub logits: Tensor,
}

/// Runs the discriminator on `[N, 1 + num_classes, S, S]`. `mask`, when
/// given, is an inverted-dropout mask over the flattened features (entries
/// 0 or 1/keep-rate) used during training only.
pub(crate) fn disc_forward(
    config: &GanConfig,
    weights: &[Tensor],
    input: &Tensor,
    mask: Option<&Tensor>,
) -> DiscCache {
    let slope = config.leaky_slope;
    let n = input.shape()[0];
    let pre1 = conv_stride2_forward(input, &weights[0], &weights[1]);
    let act1 = ops::leaky_relu_forward(&pre1, slope);
    let pre2 = conv_stride2_forward(&act1, &weights[2], &weights[3]);
    let act2 = ops::leaky_relu_forward(&pre2, slope);
    let flat_len = act2.len() / n;
    let flat = act2.reshaped(vec![n, flat_len]);
    let flat_dropped = match mask {
        Some(m) => {
            assert_eq!(m.shape(), flat.shape(), "dropout mask shape");
            let mut d = flat.clone();
            for (v, &k) in d.data_mut().iter_mut().zip(m.data()) {
                *v *= k;
            }
            d
        }
        None => flat,
    };
    let logits = ops::dense_forward(&flat_dropped, &weights[4], &weights[5]);
    DiscCache {
        input: input.clone(),
        pre1,
        act1,
        pre2,
        flat_dropped,
        mask: mask.cloned(),
        logits,
    }
}

/// Gradients of the loss w.r.t. the discriminator weights and its input
/// batch, given the loss gradient w.r.t. the logits.
pub(crate) fn disc_backward(
    config: &GanConfig,
    weights: &[Tensor],
    cache: &DiscCache,
    grad_logits: &Tensor,
) -> (Vec<Tensor>, Tensor) {
    let slope = config.leaky_slope;
    let mut grads: Vec<Tensor> =
        disc_weight_shapes(config).into_iter().map(Tensor::zeros).collect();

    let (grad_flat_dropped, gw, gb) = ops::dense_backward(&cache.flat_dropped, &weights[4], grad_logits);
    grads[4] = gw;
    grads[5] = gb;

    let mut grad_flat = grad_flat_dropped;
    if let Some(mask) = &cache.mask {
        for (g, &k) in grad_flat.data_mut().iter_mut().zip(mask.data()) {
            *g *= k;
        }
    }

    let grad_act2 = grad_flat.reshaped(cache.pre2.shape().to_vec());
    let grad_pre2 = ops::leaky_relu_backward(&cache.pre2, &grad_act2, slope);
    let (grad_act1, gw, gb) = conv_stride2_backward(&cache.act1, &weights[2], &grad_pre2);
    grads[2] = gw;
    grads[3] = gb;

    let grad_pre1 = ops::leaky_relu_backward(&cache.pre1, &grad_act1, slope);
    let (grad_input, gw, gb) = conv_stride2_backward(&cache.input, &weights[0], &grad_pre1);
    grads[0] = gw;
    grads[1] = gb;

    (grads, grad_input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgan::NOISE_SIDE;
    use crate::verify::ops::bce_with_logits;

    fn small_config(seed: u64) -> GanConfig {
        GanConfig {
            upsample_layers: 3,
            gen_filters: 2,
            disc_filters: 2,
            leaky_slope: 0.2,
            dropout: 0.4,
            num_classes: 2,
            seed,
        }
    }

    fn random_tensor(rng: &mut SplitMix64, shape: Vec<usize>) -> Tensor {
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.range_f64(-0.8, 0.8)).collect();
        Tensor::new(shape, data)
    }

    #[test]
    fn shapes_at_desk_scale() {
        let config = GanConfig::desk_default(0);
        assert_eq!(config.output_side(), 64);
        let gen = gen_weight_shapes(&config);
        assert_eq!(gen[0], vec![3, 128, 4, 4]);
        assert_eq!(gen[2], vec![128, 128, 4, 4]);
        assert_eq!(gen[gen.len() - 2], vec![1, 128, 3, 3]);
        assert_eq!(gen.len(), 2 * 3 + 2);
        let disc = disc_weight_shapes(&config);
        assert_eq!(disc[0], vec![128, 3, 4, 4]);
        assert_eq!(disc[4], vec![1, 128 * 16 * 16]);
    }

    #[test]
    fn full_scale_reaches_256() {
        let config = GanConfig::full_scale(0);
        assert_eq!(config.upsample_layers, 5);
        assert_eq!(config.output_side(), 256);
    }

    #[test]
    fn generator_emits_open_unit_interval_images_of_the_right_side() {
        let config = small_config(3);
        let (gen_w, _) = init_gan_weights(&config);
        let mut rng = SplitMix64::new(8);
        let input = random_tensor(&mut rng, vec![2, 3, NOISE_SIDE, NOISE_SIDE]);
        let cache = gen_forward(&config, &gen_w, &input);
        assert_eq!(cache.out.shape(), &[2, 1, 64, 64]);
        assert!(cache.out.data().iter().all(|v| v.is_finite() && *v > 0.0 && *v < 1.0));
    }

    #[test]
    fn init_is_deterministic_and_nets_are_independent() {
        let config = small_config(9);
        let (g1, d1) = init_gan_weights(&config);
        let (g2, d2) = init_gan_weights(&config);
        assert_eq!(g1, g2);
        assert_eq!(d1, d2);
        // First tensors of each net must differ (separate streams).
        assert_ne!(g1[0].data()[0], d1[0].data()[0]);
    }

    /// Generator gradient check at desk spatial scale (64x64, 3 upsampling
    /// stages) with a thin filter bank so every coordinate can be checked.
    #[test]
    fn generator_gradients_match_finite_differences() {
        let config = small_config(5);
        let (mut weights, _) = init_gan_weights(&config);
        let mut rng = SplitMix64::new(17);
        let input = random_tensor(&mut rng, vec![2, 3, NOISE_SIDE, NOISE_SIDE]);
        // Scalar objective: sum of squared deviations of the output image
        // from 0.5. Centering keeps the objective small (outputs sit near
        // 0.5 at init), so the finite difference is not lost to roundoff in
        // an 8192-term sum.
        let objective = |weights: &[Tensor]| -> f64 {
            gen_forward(&config, weights, &input)
                .out
                .data()
                .iter()
                .map(|v| (v - 0.5) * (v - 0.5))
                .sum()
        };
        let cache = gen_forward(&config, &weights, &input);
        let mut grad_img = cache.out.clone();
        for v in grad_img.data_mut() {
            *v = 2.0 * (*v - 0.5);
        }
        let grads = gen_backward(&config, &weights, &cache, &grad_img);

        let step = 1e-6;
        for t in 0..weights.len() {
            for i in 0..weights[t].len() {
                let keep = weights[t].data()[i];
                weights[t].data_mut()[i] = keep + step;
                let hi = objective(&weights);
                weights[t].data_mut()[i] = keep - step;
                let lo = objective(&weights);
                weights[t].data_mut()[i] = keep;
                let numeric = (hi - lo) / (2.0 * step);
                let analytic = grads[t].data()[i];
                let rel =
                    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4);
                assert!(rel < 1e-5, "gen tensor {t} coord {i}: {analytic} vs {numeric}");
            }
        }
    }

    /// Discriminator gradient check (dropout disabled), including the
    /// gradient flowing back into the input image planes.
    #[test]
    fn discriminator_gradients_match_finite_differences() {
        let config = small_config(6);
        let (_, mut weights) = init_gan_weights(&config);
        let side = config.output_side();
        let mut rng = SplitMix64::new(18);
        let input = random_tensor(&mut rng, vec![2, 3, side, side]);
        let targets = [1.0, 0.0];

        let cache = disc_forward(&config, &weights, &input, None);
        let (_, grad_logits) = bce_with_logits(&cache.logits.clone().reshaped(vec![2]), &targets);
        let grad_logits = grad_logits.reshaped(vec![2, 1]);
        let (grads, grad_input) = disc_backward(&config, &weights, &cache, &grad_logits);

        let loss_of = |weights: &[Tensor], input: &Tensor| -> f64 {
            let cache = disc_forward(&config, weights, input, None);
            bce_with_logits(&cache.logits.clone().reshaped(vec![2]), &targets).0
        };

        let step = 1e-6;
        for t in 0..weights.len() {
            for i in 0..weights[t].len() {
                let keep = weights[t].data()[i];
                weights[t].data_mut()[i] = keep + step;
                let hi = loss_of(&weights, &input);
                weights[t].data_mut()[i] = keep - step;
                let lo = loss_of(&weights, &input);
                weights[t].data_mut()[i] = keep;
                let numeric = (hi - lo) / (2.0 * step);
                let analytic = grads[t].data()[i];
                let rel =
                    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4);
                assert!(rel < 1e-5, "disc tensor {t} coord {i}: {analytic} vs {numeric}");
            }
        }

        // Spot-check the input gradient on a few hundred coordinates (the
        // full input has 3 * 64 * 64 * 2 entries).
        let mut probe = input.clone();
        for i in (0..probe.len()).step_by(97) {
            let keep = probe.data()[i];
            probe.data_mut()[i] = keep + step;
            let hi = loss_of(&weights, &probe);
            probe.data_mut()[i] = keep - step;
            let lo = loss_of(&weights, &probe);
            probe.data_mut()[i] = keep;
            let numeric = (hi - lo) / (2.0 * step);
            let analytic = grad_input.data()[i];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4);
            assert!(rel < 1e-5, "input coord {i}: {analytic} vs {numeric}");
        }
    }

    #[test]
    fn dropout_mask_scales_features_and_gradients() {
        let config = small_config(7);
        let (_, weights) = init_gan_weights(&config);
        let side = config.output_side();
        let mut rng = SplitMix64::new(19);
        let input = random_tensor(&mut rng, vec![1, 3, side, side]);
        let flat = config.disc_filters * (side / 4) * (side / 4);

        // A mask that keeps everything is a no-op.
        let ones = Tensor::new(vec![1, flat], vec![1.0; flat]);
        let with = disc_forward(&config, &weights, &input, Some(&ones));
        let without = disc_forward(&config, &weights, &input, None);
        assert_eq!(with.logits, without.logits);

        // A mask that zeroes everything leaves only the output bias.
        let zeros = Tensor::zeros(vec![1, flat]);
        let gated = disc_forward(&config, &weights, &input, Some(&zeros));
        assert_eq!(gated.logits.data()[0], weights[5].data()[0]);
    }
}
