//! Adversarial training, sampling, and scoring.
//!
//! Each batch takes one discriminator step (real images toward 1, generated
//! images toward 0, loss averaged over both halves) followed by one
//! generator step (non-saturating: generated images toward 1 under the
//! freshly updated discriminator). Both networks use Adam with learning
//! rate 2e-4 and beta1 0.5. Noise, dropout masks, and the per-epoch shuffle
//! draw from independent streams of the config seed, so a fixed seed makes
//! the whole run bit-reproducible.

use super::nets::{
    disc_backward, disc_forward, disc_weight_shapes, gen_backward, gen_forward,
    gen_weight_shapes, init_gan_weights,
};
use super::{GanConfig, GanError, GanState, NOISE_SIDE};
use crate::raster::{GrayImage, Label};
use crate::rng::{derive, streams, SplitMix64};
use crate::verify::ops;
use crate::verify::tensor::Tensor;
use crate::verify::train::{Adam, Sample, TrainSettings};

/// Adam settings for both adversaries.
fn gan_settings() -> TrainSettings {
    TrainSettings { learning_rate: 2e-4, beta1: 0.5, ..TrainSettings::default() }
}

/// Builds the generator input `[N, 1 + num_classes, 8, 8]`: one fresh
/// uniform-noise plane per image plus one-hot class planes.
fn noise_input(rng: &mut SplitMix64, genuine: &[bool]) -> Tensor {
    let n = genuine.len();
    let plane = NOISE_SIDE * NOISE_SIDE;
    let mut data = Vec::with_capacity(n * 3 * plane);
    for &g in genuine {
        for _ in 0..plane {
            data.push(rng.next_f64());
        }
        data.extend(std::iter::repeat(if g { 1.0 } else { 0.0 }).take(plane));
        data.extend(std::iter::repeat(if g { 0.0 } else { 1.0 }).take(plane));
    }
    Tensor::new(vec![n, 3, NOISE_SIDE, NOISE_SIDE], data)
}

/// Builds the discriminator input `[N, 1 + num_classes, S, S]` from one
/// image plane per sample plus one-hot class planes.
fn image_input(planes: &[&[f64]], genuine: &[bool], side: usize) -> Tensor {
    assert_eq!(planes.len(), genuine.len());
    let area = side * side;
    let mut data = Vec::with_capacity(planes.len() * 3 * area);
    for (plane, &g) in planes.iter().zip(genuine) {
        assert_eq!(plane.len(), area, "image plane size");
        data.extend_from_slice(plane);
        data.extend(std::iter::repeat(if g { 1.0 } else { 0.0 }).take(area));
        data.extend(std::iter::repeat(if g { 0.0 } else { 1.0 }).take(area));
    }
    Tensor::new(vec![planes.len(), 3, side, side], data)
}

/// Fresh inverted-dropout mask over `[n, flat]`: 0 with probability `p`,
/// otherwise `1/(1-p)`. `None` when dropout is disabled.
fn dropout_mask(rng: &mut SplitMix64, n: usize, flat: usize, p: f64) -> Option<Tensor> {
    if p == 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - p);
    let data = (0..n * flat).map(|_| if rng.next_f64() < p { 0.0 } else { keep }).collect();
    Some(Tensor::new(vec![n, flat], data))
}

fn check_data(data: &[Sample], side: usize) -> Result<(), GanError> {
    if data.is_empty() {
        return Err(GanError::BadData("no training images".into()));
    }
    if data.iter().all(|s| s.genuine) || data.iter().all(|s| !s.genuine) {
        return Err(GanError::BadData("training data must contain both classes".into()));
    }
    let area = side * side;
    for (i, s) in data.iter().enumerate() {
        if s.pixels.len() != area {
            return Err(GanError::ShapeMismatch {
                expected: format!("{area} pixels ({side}x{side})"),
                found: format!("{} pixels in image {i}", s.pixels.len()),
            });
        }
        if s.pixels.iter().any(|p| !p.is_finite()) {
            return Err(GanError::BadData(format!("non-finite pixel in image {i}")));
        }
    }
    Ok(())
}

fn all_finite(tensors: &[Tensor]) -> bool {
    tensors.iter().all(Tensor::all_finite)
}

fn add_scaled(acc: &mut [Tensor], delta: &[Tensor], scale: f64) {
    for (a, d) in acc.iter_mut().zip(delta) {
        for (x, y) in a.data_mut().iter_mut().zip(d.data()) {
            *x += scale * y;
        }
    }
}

/// Trains a fresh GAN on `data` for `epochs` epochs.
///
/// `data` must contain both classes; pixel values are ink intensities in
/// `[0, 1]` and each image must match the config's output side. Zero epochs
/// returns the untouched initialization with empty histories.
pub fn train_gan(data: &[Sample], config: &GanConfig, epochs: usize) -> Result<GanState, GanError> {
    train_gan_with(data, config, epochs, &gan_settings())
}

/// Training loop with explicit optimizer settings (the public entry point
/// fixes them); split out so tests can force pathological learning rates.
pub(crate) fn train_gan_with(
    data: &[Sample],
    config: &GanConfig,
    epochs: usize,
    settings: &TrainSettings,
) -> Result<GanState, GanError> {
    config.validate()?;
    let side = config.output_side();
    check_data(data, side)?;

    let (mut gen_w, mut disc_w) = init_gan_weights(config);
    let mut gen_opt = Adam::new(*settings, &gen_weight_shapes(config));
    let mut disc_opt = Adam::new(*settings, &disc_weight_shapes(config));

    let mut noise_rng = SplitMix64::new(derive(config.seed, streams::GAN_NOISE));
    let mut dropout_rng = SplitMix64::new(derive(config.seed, streams::GAN_DROPOUT));
    let mut shuffle_rng = SplitMix64::new(derive(config.seed, streams::GAN_SHUFFLE));

    let flat = config.disc_filters * (side / 4) * (side / 4);
    let mut gen_losses = Vec::with_capacity(epochs);
    let mut disc_losses = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..epochs {
        shuffle_rng.shuffle(&mut order);
        let mut epoch_gen = 0.0;
        let mut epoch_disc = 0.0;

        for chunk in order.chunks(settings.batch_size) {
            let n = chunk.len();
            let genuine: Vec<bool> = chunk.iter().map(|&i| data[i].genuine).collect();
            let real_planes: Vec<&[f64]> =
                chunk.iter().map(|&i| data[i].pixels.as_slice()).collect();
            let real_input = image_input(&real_planes, &genuine, side);

            // Generate one fake per real image, with matching labels.
            let gen_in = noise_input(&mut noise_rng, &genuine);
            let gen_cache = gen_forward(config, &gen_w, &gen_in);
            let fake_planes: Vec<&[f64]> =
                gen_cache.out.data().chunks(side * side).collect();
            let fake_input = image_input(&fake_planes, &genuine, side);

            // Discriminator step: real toward 1, fake toward 0, each half
            // contributing half of the loss and gradient.
            let ones = vec![1.0; n];
            let zeros = vec![0.0; n];
            let mask_r = dropout_mask(&mut dropout_rng, n, flat, config.dropout);
            let cache_r = disc_forward(config, &disc_w, &real_input, mask_r.as_ref());
            let (loss_r, grad_r) =
                ops::bce_with_logits(&cache_r.logits.clone().reshaped(vec![n]), &ones);
            let mask_f = dropout_mask(&mut dropout_rng, n, flat, config.dropout);
            let cache_f = disc_forward(config, &disc_w, &fake_input, mask_f.as_ref());
            let (loss_f, grad_f) =
                ops::bce_with_logits(&cache_f.logits.clone().reshaped(vec![n]), &zeros);

            let (grads_r, _) =
                disc_backward(config, &disc_w, &cache_r, &grad_r.reshaped(vec![n, 1]));
            let (grads_f, _) =
                disc_backward(config, &disc_w, &cache_f, &grad_f.reshaped(vec![n, 1]));
            let mut disc_grads: Vec<Tensor> =
                disc_weight_shapes(config).into_iter().map(Tensor::zeros).collect();
            add_scaled(&mut disc_grads, &grads_r, 0.5);
            add_scaled(&mut disc_grads, &grads_f, 0.5);
            disc_opt.step(&mut disc_w, &disc_grads);
            let disc_loss = 0.5 * (loss_r + loss_f);

            // Generator step (non-saturating): push the same fakes toward 1
            // under the updated discriminator. The generator activations are
            // still valid because only discriminator weights moved.
            let mask_g = dropout_mask(&mut dropout_rng, n, flat, config.dropout);
            let cache_g = disc_forward(config, &disc_w, &fake_input, mask_g.as_ref());
            let (gen_loss, grad_g) =
                ops::bce_with_logits(&cache_g.logits.clone().reshaped(vec![n]), &ones);
            let (_, grad_fake_input) =
                disc_backward(config, &disc_w, &cache_g, &grad_g.reshaped(vec![n, 1]));
            // Only the image plane (channel 0) feeds back into the generator;
            // the label planes are constants.
            let area = side * side;
            let mut grad_image = Tensor::zeros(vec![n, 1, side, side]);
            for i in 0..n {
                let src = i * 3 * area;
                grad_image.data_mut()[i * area..(i + 1) * area]
                    .copy_from_slice(&grad_fake_input.data()[src..src + area]);
            }
            let gen_grads = gen_backward(config, &gen_w, &gen_cache, &grad_image);
            gen_opt.step(&mut gen_w, &gen_grads);

            epoch_disc += disc_loss * n as f64;
            epoch_gen += gen_loss * n as f64;
        }

        let scale = 1.0 / data.len() as f64;
        let (g, d) = (epoch_gen * scale, epoch_disc * scale);
        if !(g.is_finite() && d.is_finite() && all_finite(&gen_w) && all_finite(&disc_w)) {
            return Err(GanError::Diverged { epoch });
        }
        gen_losses.push(g);
        disc_losses.push(d);
    }

    let state = GanState {
        gen_weights: gen_w,
        disc_weights: disc_w,
        epoch: epochs,
        gen_loss_history: gen_losses,
        disc_loss_history: disc_losses,
    };
    state.check_consistent(config)?;
    Ok(state)
}

/// Samples `n` images of the given class. Deterministic in (seed, label, n):
/// image `i` of a run is identical regardless of how many follow it.
/// Output bytes use the dataset convention: ink dark (0), paper light (255).
pub fn generate(
    state: &GanState,
    config: &GanConfig,
    label: Label,
    n: usize,
) -> Result<Vec<GrayImage>, GanError> {
    state.check_consistent(config)?;
    if n == 0 {
        return Err(GanError::BadData("cannot generate 0 images".into()));
    }
    let side = config.output_side();
    let class_tag = match label {
        Label::Genuine => 1,
        Label::Forged => 2,
    };
    let mut rng = SplitMix64::new(derive(derive(config.seed, streams::GAN_SAMPLE), class_tag));
    let genuine = label == Label::Genuine;

    let mut images = Vec::with_capacity(n);
    let mut remaining = n;
    while remaining > 0 {
        let batch = remaining.min(16);
        let input = noise_input(&mut rng, &vec![genuine; batch]);
        let cache = gen_forward(config, &state.gen_weights, &input);
        for plane in cache.out.data().chunks(side * side) {
            let bytes = plane
                .iter()
                .map(|&v| 255 - (255.0 * v.clamp(0.0, 1.0)).round() as u8)
                .collect();
            images.push(GrayImage::new(side, side, bytes));
        }
        remaining -= batch;
    }
    Ok(images)
}

/// Scores one image/label pair with the discriminator (dropout disabled):
/// the probability the discriminator assigns to "real".
pub fn discriminate(
    state: &GanState,
    config: &GanConfig,
    image: &GrayImage,
    label: Label,
) -> Result<f64, GanError> {
    state.check_consistent(config)?;
    let side = config.output_side();
    if image.width() != side || image.height() != side {
        return Err(GanError::ShapeMismatch {
            expected: format!("{side}x{side} image"),
            found: format!("{}x{}", image.width(), image.height()),
        });
    }
    let plane: Vec<f64> = image.pixels().iter().map(|&b| 1.0 - b as f64 / 255.0).collect();
    let input = image_input(&[&plane], &[label == Label::Genuine], side);
    let cache = disc_forward(config, &state.disc_weights, &input, None);
    Ok(ops::sigmoid_scalar(cache.logits.data()[0]))
}

/// Loss curves as TSV for external plotting: `epoch\tgen_loss\tdisc_loss`,
/// one row per completed epoch, epochs counted from 0.
pub fn losses_tsv(state: &GanState) -> String {
    let mut out = String::from("epoch\tgen_loss\tdisc_loss\n");
    for (epoch, (g, d)) in
        state.gen_loss_history.iter().zip(&state.disc_loss_history).enumerate()
    {
        out.push_str(&format!("{epoch}\t{g:.6}\t{d:.6}\n"));
    }
    out
}
