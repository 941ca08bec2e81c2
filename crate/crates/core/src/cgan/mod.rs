//! Conditional GAN forger.
//!
//! A generator upsamples an 8x8 noise grid into a signature-sized image,
//! conditioned on the class (genuine or forged) by one-hot label planes
//! concatenated to its input; a discriminator scores image/label pairs with
//! two stride-2 convolutions and a dense logit. Training alternates
//! discriminator and generator steps per batch under a non-saturating
//! binary cross-entropy loss, recording both loss curves per epoch for
//! export. Sampling and scoring are deterministic given the seed; all
//! stochastic draws (init, noise, dropout, shuffling) come from independent
//! derived streams.
//!
//! The desk-scale default generates 64x64 images through 3 upsampling
//! stages; the full-scale configuration (5 stages, 256x256) is the same
//! code with a different [`GanConfig`].

mod checkpoint;
mod kernels;
mod nets;
mod train;

pub use checkpoint::{load_gan, save_gan};
pub use train::{discriminate, generate, losses_tsv, train_gan};

use crate::verify::tensor::Tensor;
use thiserror::Error;

/// Side of the square noise grid the generator upsamples from.
pub const NOISE_SIDE: usize = 8;

/// Errors from GAN configuration, training, scoring, and persistence.
#[derive(Debug, Error)]
pub enum GanError {
    #[error("invalid GAN config: {0}")]
    BadConfig(String),
    #[error("bad training data: {0}")]
    BadData(String),
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("training diverged at epoch {epoch}: non-finite loss or weight")]
    Diverged { epoch: usize },
    #[error("bad GAN checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<crate::verify::VerifyError> for GanError {
    fn from(err: crate::verify::VerifyError) -> GanError {
        match err {
            crate::verify::VerifyError::Io(e) => GanError::Io(e),
            other => GanError::BadCheckpoint(other.to_string()),
        }
    }
}

/// Architecture and seeding of one GAN.
///
/// Fixed by construction: the noise grid is [`NOISE_SIDE`]x[`NOISE_SIDE`],
/// the discriminator has exactly two convolution stages with stride (2,2),
/// generator stages use 4x4/stride-2 transposed convolutions, and dropout
/// sits immediately before the discriminator output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GanConfig {
    /// Number of 2x upsampling stages; the output side is
    /// `NOISE_SIDE << upsample_layers`.
    pub upsample_layers: usize,
    /// Filters per generator stage.
    pub gen_filters: usize,
    /// Filters per discriminator stage.
    pub disc_filters: usize,
    /// Negative-side slope of every LeakyReLU.
    pub leaky_slope: f64,
    /// Drop probability of the inverted dropout before the discriminator
    /// output (training only).
    pub dropout: f64,
    /// Number of label classes, hence one-hot planes; always 2 here.
    pub num_classes: usize,
    /// Seed for weight init, noise, dropout, shuffling, and sampling.
    pub seed: u64,
}

impl GanConfig {
    /// Desk-scale default: 64x64 output through 3 upsampling stages, 128
    /// filters per stage, slope 0.2, dropout 0.4.
    pub fn desk_default(seed: u64) -> GanConfig {
        GanConfig {
            upsample_layers: 3,
            gen_filters: 128,
            disc_filters: 128,
            leaky_slope: 0.2,
            dropout: 0.4,
            num_classes: 2,
            seed,
        }
    }

    /// Full-scale configuration: 256x256 output through 5 upsampling stages.
    pub fn full_scale(seed: u64) -> GanConfig {
        GanConfig { upsample_layers: 5, ..GanConfig::desk_default(seed) }
    }

    /// Side of generated images: `NOISE_SIDE * 2^upsample_layers`.
    pub fn output_side(&self) -> usize {
        NOISE_SIDE << self.upsample_layers
    }

    pub fn validate(&self) -> Result<(), GanError> {
        let bad = |msg: String| Err(GanError::BadConfig(msg));
        if !(1..=6).contains(&self.upsample_layers) {
            return bad(format!("upsample_layers {} outside 1..=6", self.upsample_layers));
        }
        for (name, v) in [("gen_filters", self.gen_filters), ("disc_filters", self.disc_filters)]
        {
            if v == 0 || v > 1024 {
                return bad(format!("{name} {v} outside 1..=1024"));
            }
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return bad(format!("leaky_slope {} outside (0, 1)", self.leaky_slope));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.num_classes != 2 {
            return bad(format!("num_classes {} != 2", self.num_classes));
        }
        Ok(())
    }
}

/// Weights and loss history of a GAN after `epoch` training epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct GanState {
    /// Generator weights: per stage a transpose-conv kernel and bias, then
    /// the 3x3 head kernel and bias.
    pub gen_weights: Vec<Tensor>,
    /// Discriminator weights: two conv kernel/bias pairs, then the dense
    /// output weight and bias.
    pub disc_weights: Vec<Tensor>,
    /// Completed training epochs.
    pub epoch: usize,
    /// Mean generator loss per epoch; `epoch` entries.
    pub gen_loss_history: Vec<f64>,
    /// Mean discriminator loss per epoch; `epoch` entries.
    pub disc_loss_history: Vec<f64>,
}

impl GanState {
    /// Verifies the structural invariants: weight shapes match the config,
    /// histories have exactly `epoch` entries, and every stored number is
    /// finite.
    pub fn check_consistent(&self, config: &GanConfig) -> Result<(), GanError> {
        config.validate()?;
        let check_shapes = |what: &str, weights: &[Tensor], shapes: Vec<Vec<usize>>| {
            if weights.len() != shapes.len() {
                return Err(GanError::ShapeMismatch {
                    expected: format!("{} {} tensors", shapes.len(), what),
                    found: format!("{}", weights.len()),
                });
            }
            for (w, shape) in weights.iter().zip(&shapes) {
                if w.shape() != &shape[..] {
                    return Err(GanError::ShapeMismatch {
                        expected: format!("{what} tensor {shape:?}"),
                        found: format!("{:?}", w.shape()),
                    });
                }
                if !w.all_finite() {
                    return Err(GanError::BadConfig(format!("non-finite {what} weight")));
                }
            }
            Ok(())
        };
        check_shapes("generator", &self.gen_weights, nets::gen_weight_shapes(config))?;
        check_shapes("discriminator", &self.disc_weights, nets::disc_weight_shapes(config))?;
        if self.gen_loss_history.len() != self.epoch
            || self.disc_loss_history.len() != self.epoch
        {
            return Err(GanError::BadConfig(format!(
                "history lengths {}/{} do not match epoch {}",
                self.gen_loss_history.len(),
                self.disc_loss_history.len(),
                self.epoch
            )));
        }
        if self
            .gen_loss_history
            .iter()
            .chain(&self.disc_loss_history)
            .any(|l| !l.is_finite())
        {
            return Err(GanError::BadConfig("non-finite loss in history".into()));
        }
        Ok(())
    }
}
