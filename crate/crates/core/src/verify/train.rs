//! Training loop: stratified 80/20 splitting, Adam, early stopping on
//! validation accuracy, evaluation, and one-pass fine-tuning on attack
//! images.

use super::metrics::Metrics;
use super::model::{
    backward_pass, forward_pass, init_weights, EpochStats, ModelConfig, TrainedModel,
};
use super::ops;
use super::tensor::Tensor;
use super::VerifyError;
use crate::rng::{self, streams, SplitMix64};

/// One labeled image: `input_size * input_size` values in `[0, 1]` with ink
/// at 1, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub pixels: Vec<f64>,
    pub genuine: bool,
}

impl Sample {
    pub fn new(pixels: Vec<f64>, genuine: bool) -> Sample {
        Sample { pixels, genuine }
    }
}

/// A dataset already divided into training and validation parts.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
}

/// Shuffles `samples` deterministically and splits them 80/20, stratified by
/// label: within each class, the first 80% (rounded down) trains and the
/// rest validates. Fails with [`VerifyError::EmptySplit`] if either side
/// ends up empty.
pub fn split_dataset(samples: Vec<Sample>, seed: u64) -> Result<SplitDataset, VerifyError> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    SplitMix64::new(rng::derive(seed, streams::SPLIT)).shuffle(&mut order);

    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [true, false] {
        let members: Vec<usize> =
            order.iter().copied().filter(|&i| samples[i].genuine == class).collect();
        let train_n = members.len() * 4 / 5;
        for (k, &i) in members.iter().enumerate() {
            if k < train_n {
                train.push(samples[i].clone());
            } else {
                val.push(samples[i].clone());
            }
        }
    }
    if train.is_empty() {
        return Err(VerifyError::EmptySplit { split: "train" });
    }
    if val.is_empty() {
        return Err(VerifyError::EmptySplit { split: "validation" });
    }
    Ok(SplitDataset { train, val })
}

/// Early-stopping policy: keep training until validation accuracy has not
/// improved for `patience` consecutive epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EarlyStopPolicy {
    pub patience: usize,
}

impl Default for EarlyStopPolicy {
    fn default() -> Self {
        EarlyStopPolicy { patience: 25 }
    }
}

/// What [`EarlyStopping::observe`] concluded about the epoch just finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopSignal {
    /// New best epoch: snapshot the weights.
    Improved,
    /// No improvement, but the patience window is still open.
    Wait,
    /// The window closed: stop after this epoch.
    Stop,
}

/// Tracks the best validation accuracy seen so far. Feed it one metric per
/// epoch; it signals `Stop` on the first epoch numbered
/// `best_epoch + patience` without an intervening improvement (strictly
/// greater counts; ties keep the earlier epoch).
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    next_epoch: usize,
    best: Option<(usize, f64)>,
}

impl EarlyStopping {
    pub fn new(policy: EarlyStopPolicy) -> EarlyStopping {
        EarlyStopping { patience: policy.patience, next_epoch: 0, best: None }
    }

    pub fn observe(&mut self, metric: f64) -> StopSignal {
        let epoch = self.next_epoch;
        self.next_epoch += 1;
        let improved = match self.best {
            None => true,
            Some((_, best)) => metric > best,
        };
        if improved {
            self.best = Some((epoch, metric));
            return StopSignal::Improved;
        }
        if epoch >= self.best.unwrap().0 + self.patience {
            StopSignal::Stop
        } else {
            StopSignal::Wait
        }
    }

    /// Epoch of the best metric so far. Meaningless before the first
    /// `observe` call.
    pub fn best_epoch(&self) -> usize {
        self.best.map(|(e, _)| e).unwrap_or(0)
    }
}

/// Optimizer and loop settings. Defaults: Adam with learning rate 1e-3,
/// betas 0.9/0.999, epsilon 1e-8, batches of 32, and a hard cap of 500
/// epochs as a backstop behind early stopping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 500,
        }
    }
}

/// Adam state: first and second moment estimates per weight tensor. Shared
/// with the adversarial trainer, which runs one instance per network.
pub(crate) struct Adam {
    settings: TrainSettings,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u32,
}

impl Adam {
    pub(crate) fn new(settings: TrainSettings, shapes: &[Vec<usize>]) -> Adam {
        Adam {
            settings,
            m: shapes.iter().cloned().map(Tensor::zeros).collect(),
            v: shapes.iter().cloned().map(Tensor::zeros).collect(),
            t: 0,
        }
    }

    pub(crate) fn step(&mut self, weights: &mut [Tensor], grads: &[Tensor]) {
        self.t += 1;
        let s = &self.settings;
        let bc1 = 1.0 - s.beta1.powi(self.t as i32);
        let bc2 = 1.0 - s.beta2.powi(self.t as i32);
        for ((w, g), (m, v)) in
            weights.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let (wd, gd) = (w.data_mut(), g.data());
            let (md, vd) = (m.data_mut(), v.data_mut());
            for i in 0..wd.len() {
                md[i] = s.beta1 * md[i] + (1.0 - s.beta1) * gd[i];
                vd[i] = s.beta2 * vd[i] + (1.0 - s.beta2) * gd[i] * gd[i];
                let mhat = md[i] / bc1;
                let vhat = vd[i] / bc2;
                wd[i] -= s.learning_rate * mhat / (vhat.sqrt() + s.epsilon);
            }
        }
    }
}

/// Packs `samples[indices]` into a `[n, 1, s, s]` batch plus 0/1 targets.
fn batch_of(samples: &[Sample], indices: &[usize], input_size: usize) -> (Tensor, Vec<f64>) {
    let area = input_size * input_size;
    let mut data = Vec::with_capacity(indices.len() * area);
    let mut targets = Vec::with_capacity(indices.len());
    for &i in indices {
        data.extend_from_slice(&samples[i].pixels);
        targets.push(if samples[i].genuine { 1.0 } else { 0.0 });
    }
    (Tensor::new(vec![indices.len(), 1, input_size, input_size], data), targets)
}

fn check_samples(
    config: &ModelConfig,
    samples: &[Sample],
    what: &str,
) -> Result<(), VerifyError> {
    let area = config.input_size * config.input_size;
    for (i, s) in samples.iter().enumerate() {
        if s.pixels.len() != area {
            return Err(VerifyError::ShapeMismatch {
                expected: format!("{area} pixels per {what} sample"),
                found: format!("{} in sample {i}", s.pixels.len()),
            });
        }
        if s.pixels.iter().any(|v| !v.is_finite()) {
            return Err(VerifyError::BadInput(format!(
                "{what} sample {i} contains non-finite pixels"
            )));
        }
    }
    Ok(())
}

/// Scores samples with raw weights (used mid-training, before a
/// `TrainedModel` exists).
fn metrics_of(config: &ModelConfig, weights: &[Tensor], samples: &[Sample]) -> Metrics {
    let mut metrics = Metrics::from_counts(0, 0, 0, 0);
    let indices: Vec<usize> = (0..samples.len()).collect();
    for chunk in indices.chunks(256) {
        let (batch, _) = batch_of(samples, chunk, config.input_size);
        let cache = forward_pass(config, weights, &batch);
        let probs = ops::sigmoid(&cache.logits);
        let labels: Vec<bool> = chunk.iter().map(|&i| samples[i].genuine).collect();
        metrics.add(&Metrics::from_predictions(&labels, probs.data()));
    }
    metrics
}

/// Trains a verifier from scratch.
///
/// Each epoch shuffles the training set (deterministically in
/// `config.seed`), steps Adam once per batch, and evaluates on the
/// validation set. Training stops when validation accuracy has not improved
/// for `policy.patience` epochs (or at `settings.max_epochs`). The returned
/// model carries the weights of the best validation epoch and the complete
/// epoch history.
pub fn train(
    config: &ModelConfig,
    data: &SplitDataset,
    policy: EarlyStopPolicy,
    settings: &TrainSettings,
) -> Result<TrainedModel, VerifyError> {
    config.validate()?;
    if data.train.is_empty() {
        return Err(VerifyError::EmptySplit { split: "train" });
    }
    if data.val.is_empty() {
        return Err(VerifyError::EmptySplit { split: "validation" });
    }
    check_samples(config, &data.train, "train")?;
    check_samples(config, &data.val, "validation")?;
    assert!(settings.batch_size > 0, "batch_size must be positive");
    assert!(settings.max_epochs > 0, "max_epochs must be positive");

    let mut weights = init_weights(config);
    let mut adam = Adam::new(*settings, &config.weight_shapes());
    let mut shuffler = SplitMix64::new(rng::derive(config.seed, streams::SHUFFLE));
    let mut stopper = EarlyStopping::new(policy);
    let mut history = Vec::new();
    let mut best_weights = weights.clone();

    let n = data.train.len();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..settings.max_epochs {
        shuffler.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(settings.batch_size) {
            let (batch, targets) = batch_of(&data.train, chunk, config.input_size);
            let cache = forward_pass(config, &weights, &batch);
            let (loss, grads) = backward_pass(config, &weights, &batch, &cache, &targets);
            adam.step(&mut weights, &grads);
            loss_sum += loss * chunk.len() as f64;
        }
        let val = metrics_of(config, &weights, &data.val);
        history.push(EpochStats { epoch, train_loss: loss_sum / n as f64, val });
        match stopper.observe(val.accuracy()) {
            StopSignal::Improved => best_weights = weights.clone(),
            StopSignal::Wait => {}
            StopSignal::Stop => break,
        }
    }

    Ok(TrainedModel {
        config: *config,
        weights: best_weights,
        history,
        best_epoch: stopper.best_epoch(),
    })
}

/// Scores a labeled sample set with a trained model.
pub fn evaluate(model: &TrainedModel, samples: &[Sample]) -> Result<Metrics, VerifyError> {
    model.check_consistent()?;
    check_samples(&model.config, samples, "evaluation")?;
    Ok(metrics_of(&model.config, &model.weights, samples))
}

/// Probability of "genuine" for each sample, in order.
pub fn scores(model: &TrainedModel, samples: &[Sample]) -> Result<Vec<f64>, VerifyError> {
    model.check_consistent()?;
    check_samples(&model.config, samples, "scoring")?;
    let indices: Vec<usize> = (0..samples.len()).collect();
    let mut out = Vec::with_capacity(samples.len());
    for chunk in indices.chunks(256) {
        let (batch, _) = batch_of(samples, chunk, model.config.input_size);
        let cache = forward_pass(&model.config, &model.weights, &batch);
        out.extend(ops::sigmoid(&cache.logits).data());
    }
    Ok(out)
}

fn check_objective_inputs(
    config: &ModelConfig,
    weights: &[Tensor],
    samples: &[Sample],
) -> Result<(), VerifyError> {
    config.validate()?;
    let expected = config.weight_shapes();
    if weights.len() != expected.len()
        || weights.iter().zip(&expected).any(|(w, shape)| w.shape() != shape.as_slice())
    {
        return Err(VerifyError::ShapeMismatch {
            expected: format!("{} weight tensors matching the config", expected.len()),
            found: format!("{} tensors", weights.len()),
        });
    }
    if samples.is_empty() {
        return Err(VerifyError::BadInput("objective needs at least one sample".into()));
    }
    check_samples(config, samples, "objective")
}

/// Mean binary cross-entropy of `samples` under raw `weights` — the
/// training objective without the optimizer. Useful for loss-surface
/// probes and finite-difference checks.
pub fn loss(
    config: &ModelConfig,
    weights: &[Tensor],
    samples: &[Sample],
) -> Result<f64, VerifyError> {
    check_objective_inputs(config, weights, samples)?;
    let indices: Vec<usize> = (0..samples.len()).collect();
    let (batch, targets) = batch_of(samples, &indices, config.input_size);
    let cache = forward_pass(config, weights, &batch);
    Ok(ops::bce_with_logits(&cache.logits, &targets).0)
}

/// Like [`loss`], but also returns the gradient of the objective with
/// respect to every weight tensor, in storage order.
pub fn loss_and_gradient(
    config: &ModelConfig,
    weights: &[Tensor],
    samples: &[Sample],
) -> Result<(f64, Vec<Tensor>), VerifyError> {
    check_objective_inputs(config, weights, samples)?;
    let indices: Vec<usize> = (0..samples.len()).collect();
    let (batch, targets) = batch_of(samples, &indices, config.input_size);
    let cache = forward_pass(config, weights, &batch);
    Ok(backward_pass(config, weights, &batch, &cache, &targets))
}

/// Continues training an existing model for `epochs` passes (typically one)
/// over the union of its original training set and a batch of extra images,
/// updating every weight. The configuration, history, and best-epoch record
/// are carried over unchanged; optimizer state starts fresh.
///
/// With `learning_rate` 0 or an empty combined set this is a no-op on the
/// weights.
pub fn fine_tune(
    model: &TrainedModel,
    original_train: &[Sample],
    extra: &[Sample],
    settings: &TrainSettings,
    epochs: usize,
) -> Result<TrainedModel, VerifyError> {
    model.check_consistent()?;
    check_samples(&model.config, original_train, "fine-tune base")?;
    check_samples(&model.config, extra, "fine-tune extra")?;

    let mut combined: Vec<Sample> = Vec::with_capacity(original_train.len() + extra.len());
    combined.extend_from_slice(original_train);
    combined.extend_from_slice(extra);

    let mut weights = model.weights.clone();
    if !combined.is_empty() {
        let config = &model.config;
        let mut adam = Adam::new(*settings, &config.weight_shapes());
        let mut shuffler =
            SplitMix64::new(rng::derive(config.seed, streams::FINE_TUNE));
        let mut order: Vec<usize> = (0..combined.len()).collect();
        for _ in 0..epochs {
            shuffler.shuffle(&mut order);
            for chunk in order.chunks(settings.batch_size) {
                let (batch, targets) = batch_of(&combined, chunk, config.input_size);
                let cache = forward_pass(config, &weights, &batch);
                let (_, grads) = backward_pass(config, &weights, &batch, &cache, &targets);
                adam.step(&mut weights, &grads);
            }
        }
    }

    Ok(TrainedModel {
        config: model.config,
        weights,
        history: model.history.clone(),
        best_epoch: model.best_epoch,
    })
}
