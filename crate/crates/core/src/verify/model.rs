//! Verifier architecture: a stack of 3x3 conv + ReLU + 2x2 max-pool blocks,
//! a small ReLU multilayer perceptron, and a single logistic output unit.
//!
//! The weight list is flat and ordered (conv weight, conv bias, ... mlp
//! weight, mlp bias, ..., output weight, output bias) so snapshots,
//! optimizer state, and checkpoints can address parameters by position.

use super::metrics::Metrics;
use super::ops;
use super::tensor::Tensor;
use super::VerifyError;
use crate::rng::{self, streams, SplitMix64};

/// Conv-block depths the trainer accepts.
pub const ALLOWED_CONV_LAYERS: [usize; 3] = [1, 2, 3];
/// Filter counts the trainer accepts (same count in every conv block).
pub const ALLOWED_FILTERS: [usize; 3] = [16, 32, 64];
/// Hidden dense-layer depths the trainer accepts.
pub const ALLOWED_MLP_LAYERS: [usize; 2] = [1, 2];
/// Hidden dense-layer widths the trainer accepts.
pub const ALLOWED_MLP_NEURONS: [usize; 5] = [16, 32, 64, 128, 256];

/// Hyperparameters that fix the network shape and its weight initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    /// Side length of the square input raster.
    pub input_size: usize,
    pub conv_layers: usize,
    /// Filters per conv block.
    pub filters: usize,
    pub mlp_layers: usize,
    /// Neurons per hidden dense layer.
    pub mlp_neurons: usize,
    /// Seed for weight initialization and training-time shuffles.
    pub seed: u64,
}

impl ModelConfig {
    /// The desk-scale default: 64x64 input, two conv blocks of 32 filters,
    /// one 128-unit hidden layer.
    pub fn desk_default(seed: u64) -> ModelConfig {
        ModelConfig {
            input_size: 64,
            conv_layers: 2,
            filters: 32,
            mlp_layers: 1,
            mlp_neurons: 128,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        let member = |value: usize, allowed: &[usize], what: &str| {
            if allowed.contains(&value) {
                Ok(())
            } else {
                Err(VerifyError::InvalidConfig(format!(
                    "{what} must be one of {allowed:?}, got {value}"
                )))
            }
        };
        member(self.conv_layers, &ALLOWED_CONV_LAYERS, "conv_layers")?;
        member(self.filters, &ALLOWED_FILTERS, "filters")?;
        member(self.mlp_layers, &ALLOWED_MLP_LAYERS, "mlp_layers")?;
        member(self.mlp_neurons, &ALLOWED_MLP_NEURONS, "mlp_neurons")?;
        let min_input = 1usize << self.conv_layers;
        if self.input_size < min_input {
            return Err(VerifyError::InvalidConfig(format!(
                "input_size {} too small for {} pooling stages (need at least {})",
                self.input_size, self.conv_layers, min_input
            )));
        }
        Ok(())
    }

    /// Side length of the feature map after each pooling stage.
    pub fn stage_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.conv_layers + 1);
        let mut s = self.input_size;
        sizes.push(s);
        for _ in 0..self.conv_layers {
            s /= 2;
            sizes.push(s);
        }
        sizes
    }

    /// Length of the flattened feature vector entering the MLP.
    pub fn flat_features(&self) -> usize {
        let side = *self.stage_sizes().last().unwrap();
        self.filters * side * side
    }

    /// Shapes of every weight tensor, in storage order.
    pub fn weight_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        let mut in_c = 1;
        for _ in 0..self.conv_layers {
            shapes.push(vec![self.filters, in_c, 3, 3]);
            shapes.push(vec![self.filters]);
            in_c = self.filters;
        }
        let mut in_dim = self.flat_features();
        for _ in 0..self.mlp_layers {
            shapes.push(vec![self.mlp_neurons, in_dim]);
            shapes.push(vec![self.mlp_neurons]);
            in_dim = self.mlp_neurons;
        }
        shapes.push(vec![1, in_dim]);
        shapes.push(vec![1]);
        shapes
    }

    pub fn parameter_count(&self) -> usize {
        self.weight_shapes().iter().map(|s| s.iter().product::<usize>()).sum()
    }
}

/// Kaiming-uniform initialization: weights uniform in
/// `[-sqrt(6 / fan_in), sqrt(6 / fan_in)]`, biases zero. Deterministic in
/// `config.seed`; the weight-init random stream is independent of the
/// shuffle and augmentation streams.
pub fn init_weights(config: &ModelConfig) -> Vec<Tensor> {
    let mut gen = SplitMix64::new(rng::derive(config.seed, streams::WEIGHT_INIT));
    config
        .weight_shapes()
        .into_iter()
        .map(|shape| {
            if shape.len() == 1 {
                return Tensor::zeros(shape); // bias
            }
            let fan_in: usize = shape[1..].iter().product();
            let limit = (6.0 / fan_in as f64).sqrt();
            let len = shape.iter().product();
            let data = (0..len).map(|_| gen.range_f64(-limit, limit)).collect();
            Tensor::new(shape, data)
        })
        .collect()
}

/// Intermediate activations kept for the backward pass.
pub(crate) struct ForwardCache {
    /// Pre-ReLU conv outputs, one per conv block.
    conv_pre: Vec<Tensor>,
    /// Post-ReLU conv outputs (the pooling inputs), one per conv block.
    pool_in: Vec<Tensor>,
    /// Flat argmax indices per pooling stage.
    pool_argmax: Vec<Vec<usize>>,
    /// Flattened features `[N, flat]`.
    flat: Tensor,
    /// Pre-ReLU dense outputs, one per hidden layer.
    mlp_pre: Vec<Tensor>,
    /// Post-ReLU dense outputs, one per hidden layer.
    mlp_act: Vec<Tensor>,
    /// Output-unit logits `[N, 1]`.
    pub logits: Tensor,
}

/// Runs the network on a validated `[N, 1, S, S]` batch.
pub(crate) fn forward_pass(config: &ModelConfig, weights: &[Tensor], input: &Tensor) -> ForwardCache {
    let n = input.shape()[0];
    let mut conv_pre = Vec::with_capacity(config.conv_layers);
    let mut pool_in = Vec::with_capacity(config.conv_layers);
    let mut pool_argmax = Vec::with_capacity(config.conv_layers);
    let mut current = input.clone();
    for l in 0..config.conv_layers {
        let pre = ops::conv2d_forward(&current, &weights[2 * l], &weights[2 * l + 1]);
        let act = ops::relu_forward(&pre);
        let (pooled, argmax) = ops::maxpool2_forward(&act);
        conv_pre.push(pre);
        pool_in.push(act);
        pool_argmax.push(argmax);
        current = pooled;
    }
    // Flatten in (channel, y, x) order, which is how the data already sits.
    let flat = current.reshaped(vec![n, config.flat_features()]);

    let mut mlp_pre = Vec::with_capacity(config.mlp_layers);
    let mut mlp_act = Vec::with_capacity(config.mlp_layers);
    let mut vector = flat.clone();
    let dense_base = 2 * config.conv_layers;
    for m in 0..config.mlp_layers {
        let pre = ops::dense_forward(&vector, &weights[dense_base + 2 * m], &weights[dense_base + 2 * m + 1]);
        let act = ops::relu_forward(&pre);
        mlp_pre.push(pre);
        mlp_act.push(act.clone());
        vector = act;
    }
    let out_base = dense_base + 2 * config.mlp_layers;
    let logits = ops::dense_forward(&vector, &weights[out_base], &weights[out_base + 1]);

    ForwardCache { conv_pre, pool_in, pool_argmax, flat, mlp_pre, mlp_act, logits }
}

/// Mean binary cross-entropy of the cached batch against `targets` (1 =
/// genuine), plus the gradient of that loss with respect to every weight
/// tensor, in storage order.
pub(crate) fn backward_pass(
    config: &ModelConfig,
    weights: &[Tensor],
    input: &Tensor,
    cache: &ForwardCache,
    targets: &[f64],
) -> (f64, Vec<Tensor>) {
    let (loss, grad_logits) = ops::bce_with_logits(&cache.logits, targets);

    let mut grads: Vec<Tensor> =
        config.weight_shapes().into_iter().map(Tensor::zeros).collect();

    let dense_base = 2 * config.conv_layers;
    let out_base = dense_base + 2 * config.mlp_layers;

    // Output unit.
    let out_input = if config.mlp_layers > 0 {
        &cache.mlp_act[config.mlp_layers - 1]
    } else {
        &cache.flat
    };
    let (mut grad_vec, gw, gb) = ops::dense_backward(out_input, &weights[out_base], &grad_logits);
    grads[out_base] = gw;
    grads[out_base + 1] = gb;

    // Hidden dense layers, last to first.
    for m in (0..config.mlp_layers).rev() {
        let grad_pre = ops::relu_backward(&cache.mlp_pre[m], &grad_vec);
        let layer_input = if m == 0 { &cache.flat } else { &cache.mlp_act[m - 1] };
        let (gi, gw, gb) = ops::dense_backward(layer_input, &weights[dense_base + 2 * m], &grad_pre);
        grads[dense_base + 2 * m] = gw;
        grads[dense_base + 2 * m + 1] = gb;
        grad_vec = gi;
    }

    // Un-flatten into the last pooled feature map.
    let n = input.shape()[0];
    let side = *config.stage_sizes().last().unwrap();
    let mut grad_map = grad_vec.reshaped(vec![n, config.filters, side, side]);

    // Conv blocks, last to first.
    for l in (0..config.conv_layers).rev() {
        let grad_pool_in =
            ops::maxpool2_backward(&grad_map, &cache.pool_argmax[l], cache.pool_in[l].shape());
        let grad_pre = ops::relu_backward(&cache.conv_pre[l], &grad_pool_in);
        // The input to conv block l is the pooled map of block l-1 (or the
        // network input for the first block); pool_in holds pre-pool
        // activations, so rebuild the pooled map from the cached argmax.
        let layer_input = if l == 0 {
            input.clone()
        } else {
            pooled_of(&cache.pool_in[l - 1], &cache.pool_argmax[l - 1], config, n, l - 1)
        };
        let (gi, gw, gb) = ops::conv2d_backward(&layer_input, &weights[2 * l], &grad_pre);
        grads[2 * l] = gw;
        grads[2 * l + 1] = gb;
        grad_map = gi;
    }

    (loss, grads)
}

/// Rebuilds the pooled output of conv block `l` from its pre-pool activation
/// and recorded argmax indices (cheaper than caching every pooled map).
fn pooled_of(
    pool_in: &Tensor,
    argmax: &[usize],
    config: &ModelConfig,
    n: usize,
    l: usize,
) -> Tensor {
    let side = config.stage_sizes()[l + 1];
    let mut out = Tensor::zeros(vec![n, config.filters, side, side]);
    let src = pool_in.data();
    for (dst, &i) in out.data_mut().iter_mut().zip(argmax) {
        *dst = src[i];
    }
    out
}

/// Per-epoch training record: mean training loss and validation metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val: Metrics,
}

/// A trained verifier: its configuration, final weights (from the best
/// validation epoch), and the full epoch history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub weights: Vec<Tensor>,
    pub history: Vec<EpochStats>,
    /// Index into `history` of the epoch with the highest validation
    /// accuracy (ties keep the earliest).
    pub best_epoch: usize,
}

impl TrainedModel {
    /// Checks the structural invariants: weight shapes match the config and
    /// `best_epoch` points at the maximum validation accuracy.
    pub fn check_consistent(&self) -> Result<(), VerifyError> {
        let expected = self.config.weight_shapes();
        if self.weights.len() != expected.len() {
            return Err(VerifyError::ShapeMismatch {
                expected: format!("{} weight tensors", expected.len()),
                found: format!("{}", self.weights.len()),
            });
        }
        for (w, shape) in self.weights.iter().zip(&expected) {
            if w.shape() != shape.as_slice() {
                return Err(VerifyError::ShapeMismatch {
                    expected: format!("{shape:?}"),
                    found: format!("{:?}", w.shape()),
                });
            }
        }
        if !self.history.is_empty() {
            if self.best_epoch >= self.history.len() {
                return Err(VerifyError::BadInput(format!(
                    "best_epoch {} outside history of {} epochs",
                    self.best_epoch,
                    self.history.len()
                )));
            }
            let best = self.history[self.best_epoch].val.accuracy();
            if self.history.iter().any(|e| e.val.accuracy() > best) {
                return Err(VerifyError::BadInput(
                    "best_epoch does not maximize validation accuracy".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Validates a `[N, 1, S, S]` batch against the model's configuration.
pub(crate) fn check_batch(config: &ModelConfig, batch: &Tensor) -> Result<(), VerifyError> {
    let s = config.input_size;
    let ok = batch.shape().len() == 4
        && batch.shape()[1] == 1
        && batch.shape()[2] == s
        && batch.shape()[3] == s
        && batch.shape()[0] > 0;
    if !ok {
        return Err(VerifyError::ShapeMismatch {
            expected: format!("[N, 1, {s}, {s}] with N > 0"),
            found: format!("{:?}", batch.shape()),
        });
    }
    if !batch.all_finite() {
        return Err(VerifyError::BadInput("batch contains non-finite values".into()));
    }
    Ok(())
}

/// Runs the verifier on a `[N, 1, S, S]` batch and returns one genuine
/// probability per image (shape `[N]`). A value of at least 0.5 means the
/// signature is accepted as genuine.
pub fn forward(model: &TrainedModel, batch: &Tensor) -> Result<Tensor, VerifyError> {
    model.check_consistent()?;
    check_batch(&model.config, batch)?;
    let cache = forward_pass(&model.config, &model.weights, batch);
    let n = batch.shape()[0];
    Ok(ops::sigmoid(&cache.logits).reshaped(vec![n]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(seed: u64) -> ModelConfig {
        ModelConfig {
            input_size: 16,
            conv_layers: 2,
            filters: 16,
            mlp_layers: 1,
            mlp_neurons: 16,
            seed,
        }
    }

    fn model_with_weights(config: ModelConfig) -> TrainedModel {
        TrainedModel {
            weights: init_weights(&config),
            config,
            history: Vec::new(),
            best_epoch: 0,
        }
    }

    fn random_batch(config: &ModelConfig, n: usize, seed: u64) -> Tensor {
        let mut gen = SplitMix64::new(seed);
        let s = config.input_size;
        let data = (0..n * s * s).map(|_| gen.next_f64()).collect();
        Tensor::new(vec![n, 1, s, s], data)
    }

    #[test]
    fn config_validation_accepts_the_grid_and_rejects_outsiders() {
        for conv in [1, 2, 3] {
            for filters in [16, 32, 64] {
                let c = ModelConfig {
                    input_size: 64,
                    conv_layers: conv,
                    filters,
                    mlp_layers: 1,
                    mlp_neurons: 128,
                    seed: 0,
                };
                assert!(c.validate().is_ok());
            }
        }
        let bad = [
            ModelConfig { conv_layers: 4, ..ModelConfig::desk_default(0) },
            ModelConfig { filters: 20, ..ModelConfig::desk_default(0) },
            ModelConfig { mlp_layers: 3, ..ModelConfig::desk_default(0) },
            ModelConfig { mlp_neurons: 100, ..ModelConfig::desk_default(0) },
            ModelConfig { input_size: 4, conv_layers: 3, ..ModelConfig::desk_default(0) },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(VerifyError::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn weight_shapes_for_the_desk_default() {
        let c = ModelConfig::desk_default(0);
        assert_eq!(c.stage_sizes(), vec![64, 32, 16]);
        assert_eq!(c.flat_features(), 32 * 16 * 16);
        let shapes = c.weight_shapes();
        assert_eq!(
            shapes,
            vec![
                vec![32, 1, 3, 3],
                vec![32],
                vec![32, 32, 3, 3],
                vec![32],
                vec![128, 32 * 16 * 16],
                vec![128],
                vec![1, 128],
                vec![1],
            ]
        );
    }

    #[test]
    fn init_is_deterministic_bounded_and_seed_sensitive() {
        let c = tiny_config(7);
        let a = init_weights(&c);
        let b = init_weights(&c);
        assert_eq!(a, b);
        let other = init_weights(&tiny_config(8));
        assert_ne!(a, other);
        // First conv block has fan-in 1 * 3 * 3 = 9.
        let limit = (6.0f64 / 9.0).sqrt();
        assert!(a[0].data().iter().all(|w| w.abs() <= limit));
        // Biases start at zero.
        assert!(a[1].data().iter().all(|&b| b == 0.0));
        assert!(a[3].data().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn forward_outputs_probabilities() {
        let model = model_with_weights(tiny_config(3));
        let batch = random_batch(&model.config, 4, 99);
        let probs = forward(&model, &batch).unwrap();
        assert_eq!(probs.shape(), &[4]);
        assert!(probs.data().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn forward_rejects_wrong_input_shape() {
        let model = model_with_weights(tiny_config(3));
        let batch = Tensor::zeros(vec![2, 1, 8, 8]);
        match forward(&model, &batch) {
            Err(VerifyError::ShapeMismatch { .. }) => {}
            other => panic!("expected shape mismatch, got {other:?}"),
        }
    }

    #[test]
    fn forward_rejects_non_finite_input() {
        let model = model_with_weights(tiny_config(3));
        let mut batch = Tensor::zeros(vec![1, 1, 16, 16]);
        batch.data_mut()[0] = f64::NAN;
        assert!(matches!(forward(&model, &batch), Err(VerifyError::BadInput(_))));
    }

    #[test]
    fn consistency_check_catches_mismatched_weights_and_bad_best_epoch() {
        let mut model = model_with_weights(tiny_config(3));
        model.weights.pop();
        assert!(matches!(
            model.check_consistent(),
            Err(VerifyError::ShapeMismatch { .. })
        ));

        let mut model = model_with_weights(tiny_config(3));
        model.history = vec![
            EpochStats { epoch: 0, train_loss: 1.0, val: Metrics::from_counts(1, 1, 1, 1) },
            EpochStats { epoch: 1, train_loss: 0.5, val: Metrics::from_counts(3, 0, 0, 1) },
        ];
        model.best_epoch = 0; // epoch 1 has higher accuracy
        assert!(model.check_consistent().is_err());
        model.best_epoch = 1;
        assert!(model.check_consistent().is_ok());
    }

    /// Full-network gradient check: every coordinate of every weight tensor
    /// against central finite differences with step 1e-6, relative tolerance
    /// 1e-5.
    #[test]
    fn backward_matches_finite_differences_everywhere() {
        let config = tiny_config(11);
        let mut weights = init_weights(&config);
        let input = random_batch(&config, 2, 77);
        let targets = [1.0, 0.0];

        let cache = forward_pass(&config, &weights, &input);
        let (_, grads) = backward_pass(&config, &weights, &input, &cache, &targets);

        let step = 1e-6;
        let mut checked = 0usize;
        for t in 0..weights.len() {
            for i in 0..weights[t].len() {
                let keep = weights[t].data()[i];
                weights[t].data_mut()[i] = keep + step;
                let hi = ops::bce_with_logits(
                    &forward_pass(&config, &weights, &input).logits,
                    &targets,
                )
                .0;
                weights[t].data_mut()[i] = keep - step;
                let lo = ops::bce_with_logits(
                    &forward_pass(&config, &weights, &input).logits,
                    &targets,
                )
                .0;
                weights[t].data_mut()[i] = keep;
                let numeric = (hi - lo) / (2.0 * step);
                let analytic = grads[t].data()[i];
                let rel =
                    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4);
                assert!(
                    rel < 1e-5,
                    "tensor {t} coord {i}: analytic {analytic} vs numeric {numeric} (rel {rel})"
                );
                checked += 1;
            }
        }
        assert_eq!(checked, config.parameter_count());
    }

    /// Duplicating a batch must not change the mean-normalized gradient.
    #[test]
    fn gradient_is_invariant_under_batch_duplication() {
        let config = tiny_config(5);
        let weights = init_weights(&config);
        let single = random_batch(&config, 2, 13);
        let s = config.input_size;
        let mut doubled_data = single.data().to_vec();
        doubled_data.extend_from_slice(single.data());
        let doubled = Tensor::new(vec![4, 1, s, s], doubled_data);

        let cache1 = forward_pass(&config, &weights, &single);
        let (loss1, grads1) = backward_pass(&config, &weights, &single, &cache1, &[1.0, 0.0]);
        let cache2 = forward_pass(&config, &weights, &doubled);
        let (loss2, grads2) =
            backward_pass(&config, &weights, &doubled, &cache2, &[1.0, 0.0, 1.0, 0.0]);

        assert!((loss1 - loss2).abs() < 1e-12);
        for (a, b) in grads1.iter().zip(&grads2) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    /// With all weights zero and balanced labels, every activation is zero,
    /// the output probability is exactly 0.5, and the positive and negative
    /// logit gradients cancel: the whole gradient is exactly zero.
    #[test]
    fn zero_weights_balanced_labels_give_zero_gradient() {
        let config = tiny_config(1);
        let weights: Vec<Tensor> =
            config.weight_shapes().into_iter().map(Tensor::zeros).collect();
        let input = random_batch(&config, 4, 21);
        let cache = forward_pass(&config, &weights, &input);
        let (loss, grads) =
            backward_pass(&config, &weights, &input, &cache, &[1.0, 0.0, 1.0, 0.0]);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        for g in &grads {
            assert!(g.data().iter().all(|&v| v == 0.0), "nonzero gradient {g:?}");
        }
    }

    #[test]
    fn one_conv_layer_and_two_mlp_layers_also_work() {
        let config = ModelConfig {
            input_size: 8,
            conv_layers: 1,
            filters: 16,
            mlp_layers: 2,
            mlp_neurons: 16,
            seed: 2,
        };
        config.validate().unwrap();
        let model = model_with_weights(config);
        let batch = random_batch(&config, 3, 55);
        let probs = forward(&model, &batch).unwrap();
        assert_eq!(probs.shape(), &[3]);
        assert!(probs.all_finite());
    }
}
