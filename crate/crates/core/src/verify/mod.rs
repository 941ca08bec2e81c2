//! Writer-independent signature verification.
//!
//! A compact convolutional network scores a signature raster as genuine or
//! forged. Everything here is hand-rolled and deterministic: fixed loop
//! orders, seedable initialization and shuffling, and exact backward passes
//! validated against finite differences. The pieces:
//!
//! * [`tensor`]: dense row-major tensors (f64 by default, f32 selectable);
//! * [`ops`]: conv/pool/dense/activation kernels with backward passes;
//! * [`model`]: network assembly, weight init, forward/backward;
//! * [`train`]: stratified splitting, Adam, early stopping, fine-tuning;
//! * [`metrics`]: confusion counts and derived rates;
//! * [`grid`]: hyperparameter sweeps with TSV output;
//! * [`checkpoint`]: binary save/load of trained models.

pub mod checkpoint;
pub mod grid;
pub mod metrics;
pub mod model;
pub mod ops;
pub mod tensor;
pub mod train;

pub use checkpoint::{load_model, save_model, WeightPrecision};
pub use grid::{grid_search, to_tsv, GridResult, GridRow, GridSpec, GridSummary};
pub use metrics::{Metrics, DECISION_THRESHOLD};
pub use model::{forward, init_weights, EpochStats, ModelConfig, TrainedModel};
pub use tensor::{Element, Tensor, Tensor32, TensorOf};
pub use train::{
    evaluate, fine_tune, loss, loss_and_gradient, scores, split_dataset, train, EarlyStopPolicy,
    EarlyStopping, Sample, SplitDataset, StopSignal, TrainSettings,
};

use thiserror::Error;

/// Everything the verifier can turn down.
#[derive(Debug, Error)]
pub enum VerifyError {
    /// A hyperparameter outside the supported grid.
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),

    /// Tensor or sample dimensions that do not fit the model.
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    /// Structurally valid but unusable input (non-finite values, broken
    /// invariants).
    #[error("bad input: {0}")]
    BadInput(String),

    /// A dataset split left one side with no samples.
    #[error("dataset split left the {split} set empty")]
    EmptySplit { split: &'static str },

    /// A malformed or tampered checkpoint file.
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
