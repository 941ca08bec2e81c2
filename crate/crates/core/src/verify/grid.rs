//! Hyperparameter sweeps over the conv/MLP grids, with a TSV rendering of
//! the result table.

use super::metrics::Metrics;
use super::model::ModelConfig;
use super::train::{train, EarlyStopPolicy, SplitDataset, TrainSettings};
use super::VerifyError;

/// Axes of a sweep. Every combination is trained; leave an axis at a single
/// value to sweep the other. The canonical sweeps are
/// [`GridSpec::conv_sweep`] (9 configurations) and [`GridSpec::mlp_sweep`]
/// (10 configurations).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub conv_layers: Vec<usize>,
    pub conv_filters: Vec<usize>,
    pub mlp_layers: Vec<usize>,
    pub mlp_neurons: Vec<usize>,
}

impl GridSpec {
    /// Conv sweep: {1, 2, 3} layers x {16, 32, 64} filters, with the dense
    /// part fixed at one 128-unit layer.
    pub fn conv_sweep() -> GridSpec {
        GridSpec {
            conv_layers: vec![1, 2, 3],
            conv_filters: vec![16, 32, 64],
            mlp_layers: vec![1],
            mlp_neurons: vec![128],
        }
    }

    /// MLP sweep: {1, 2} hidden layers x {16, 32, 64, 128, 256} neurons,
    /// with a fixed conv stem.
    pub fn mlp_sweep(conv_layers: usize, conv_filters: usize) -> GridSpec {
        GridSpec {
            conv_layers: vec![conv_layers],
            conv_filters: vec![conv_filters],
            mlp_layers: vec![1, 2],
            mlp_neurons: vec![16, 32, 64, 128, 256],
        }
    }

    /// Expands the axes into configurations in row order: depth varies
    /// fastest, then filter/neuron count, with the MLP axes outermost
    /// (for the conv sweep this yields 1/16, 2/16, 3/16, 1/32, ...).
    pub fn configs(&self, input_size: usize, seed: u64) -> Vec<ModelConfig> {
        let mut out = Vec::new();
        for &mlp_neurons in &self.mlp_neurons {
            for &mlp_layers in &self.mlp_layers {
                for &filters in &self.conv_filters {
                    for &conv_layers in &self.conv_layers {
                        out.push(ModelConfig {
                            input_size,
                            conv_layers,
                            filters,
                            mlp_layers,
                            mlp_neurons,
                            seed,
                        });
                    }
                }
            }
        }
        out
    }
}

/// One trained configuration: the epoch of peak validation accuracy and the
/// metrics at that epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub config: ModelConfig,
    pub max_epoch: usize,
    pub val: Metrics,
}

/// Column-wise arithmetic means over the grid rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSummary {
    pub max_epoch: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    pub mean: GridSummary,
}

/// Trains every configuration in the grid on the same split and tabulates
/// the best-epoch validation metrics, plus a mean row.
pub fn grid_search(
    grid: &GridSpec,
    data: &SplitDataset,
    input_size: usize,
    seed: u64,
    policy: EarlyStopPolicy,
    settings: &TrainSettings,
) -> Result<GridResult, VerifyError> {
    let configs = grid.configs(input_size, seed);
    if configs.is_empty() {
        return Err(VerifyError::InvalidConfig("empty hyperparameter grid".into()));
    }
    let mut rows = Vec::with_capacity(configs.len());
    for config in configs {
        let model = train(&config, data, policy, settings)?;
        rows.push(GridRow {
            config,
            max_epoch: model.best_epoch,
            val: model.history[model.best_epoch].val,
        });
    }
    let mean = summarize(&rows);
    Ok(GridResult { rows, mean })
}

fn summarize(rows: &[GridRow]) -> GridSummary {
    let n = rows.len() as f64;
    let mut s = GridSummary { max_epoch: 0.0, accuracy: 0.0, precision: 0.0, recall: 0.0, f1: 0.0 };
    for r in rows {
        s.max_epoch += r.max_epoch as f64;
        s.accuracy += r.val.accuracy();
        s.precision += r.val.precision();
        s.recall += r.val.recall();
        s.f1 += r.val.f1();
    }
    s.max_epoch /= n;
    s.accuracy /= n;
    s.precision /= n;
    s.recall /= n;
    s.f1 /= n;
    s
}

/// Renders the result as TSV: one header, one row per configuration
/// (accuracy in percent with two decimals, the other rates with three), and
/// a final mean row.
pub fn to_tsv(result: &GridResult) -> String {
    let mut out = String::from(
        "conv_layers\tfilters\tmlp_layers\tmlp_neurons\tmax_epoch\taccuracy\tprecision\trecall\tf1\n",
    );
    for r in &result.rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:.2}\t{:.3}\t{:.3}\t{:.3}\n",
            r.config.conv_layers,
            r.config.filters,
            r.config.mlp_layers,
            r.config.mlp_neurons,
            r.max_epoch,
            100.0 * r.val.accuracy(),
            r.val.precision(),
            r.val.recall(),
            r.val.f1(),
        ));
    }
    let m = &result.mean;
    out.push_str(&format!(
        "mean\t-\t-\t-\t{:.2}\t{:.2}\t{:.3}\t{:.3}\t{:.3}\n",
        m.max_epoch,
        100.0 * m.accuracy,
        m.precision,
        m.recall,
        m.f1,
    ));
    out
}
