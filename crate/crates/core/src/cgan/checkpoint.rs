//! GAN persistence in the shared checkpoint container.
//!
//! Same envelope as verifier checkpoints (magic, version, kind, dtype) with
//! kind = GAN: a key/value config block, the two per-epoch loss histories,
//! then the generator tensors followed by the discriminator tensors.
//! Loading re-validates the config and every structural invariant.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GanConfig, GanError, GanState};
use crate::kv::KvFile;
use crate::verify::checkpoint::{
    read_block, read_header, read_tensors, write_block, write_header, write_tensors,
    WeightPrecision, KIND_GAN,
};
use crate::verify::VerifyError;

fn bad(msg: impl Into<String>) -> GanError {
    GanError::BadCheckpoint(msg.into())
}

fn config_to_kv(config: &GanConfig, epoch: usize) -> String {
    let mut kv = KvFile::default();
    kv.set("upsample_layers", config.upsample_layers);
    kv.set("gen_filters", config.gen_filters);
    kv.set("disc_filters", config.disc_filters);
    kv.set("leaky_slope", config.leaky_slope);
    kv.set("dropout", config.dropout);
    kv.set("num_classes", config.num_classes);
    kv.set("seed", config.seed);
    kv.set("epoch", epoch);
    kv.to_text()
}

fn config_from_kv(text: &str) -> Result<(GanConfig, usize), GanError> {
    let kv = KvFile::parse(text).map_err(|e| bad(format!("config block: {e}")))?;
    let int = |key: &str| -> Result<usize, GanError> {
        kv.get_usize(key)
            .map_err(|e| bad(format!("config block: {e}")))?
            .ok_or_else(|| bad(format!("config block: missing {key}")))
    };
    let real = |key: &str| -> Result<f64, GanError> {
        kv.get_f64(key)
            .map_err(|e| bad(format!("config block: {e}")))?
            .ok_or_else(|| bad(format!("config block: missing {key}")))
    };
    let config = GanConfig {
        upsample_layers: int("upsample_layers")?,
        gen_filters: int("gen_filters")?,
        disc_filters: int("disc_filters")?,
        leaky_slope: real("leaky_slope")?,
        dropout: real("dropout")?,
        num_classes: int("num_classes")?,
        seed: kv
            .get_u64("seed")
            .map_err(|e| bad(format!("config block: {e}")))?
            .ok_or_else(|| bad("config block: missing seed"))?,
    };
    Ok((config, int("epoch")?))
}

/// Writes a GAN (weights, config, loss histories) to `path`.
pub fn save_gan(
    state: &GanState,
    config: &GanConfig,
    path: impl AsRef<Path>,
    precision: WeightPrecision,
) -> Result<(), GanError> {
    state.check_consistent(config)?;
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, KIND_GAN, precision)?;
    write_block(&mut w, config_to_kv(config, state.epoch).as_bytes())?;

    w.write_all(&(state.epoch as u32).to_le_bytes())?;
    for (g, d) in state.gen_loss_history.iter().zip(&state.disc_loss_history) {
        w.write_all(&g.to_le_bytes())?;
        w.write_all(&d.to_le_bytes())?;
    }

    write_tensors(&mut w, &state.gen_weights, precision)?;
    write_tensors(&mut w, &state.disc_weights, precision)?;
    w.flush()?;
    Ok(())
}

/// Reads a GAN checkpoint and re-validates every invariant.
pub fn load_gan(path: impl AsRef<Path>) -> Result<(GanState, GanConfig), GanError> {
    let mut r = BufReader::new(File::open(path)?);
    let (kind, precision) = read_header(&mut r).map_err(GanError::from)?;
    if kind != KIND_GAN {
        return Err(bad(format!("expected a GAN checkpoint, found kind {kind}")));
    }
    let text = read_block(&mut r).map_err(GanError::from)?;
    let text = String::from_utf8(text).map_err(|_| bad("config block is not UTF-8"))?;
    let (config, epoch) = config_from_kv(&text)?;
    config.validate()?;

    let mut count = [0u8; 4];
    r.read_exact(&mut count).map_err(VerifyError::from)?;
    let epochs_stored = u32::from_le_bytes(count) as usize;
    if epochs_stored != epoch {
        return Err(bad(format!(
            "history length {epochs_stored} does not match epoch {epoch}"
        )));
    }
    let mut gen_loss_history = Vec::with_capacity(epochs_stored);
    let mut disc_loss_history = Vec::with_capacity(epochs_stored);
    let mut buf = [0u8; 8];
    for _ in 0..epochs_stored {
        r.read_exact(&mut buf).map_err(VerifyError::from)?;
        gen_loss_history.push(f64::from_le_bytes(buf));
        r.read_exact(&mut buf).map_err(VerifyError::from)?;
        disc_loss_history.push(f64::from_le_bytes(buf));
    }

    let gen_weights = read_tensors(&mut r, precision).map_err(GanError::from)?;
    let disc_weights = read_tensors(&mut r, precision).map_err(GanError::from)?;
    let state = GanState { gen_weights, disc_weights, epoch, gen_loss_history, disc_loss_history };
    state.check_consistent(&config)?;
    Ok((state, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgan::train_gan;
    use crate::verify::train::Sample;

    fn trained_pair() -> (GanState, GanConfig) {
        let config = GanConfig {
            gen_filters: 3,
            disc_filters: 3,
            ..GanConfig::desk_default(77)
        };
        let area = config.output_side() * config.output_side();
        let data = vec![
            Sample::new(vec![1.0; area], true),
            Sample::new(vec![0.0; area], false),
        ];
        let state = train_gan(&data, &config, 2).unwrap();
        (state, config)
    }

    #[test]
    fn f64_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gan.fbck");
        let (state, config) = trained_pair();
        save_gan(&state, &config, &path, WeightPrecision::F64).unwrap();
        let (loaded_state, loaded_config) = load_gan(&path).unwrap();
        assert_eq!(loaded_config, config);
        assert_eq!(loaded_state, state);
    }

    #[test]
    fn f32_round_trip_preserves_structure_and_shrinks_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let wide = dir.path().join("w.fbck");
        let narrow = dir.path().join("n.fbck");
        let (state, config) = trained_pair();
        save_gan(&state, &config, &wide, WeightPrecision::F64).unwrap();
        save_gan(&state, &config, &narrow, WeightPrecision::F32).unwrap();
        assert!(
            std::fs::metadata(&narrow).unwrap().len() < std::fs::metadata(&wide).unwrap().len()
        );
        let (loaded, _) = load_gan(&narrow).unwrap();
        for (a, b) in loaded.gen_weights.iter().zip(&state.gen_weights) {
            assert_eq!(a.shape(), b.shape());
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn verifier_checkpoints_are_rejected() {
        use crate::verify::checkpoint::save_model;
        use crate::verify::model::{init_weights, EpochStats, ModelConfig, TrainedModel};
        use crate::verify::Metrics;

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("verifier.fbck");
        let config = ModelConfig {
            input_size: 16,
            conv_layers: 1,
            filters: 16,
            mlp_layers: 1,
            mlp_neurons: 16,
            seed: 5,
        };
        let model = TrainedModel {
            weights: init_weights(&config),
            config,
            history: vec![EpochStats {
                epoch: 0,
                train_loss: 0.7,
                val: Metrics::from_counts(1, 1, 1, 1),
            }],
            best_epoch: 0,
        };
        save_model(&model, &path, WeightPrecision::F64).unwrap();
        match load_gan(&path) {
            Err(GanError::BadCheckpoint(msg)) => assert!(msg.contains("kind")),
            other => panic!("expected kind rejection, got {other:?}"),
        }
    }

    #[test]
    fn tampered_history_length_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gan.fbck");
        let (state, config) = trained_pair();
        save_gan(&state, &config, &path, WeightPrecision::F64).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // The config block stores epoch = 2; truncating the file corrupts
        // the tensor sections, and bumping the history count desynchronizes
        // it from the config. Both must fail.
        let len = bytes.len();
        bytes.truncate(len - 9);
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_gan(&path).is_err());
    }
}
