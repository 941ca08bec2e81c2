//! Binary checkpoint container for trained models.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes  "FBCK"
//! version u16      container revision (currently 1)
//! kind    u8       1 = verifier, 2 = GAN
//! dtype   u8       bytes per weight element: 8 = f64, 4 = f32
//! config  u32 length + that many bytes of key = value text
//! history u32 count, then per epoch:
//!         u32 epoch, f64 train loss, u32 tp, u32 fp, u32 fn, u32 tn
//! weights u32 tensor count, then per tensor:
//!         u8 rank, rank x u32 dims, dims-product elements
//! ```
//!
//! Weights are stored in the model's canonical tensor order. Loading
//! re-validates the configuration and the structural invariants, so a
//! tampered file cannot produce an inconsistent model.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::metrics::Metrics;
use super::model::{EpochStats, ModelConfig, TrainedModel};
use super::tensor::Tensor;
use super::VerifyError;
use crate::kv::KvFile;

pub(crate) const MAGIC: [u8; 4] = *b"FBCK";
pub(crate) const VERSION: u16 = 1;
pub(crate) const KIND_VERIFIER: u8 = 1;
pub(crate) const KIND_GAN: u8 = 2;

/// Element width for stored weights. Models always compute in f64; storing
/// f32 halves the file at the cost of rounding each weight once on save.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightPrecision {
    #[default]
    F64,
    F32,
}

impl WeightPrecision {
    fn dtype_byte(self) -> u8 {
        match self {
            WeightPrecision::F64 => 8,
            WeightPrecision::F32 => 4,
        }
    }
}

fn bad(msg: impl Into<String>) -> VerifyError {
    VerifyError::BadCheckpoint(msg.into())
}

pub(crate) fn write_header(
    w: &mut impl Write,
    kind: u8,
    precision: WeightPrecision,
) -> Result<(), VerifyError> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[kind, precision.dtype_byte()])?;
    Ok(())
}

/// Checks magic and version; returns (kind, precision).
pub(crate) fn read_header(r: &mut impl Read) -> Result<(u8, WeightPrecision), VerifyError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(bad("not a checkpoint file (bad magic)"));
    }
    let version = read_u16(r)?;
    if version != VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let mut rest = [0u8; 2];
    r.read_exact(&mut rest)?;
    let precision = match rest[1] {
        8 => WeightPrecision::F64,
        4 => WeightPrecision::F32,
        other => return Err(bad(format!("unknown weight dtype tag {other}"))),
    };
    Ok((rest[0], precision))
}

pub(crate) fn write_block(w: &mut impl Write, bytes: &[u8]) -> Result<(), VerifyError> {
    w.write_all(&(bytes.len() as u32).to_le_bytes())?;
    w.write_all(bytes)?;
    Ok(())
}

pub(crate) fn read_block(r: &mut impl Read) -> Result<Vec<u8>, VerifyError> {
    let len = read_u32(r)? as usize;
    if len > (1 << 20) {
        return Err(bad(format!("unreasonable text block of {len} bytes")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub(crate) fn write_tensors(
    w: &mut impl Write,
    tensors: &[Tensor],
    precision: WeightPrecision,
) -> Result<(), VerifyError> {
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for t in tensors {
        w.write_all(&[t.shape().len() as u8])?;
        for &d in t.shape() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        match precision {
            WeightPrecision::F64 => {
                for v in t.data() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            WeightPrecision::F32 => {
                for v in t.data() {
                    w.write_all(&(*v as f32).to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn read_tensors(
    r: &mut impl Read,
    precision: WeightPrecision,
) -> Result<Vec<Tensor>, VerifyError> {
    let count = read_u32(r)? as usize;
    if count > 4096 {
        return Err(bad(format!("unreasonable tensor count {count}")));
    }
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let mut rank = [0u8; 1];
        r.read_exact(&mut rank)?;
        if rank[0] == 0 || rank[0] > 8 {
            return Err(bad(format!("unreasonable tensor rank {}", rank[0])));
        }
        let mut shape = Vec::with_capacity(rank[0] as usize);
        let mut volume = 1usize;
        for _ in 0..rank[0] {
            let d = read_u32(r)? as usize;
            volume = volume.saturating_mul(d);
            shape.push(d);
        }
        if volume > (1 << 28) {
            return Err(bad(format!("unreasonable tensor volume {volume}")));
        }
        let mut data = Vec::with_capacity(volume);
        match precision {
            WeightPrecision::F64 => {
                let mut buf = [0u8; 8];
                for _ in 0..volume {
                    r.read_exact(&mut buf)?;
                    data.push(f64::from_le_bytes(buf));
                }
            }
            WeightPrecision::F32 => {
                let mut buf = [0u8; 4];
                for _ in 0..volume {
                    r.read_exact(&mut buf)?;
                    data.push(f32::from_le_bytes(buf) as f64);
                }
            }
        }
        tensors.push(Tensor::new(shape, data));
    }
    Ok(tensors)
}

fn read_u16(r: &mut impl Read) -> Result<u16, VerifyError> {
    let mut buf = [0u8; 2];
    r.read_exact(&mut buf)?;
    Ok(u16::from_le_bytes(buf))
}

fn read_u32(r: &mut impl Read) -> Result<u32, VerifyError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64, VerifyError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn config_to_kv(config: &ModelConfig, best_epoch: usize) -> String {
    let mut kv = KvFile::default();
    kv.set("input_size", config.input_size);
    kv.set("conv_layers", config.conv_layers);
    kv.set("filters", config.filters);
    kv.set("mlp_layers", config.mlp_layers);
    kv.set("mlp_neurons", config.mlp_neurons);
    kv.set("seed", config.seed);
    kv.set("best_epoch", best_epoch);
    kv.to_text()
}

fn config_from_kv(text: &str) -> Result<(ModelConfig, usize), VerifyError> {
    let kv = KvFile::parse(text).map_err(|e| bad(format!("config block: {e}")))?;
    let field = |key: &str| -> Result<usize, VerifyError> {
        kv.get_usize(key)
            .map_err(|e| bad(format!("config block: {e}")))?
            .ok_or_else(|| bad(format!("config block: missing {key}")))
    };
    let config = ModelConfig {
        input_size: field("input_size")?,
        conv_layers: field("conv_layers")?,
        filters: field("filters")?,
        mlp_layers: field("mlp_layers")?,
        mlp_neurons: field("mlp_neurons")?,
        seed: kv
            .get_u64("seed")
            .map_err(|e| bad(format!("config block: {e}")))?
            .ok_or_else(|| bad("config block: missing seed"))?,
    };
    Ok((config, field("best_epoch")?))
}

/// Writes a trained verifier to `path`.
pub fn save_model(
    model: &TrainedModel,
    path: impl AsRef<Path>,
    precision: WeightPrecision,
) -> Result<(), VerifyError> {
    model.check_consistent()?;
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, KIND_VERIFIER, precision)?;
    write_block(&mut w, config_to_kv(&model.config, model.best_epoch).as_bytes())?;

    w.write_all(&(model.history.len() as u32).to_le_bytes())?;
    for e in &model.history {
        w.write_all(&(e.epoch as u32).to_le_bytes())?;
        w.write_all(&e.train_loss.to_le_bytes())?;
        for count in [
            e.val.true_positives,
            e.val.false_positives,
            e.val.false_negatives,
            e.val.true_negatives,
        ] {
            w.write_all(&(count as u32).to_le_bytes())?;
        }
    }

    write_tensors(&mut w, &model.weights, precision)?;
    w.flush()?;
    Ok(())
}

/// Reads a verifier checkpoint and re-validates every invariant.
pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, VerifyError> {
    let mut r = BufReader::new(File::open(path)?);
    let (kind, precision) = read_header(&mut r)?;
    if kind != KIND_VERIFIER {
        return Err(bad(format!("expected a verifier checkpoint, found kind {kind}")));
    }
    let config_text = read_block(&mut r)?;
    let config_text =
        String::from_utf8(config_text).map_err(|_| bad("config block is not UTF-8"))?;
    let (config, best_epoch) = config_from_kv(&config_text)?;
    config.validate()?;

    let epoch_count = read_u32(&mut r)? as usize;
    if epoch_count > 1_000_000 {
        return Err(bad(format!("unreasonable history length {epoch_count}")));
    }
    let mut history = Vec::with_capacity(epoch_count);
    for _ in 0..epoch_count {
        let epoch = read_u32(&mut r)? as usize;
        let train_loss = read_f64(&mut r)?;
        let tp = read_u32(&mut r)? as usize;
        let fp = read_u32(&mut r)? as usize;
        let fn_ = read_u32(&mut r)? as usize;
        let tn = read_u32(&mut r)? as usize;
        history.push(EpochStats { epoch, train_loss, val: Metrics::from_counts(tp, fp, fn_, tn) });
    }

    let weights = read_tensors(&mut r, precision)?;
    let model = TrainedModel { config, weights, history, best_epoch };
    model.check_consistent()?;
    Ok(model)
}
