//! The end-to-end experiment: corpus, baseline, forgeries, attacks,
//! defenses, and a reproducible report bundle.
//!
//! Everything derives from one config (flat `key = value` text) and its
//! seed. Two runs with the same config write byte-identical reports: all
//! randomness flows through derived streams, datasets are iterated in
//! manifest order, and the reports reference files by relative path only.

use std::path::{Path, PathBuf};

use super::attack::{run_attack, run_defense};
use super::forgery::{gray_to_sample, robot_forge};
use super::synth::{synth_corpus, SyntheticSignatureSpec};
use super::{stage, AttackMethod, AttackReport, DefenseReport, HarnessError};
use crate::cgan::{generate, losses_tsv, save_gan, train_gan, GanConfig};
use crate::gcode::{builtin_profile, load_profile, DeviceProfile};
use crate::kv::KvFile;
use crate::raster::{load_dataset, save_pgm, GrayImage, Label};
use crate::rng::{derive, streams, SplitMix64};
use crate::verify::{
    save_model, split_dataset, train, EarlyStopPolicy, Metrics, ModelConfig, Sample,
    TrainSettings, TrainedModel, WeightPrecision,
};

/// Full experiment description. Parsed from flat `key = value` text; every
/// key is optional and falls back to the desk-scale default.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// When set, ingest an existing dataset from this root instead of
    /// synthesizing one.
    pub cedar_root: Option<PathBuf>,
    // Corpus.
    pub writers: usize,
    pub genuine_per_writer: usize,
    pub forged_per_writer: usize,
    pub strokes: (usize, usize),
    pub control_points: (usize, usize),
    pub canvas: usize,
    pub jitter: f64,
    // Verifier.
    pub input_size: usize,
    pub conv_layers: usize,
    pub filters: usize,
    pub mlp_layers: usize,
    pub mlp_neurons: usize,
    pub patience: usize,
    pub max_epochs: usize,
    // GAN.
    pub gan_upsample_layers: usize,
    pub gan_gen_filters: usize,
    pub gan_disc_filters: usize,
    pub gan_epochs: usize,
    // Attack and defense.
    pub profiles: Vec<String>,
    pub dpi: f64,
    pub robot_attack: usize,
    pub robot_tune: usize,
    pub gan_attack: usize,
    pub gan_tune: usize,
    pub fine_tune_lr: f64,
    /// Batch size for the one-epoch defense pass. Smaller than the training
    /// batch so a small tuning set still yields several optimizer steps.
    pub fine_tune_batch: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            out_dir: PathBuf::from("forgebench-out"),
            cedar_root: None,
            writers: 6,
            genuine_per_writer: 8,
            forged_per_writer: 8,
            strokes: (3, 5),
            control_points: (4, 7),
            canvas: 128,
            jitter: 2.5,
            input_size: 32,
            conv_layers: 2,
            filters: 16,
            mlp_layers: 1,
            mlp_neurons: 64,
            patience: 10,
            max_epochs: 60,
            gan_upsample_layers: 3,
            gan_gen_filters: 32,
            gan_disc_filters: 32,
            gan_epochs: 30,
            profiles: vec!["idraw2".into(), "lineus".into()],
            dpi: 150.0,
            robot_attack: 10,
            robot_tune: 10,
            gan_attack: 25,
            gan_tune: 10,
            fine_tune_lr: 0.005,
            fine_tune_batch: 8,
        }
    }
}

impl PipelineConfig {
    pub fn from_kv_text(text: &str) -> Result<PipelineConfig, HarnessError> {
        let bad = |msg: String| HarnessError::BadConfig(msg);
        let kv = KvFile::parse(text).map_err(|e| bad(e.to_string()))?;
        let mut config = PipelineConfig::default();

        macro_rules! read {
            ($field:ident, $getter:ident, $key:expr) => {
                if let Some(v) = kv.$getter($key).map_err(|e| bad(e.to_string()))? {
                    config.$field = v;
                }
            };
        }
        read!(seed, get_u64, "seed");
        read!(writers, get_usize, "writers");
        read!(genuine_per_writer, get_usize, "genuine_per_writer");
        read!(forged_per_writer, get_usize, "forged_per_writer");
        read!(canvas, get_usize, "canvas");
        read!(jitter, get_f64, "jitter");
        read!(input_size, get_usize, "input_size");
        read!(conv_layers, get_usize, "conv_layers");
        read!(filters, get_usize, "filters");
        read!(mlp_layers, get_usize, "mlp_layers");
        read!(mlp_neurons, get_usize, "mlp_neurons");
        read!(patience, get_usize, "patience");
        read!(max_epochs, get_usize, "max_epochs");
        read!(gan_upsample_layers, get_usize, "gan_upsample_layers");
        read!(gan_gen_filters, get_usize, "gan_gen_filters");
        read!(gan_disc_filters, get_usize, "gan_disc_filters");
        read!(gan_epochs, get_usize, "gan_epochs");
        read!(dpi, get_f64, "dpi");
        read!(robot_attack, get_usize, "robot_attack");
        read!(robot_tune, get_usize, "robot_tune");
        read!(gan_attack, get_usize, "gan_attack");
        read!(gan_tune, get_usize, "gan_tune");
        read!(fine_tune_lr, get_f64, "fine_tune_lr");
        read!(fine_tune_batch, get_usize, "fine_tune_batch");

        for (field, lo_key, hi_key) in [
            ("strokes", "strokes_min", "strokes_max"),
            ("control_points", "control_points_min", "control_points_max"),
        ] {
            let lo = kv.get_usize(lo_key).map_err(|e| bad(e.to_string()))?;
            let hi = kv.get_usize(hi_key).map_err(|e| bad(e.to_string()))?;
            let current = match field {
                "strokes" => &mut config.strokes,
                _ => &mut config.control_points,
            };
            if let Some(lo) = lo {
                current.0 = lo;
            }
            if let Some(hi) = hi {
                current.1 = hi;
            }
        }

        if let Some(dir) = kv.get("out_dir") {
            config.out_dir = PathBuf::from(dir);
        }
        if let Some(root) = kv.get("cedar_root") {
            config.cedar_root = Some(PathBuf::from(root));
        }
        if let Some(list) = kv.get("profiles") {
            config.profiles =
                list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }

        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        PipelineConfig::from_kv_text(&text)
    }

    /// The synthesis spec encoded in this config.
    pub fn corpus_spec(&self) -> SyntheticSignatureSpec {
        SyntheticSignatureSpec {
            strokes: self.strokes.0..=self.strokes.1,
            control_points: self.control_points.0..=self.control_points.1,
            canvas: self.canvas,
            jitter: self.jitter,
            seed: self.seed,
        }
    }

    /// The verifier architecture encoded in this config.
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            input_size: self.input_size,
            conv_layers: self.conv_layers,
            filters: self.filters,
            mlp_layers: self.mlp_layers,
            mlp_neurons: self.mlp_neurons,
            seed: self.seed,
        }
    }

    /// The GAN architecture encoded in this config.
    pub fn gan_config(&self) -> GanConfig {
        GanConfig {
            upsample_layers: self.gan_upsample_layers,
            gen_filters: self.gan_gen_filters,
            disc_filters: self.gan_disc_filters,
            ..GanConfig::desk_default(self.seed)
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::BadConfig(msg));
        self.corpus_spec().validate()?;
        self.model_config().validate().map_err(|e| stage("config", e))?;
        self.gan_config().validate().map_err(|e| stage("config", e))?;
        if self.cedar_root.is_none() {
            if self.writers == 0 || self.genuine_per_writer == 0 || self.forged_per_writer == 0 {
                return bad("corpus needs writers and per-writer counts".into());
            }
            let genuine_total = self.writers * self.genuine_per_writer;
            if genuine_total < self.robot_attack + self.robot_tune {
                return bad(format!(
                    "{} genuine images cannot seed {} attack + {} tune robot forgeries",
                    genuine_total, self.robot_attack, self.robot_tune
                ));
            }
        }
        if self.profiles.is_empty() {
            return bad("at least one device profile is required".into());
        }
        for name in &self.profiles {
            if AttackMethod::parse(name).is_none() {
                return bad(format!("profile `{name}` is not a known attack method"));
            }
        }
        if !(self.dpi.is_finite() && self.dpi > 0.0) {
            return bad(format!("dpi {} must be positive", self.dpi));
        }
        for (key, v) in [
            ("robot_attack", self.robot_attack),
            ("robot_tune", self.robot_tune),
            ("gan_attack", self.gan_attack),
            ("gan_tune", self.gan_tune),
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
            ("fine_tune_batch", self.fine_tune_batch),
        ] {
            if v == 0 {
                return bad(format!("{key} must be at least 1"));
            }
        }
        if !(self.fine_tune_lr.is_finite() && self.fine_tune_lr >= 0.0) {
            return bad(format!("fine_tune_lr {} must be non-negative", self.fine_tune_lr));
        }
        Ok(())
    }
}

/// What the pipeline produced, beyond the files on disk.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    /// Validation metrics of the baseline verifier at its best epoch.
    pub baseline_val: Metrics,
    pub best_epoch: usize,
    /// One report per method, profiles first, then the GAN.
    pub attacks: Vec<AttackReport>,
    pub defenses: Vec<DefenseReport>,
    /// Top-level artifacts written, relative to the output directory.
    pub files: Vec<String>,
}

fn resolve_profile(name: &str) -> Result<DeviceProfile, HarnessError> {
    if let Some(profile) = builtin_profile(name) {
        return Ok(profile);
    }
    load_profile(Path::new(name)).map_err(|e| stage("profile", e))
}

fn forge_set(
    sources: &[(String, &GrayImage)],
    profile: &DeviceProfile,
    dpi: f64,
    input_size: usize,
    dir: &Path,
    prefix: &str,
) -> Result<Vec<Sample>, HarnessError> {
    let mut set = Vec::with_capacity(sources.len());
    for (i, (_, img)) in sources.iter().enumerate() {
        let forged = robot_forge(img, profile, dpi)?;
        std::fs::write(dir.join(format!("{prefix}_{i:03}.pgm")), save_pgm(&forged))?;
        set.push(gray_to_sample(&forged, input_size, false));
    }
    Ok(set)
}

fn format_metrics(m: &Metrics) -> String {
    format!(
        "accuracy {:.2}%, precision {:.3}, recall {:.3}, F1 {:.3}",
        100.0 * m.accuracy(),
        m.precision(),
        m.recall(),
        m.f1()
    )
}

fn attacks_tsv(reports: &[AttackReport]) -> String {
    let mut out = String::from("method\tn_success\tn_total\tpercent\n");
    for r in reports {
        out.push_str(&format!("{}\t{}\t{}\t{:.1}\n", r.method, r.n_success, r.n_total, r.percent));
    }
    out
}

fn defense_tsv(reports: &[DefenseReport]) -> String {
    let mut out = String::from(
        "method\tbefore_success\tbefore_total\tbefore_percent\t\
         after_success\tafter_total\tafter_percent\tdelta_points\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.1}\t{}\t{}\t{:.1}\t{:+.1}\n",
            r.before.method,
            r.before.n_success,
            r.before.n_total,
            r.before.percent,
            r.after.n_success,
            r.after.n_total,
            r.after.percent,
            r.delta_points,
        ));
    }
    out
}

fn report_markdown(
    config: &PipelineConfig,
    n_genuine: usize,
    n_forged: usize,
    model: &TrainedModel,
    outcome_attacks: &[AttackReport],
    outcome_defenses: &[DefenseReport],
) -> String {
    let mut md = String::new();
    md.push_str("# Signature forgery workbench report\n\n");
    md.push_str(&format!("Seed: {}\n\n", config.seed));

    md.push_str("## Corpus\n\n");
    md.push_str(&format!(
        "- {} genuine and {} forged signatures ({} px canvas, model input {} px)\n\n",
        n_genuine, n_forged, config.canvas, config.input_size
    ));

    md.push_str("## Baseline verifier\n\n");
    let val = model.history[model.best_epoch].val;
    md.push_str(&format!(
        "- architecture: {} conv x {} filters, {} dense x {} neurons\n",
        config.conv_layers, config.filters, config.mlp_layers, config.mlp_neurons
    ));
    md.push_str(&format!("- best epoch: {}\n", model.best_epoch));
    md.push_str(&format!("- validation: {}\n\n", format_metrics(&val)));

    md.push_str("## Attack success (false acceptance)\n\n");
    md.push_str("| Forgery method | Successful attacks | Success (%) |\n");
    md.push_str("|---|---|---|\n");
    for r in outcome_attacks {
        md.push_str(&format!(
            "| {} | {}/{} | {:.1} |\n",
            r.method, r.n_success, r.n_total, r.percent
        ));
    }
    md.push('\n');

    md.push_str("## Defense after one-epoch fine-tuning\n\n");
    md.push_str("| Forgery method | Successful attacks | Success (%) | Defense (points) |\n");
    md.push_str("|---|---|---|---|\n");
    for r in outcome_defenses {
        md.push_str(&format!(
            "| {} | {}/{} | {:.1} | {:+.1} |\n",
            r.after.method, r.after.n_success, r.after.n_total, r.after.percent, r.delta_points
        ));
    }
    md.push('\n');
    md
}

/// Runs the whole experiment described by `config`, writing the report
/// bundle into `config.out_dir`.
pub fn full_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome, HarnessError> {
    config.validate()?;
    let out = &config.out_dir;
    std::fs::create_dir_all(out)?;
    let mut files: Vec<String> = Vec::new();

    // Corpus: synthesize, or ingest an existing dataset root.
    let corpus_root = match &config.cedar_root {
        Some(root) => root.clone(),
        None => {
            let root = out.join("corpus");
            synth_corpus(
                &config.corpus_spec(),
                config.writers,
                (config.genuine_per_writer, config.forged_per_writer),
                &root,
            )?;
            files.push("corpus/dataset.tsv".into());
            root
        }
    };
    let entries = load_dataset(&corpus_root).map_err(|e| stage("corpus", e))?;
    let n_genuine = entries.iter().filter(|e| e.label == Label::Genuine).count();
    let n_forged = entries.len() - n_genuine;

    // Preprocess into verifier samples; keep full-resolution genuine images
    // as robot-forgery sources.
    let samples: Vec<Sample> = entries
        .iter()
        .map(|e| gray_to_sample(&e.image, config.input_size, e.label == Label::Genuine))
        .collect();
    let genuine_sources: Vec<(String, &GrayImage)> = entries
        .iter()
        .filter(|e| e.label == Label::Genuine)
        .map(|e| {
            let rel = e
                .path
                .strip_prefix(&corpus_root)
                .unwrap_or(&e.path)
                .to_string_lossy()
                .into_owned();
            (rel, &e.image)
        })
        .collect();
    if genuine_sources.len() < config.robot_attack + config.robot_tune {
        return Err(HarnessError::BadConfig(format!(
            "{} genuine images cannot seed {} attack + {} tune robot forgeries",
            genuine_sources.len(),
            config.robot_attack,
            config.robot_tune
        )));
    }

    // Baseline verifier.
    let split = split_dataset(samples, config.seed).map_err(|e| stage("split", e))?;
    let settings = TrainSettings { max_epochs: config.max_epochs, ..TrainSettings::default() };
    let model = train(
        &config.model_config(),
        &split,
        EarlyStopPolicy { patience: config.patience },
        &settings,
    )
    .map_err(|e| stage("baseline training", e))?;
    save_model(&model, out.join("verifier.fbck"), WeightPrecision::F64)
        .map_err(|e| stage("checkpoint", e))?;
    files.push("verifier.fbck".into());

    // Seeded, recorded selection of robot forgery sources.
    let need = config.robot_attack + config.robot_tune;
    let mut selection_rng = SplitMix64::new(derive(config.seed, streams::SELECTION));
    let picks = selection_rng.sample_without_replacement(genuine_sources.len(), need);
    let mut selection = String::from("role\tsource_index\tsource_path\n");
    for (slot, &idx) in picks.iter().enumerate() {
        let role = if slot < config.robot_attack { "attack" } else { "tune" };
        selection.push_str(&format!("{role}\t{idx}\t{}\n", genuine_sources[idx].0));
    }
    std::fs::write(out.join("selection.tsv"), &selection)?;
    files.push("selection.tsv".into());
    let attack_sources: Vec<(String, &GrayImage)> =
        picks[..config.robot_attack].iter().map(|&i| genuine_sources[i].clone()).collect();
    let tune_sources: Vec<(String, &GrayImage)> =
        picks[config.robot_attack..].iter().map(|&i| genuine_sources[i].clone()).collect();

    // Robot forgeries, one set per device profile.
    let mut attack_sets: Vec<(AttackMethod, Vec<Sample>, Vec<Sample>)> = Vec::new();
    for name in &config.profiles {
        let method = AttackMethod::parse(name)
            .ok_or_else(|| HarnessError::BadConfig(format!("unknown method `{name}`")))?;
        let profile = resolve_profile(name)?;
        let dir = out.join("forgeries").join(name);
        std::fs::create_dir_all(&dir)?;
        let attack_set =
            forge_set(&attack_sources, &profile, config.dpi, config.input_size, &dir, "attack")?;
        let tune_set =
            forge_set(&tune_sources, &profile, config.dpi, config.input_size, &dir, "tune")?;
        attack_sets.push((method, attack_set, tune_set));
    }

    // GAN forgeries.
    let gan_config = config.gan_config();
    let gan_side = gan_config.output_side();
    let gan_data: Vec<Sample> = entries
        .iter()
        .map(|e| gray_to_sample(&e.image, gan_side, e.label == Label::Genuine))
        .collect();
    let gan_state =
        train_gan(&gan_data, &gan_config, config.gan_epochs).map_err(|e| stage("gan training", e))?;
    save_gan(&gan_state, &gan_config, out.join("gan.fbck"), WeightPrecision::F64)
        .map_err(|e| stage("gan checkpoint", e))?;
    files.push("gan.fbck".into());
    std::fs::write(out.join("gan_losses.tsv"), losses_tsv(&gan_state))?;
    files.push("gan_losses.tsv".into());

    let gan_images = generate(
        &gan_state,
        &gan_config,
        Label::Genuine,
        config.gan_attack + config.gan_tune,
    )
    .map_err(|e| stage("gan sampling", e))?;
    let gan_dir = out.join("forgeries").join("cgan");
    std::fs::create_dir_all(&gan_dir)?;
    let mut gan_attack_set = Vec::with_capacity(config.gan_attack);
    let mut gan_tune_set = Vec::with_capacity(config.gan_tune);
    for (i, img) in gan_images.iter().enumerate() {
        let (prefix, slot, set) = if i < config.gan_attack {
            ("attack", i, &mut gan_attack_set)
        } else {
            ("tune", i - config.gan_attack, &mut gan_tune_set)
        };
        std::fs::write(gan_dir.join(format!("{prefix}_{slot:03}.pgm")), save_pgm(img))?;
        set.push(gray_to_sample(img, config.input_size, false));
    }
    attack_sets.push((AttackMethod::Cgan, gan_attack_set, gan_tune_set));

    // Attacks against the baseline, then the fine-tuning defense per method.
    let mut attacks = Vec::with_capacity(attack_sets.len());
    let mut defenses = Vec::with_capacity(attack_sets.len());
    let tune_settings = TrainSettings {
        learning_rate: config.fine_tune_lr,
        batch_size: config.fine_tune_batch,
        ..settings
    };
    for (method, attack_set, tune_set) in &attack_sets {
        attacks.push(run_attack(&model, attack_set, *method)?);
        defenses.push(run_defense(
            &model,
            &split.train,
            tune_set,
            attack_set,
            *method,
            &tune_settings,
        )?);
    }

    std::fs::write(out.join("attacks.tsv"), attacks_tsv(&attacks))?;
    files.push("attacks.tsv".into());
    std::fs::write(out.join("defense.tsv"), defense_tsv(&defenses))?;
    files.push("defense.tsv".into());
    let md = report_markdown(config, n_genuine, n_forged, &model, &attacks, &defenses);
    std::fs::write(out.join("report.md"), md)?;
    files.push("report.md".into());

    Ok(PipelineOutcome {
        baseline_val: model.history[model.best_epoch].val,
        best_epoch: model.best_epoch,
        attacks,
        defenses,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A pipeline config small enough to run in seconds.
    pub(crate) fn tiny_config(out_dir: PathBuf, seed: u64) -> PipelineConfig {
        PipelineConfig {
            seed,
            out_dir,
            writers: 4,
            genuine_per_writer: 4,
            forged_per_writer: 4,
            canvas: 64,
            input_size: 16,
            conv_layers: 1,
            filters: 16,
            mlp_layers: 1,
            mlp_neurons: 16,
            patience: 4,
            max_epochs: 10,
            gan_gen_filters: 4,
            gan_disc_filters: 4,
            gan_epochs: 2,
            dpi: 100.0,
            robot_attack: 4,
            robot_tune: 4,
            gan_attack: 5,
            gan_tune: 3,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn kv_round_trip_and_defaults() {
        let text = "seed = 7\nwriters = 3\nprofiles = idraw2\njitter = 1.5\nstrokes_max = 4\n";
        let config = PipelineConfig::from_kv_text(text).unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.writers, 3);
        assert_eq!(config.profiles, vec!["idraw2".to_string()]);
        assert_eq!(config.jitter, 1.5);
        assert_eq!(config.strokes, (3, 4));
        // Untouched keys keep defaults.
        assert_eq!(config.input_size, PipelineConfig::default().input_size);

        assert!(PipelineConfig::from_kv_text("profiles = hand\n").is_err());
        assert!(PipelineConfig::from_kv_text("dpi = -3\n").is_err());
        assert!(PipelineConfig::from_kv_text("writers = 1\nrobot_attack = 100\n").is_err());
    }

    #[test]
    fn pipeline_completes_and_reports_hold_their_invariants() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path().join("run"), 42);
        let outcome = full_pipeline(&config).unwrap();

        assert_eq!(outcome.attacks.len(), 3);
        assert_eq!(outcome.defenses.len(), 3);
        for r in &outcome.attacks {
            assert!(r.n_success <= r.n_total);
            assert_eq!(r.percent, super::super::percent_of(r.n_success, r.n_total));
        }
        for d in &outcome.defenses {
            assert_eq!(d.delta_points, d.before.percent - d.after.percent);
            assert_eq!(d.before.n_total, d.after.n_total);
        }

        for f in [
            "corpus/dataset.tsv",
            "verifier.fbck",
            "selection.tsv",
            "gan.fbck",
            "gan_losses.tsv",
            "attacks.tsv",
            "defense.tsv",
            "report.md",
        ] {
            assert!(config.out_dir.join(f).is_file(), "{f} missing");
            assert!(outcome.files.contains(&f.to_string()), "{f} unlisted");
        }

        let report = std::fs::read_to_string(config.out_dir.join("report.md")).unwrap();
        assert!(report.contains("| idraw2 |"));
        assert!(report.contains("| lineus |"));
        assert!(report.contains("| cgan |"));
    }

    #[test]
    fn same_config_same_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let a = tiny_config(dir.path().join("a"), 9);
        let b = tiny_config(dir.path().join("b"), 9);
        full_pipeline(&a).unwrap();
        full_pipeline(&b).unwrap();
        for f in ["report.md", "attacks.tsv", "defense.tsv", "gan_losses.tsv", "selection.tsv"] {
            let x = std::fs::read(a.out_dir.join(f)).unwrap();
            let y = std::fs::read(b.out_dir.join(f)).unwrap();
            assert_eq!(x, y, "{f} differs between identical runs");
        }
    }
}
