//! Command-line front end for the signature forgery workbench.
//!
//! One subcommand per stage of the workflow: corpus synthesis, image
//! preprocessing, centerline tracing, G-code compilation and simulation,
//! verifier training and evaluation, GAN training and sampling, and the
//! attack/defense experiments — plus `pipeline`, which runs everything
//! from a single config file.
//!
//! Exit codes: 0 on success, 2 when arguments or input files fail
//! validation, 3 when an otherwise-valid run fails at execution time.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use forgebench_core::cgan::{
    generate, load_gan, losses_tsv, save_gan, train_gan, GanConfig, GanError,
};
use forgebench_core::gcode::{
    builtin_profile, compile, emit, load_profile, parse, simulate, DeviceProfile, GCodeError,
};
use forgebench_core::harness::{
    full_pipeline, gray_to_sample, run_attack, run_defense, synth_corpus, AttackMethod,
    AttackReport, DefenseReport, HarnessError, PipelineConfig, SyntheticSignatureSpec,
};
use forgebench_core::raster::{
    augment, binarize_otsu, load_dataset, load_image, resize_bilinear, save_pgm,
    AugmentationSpec, GrayImage, ImageFormat, Label,
};
use forgebench_core::vectorize::io::{drawing_from_text, drawing_to_text};
use forgebench_core::vectorize::{extract_polylines, simplify_drawing, thin};
use forgebench_core::verify::{
    evaluate, fine_tune, grid_search, load_model, save_model, split_dataset, to_tsv, train,
    EarlyStopPolicy, GridSpec, Metrics, ModelConfig, Sample, TrainSettings, VerifyError,
    WeightPrecision,
};

#[derive(Parser)]
#[command(name = "forgebench", version, about = "Attack and defend offline signature verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled signature corpus.
    Synth(SynthArgs),
    /// Resize (and optionally binarize) a signature image.
    Preprocess(PreprocessArgs),
    /// Trace a signature image into centerline strokes.
    Vectorize(VectorizeArgs),
    /// Compile a stroke drawing to device G-code.
    Compile(CompileArgs),
    /// Replay a G-code program through the plotter simulator.
    Simulate(SimulateArgs),
    /// Train the verifier on a labeled dataset.
    Train(TrainArgs),
    /// Sweep verifier architectures and tabulate the results.
    Gridsearch(GridsearchArgs),
    /// Evaluate a trained verifier on a labeled dataset.
    Eval(EvalArgs),
    /// Continue training an existing verifier on extra images.
    Finetune(FinetuneArgs),
    /// Train the conditional GAN forger.
    GanTrain(GanTrainArgs),
    /// Sample images from a trained GAN.
    GanSample(GanSampleArgs),
    /// Score a directory of forgeries against a verifier.
    Attack(AttackArgs),
    /// Measure an attack before and after the one-epoch fine-tuning defense.
    Defend(DefendArgs),
    /// Run the whole experiment from a config file.
    Pipeline(PipelineArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => cmd_synth(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Vectorize(a) => cmd_vectorize(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Train(a) => cmd_train(a),
        Command::Gridsearch(a) => cmd_gridsearch(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Finetune(a) => cmd_finetune(a),
        Command::GanTrain(a) => cmd_gan_train(a),
        Command::GanSample(a) => cmd_gan_sample(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Defend(a) => cmd_defend(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    }
}

// ---------------------------------------------------------------------------
// Errors and exit codes.

enum CliError {
    /// Bad arguments or input files: exit code 2.
    Usage(String),
    /// Failure while executing valid work: exit code 3.
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

fn usage(e: impl Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn harness_err(e: HarnessError) -> CliError {
    match e {
        HarnessError::BadSpec(_)
        | HarnessError::BadConfig(_)
        | HarnessError::BadInput(_)
        | HarnessError::Overlap { .. } => usage(e),
        HarnessError::Stage { .. } | HarnessError::Io(_) => runtime(e),
    }
}

fn verify_err(e: VerifyError) -> CliError {
    match e {
        VerifyError::Io(_) => runtime(e),
        _ => usage(e),
    }
}

fn gan_err(e: GanError) -> CliError {
    match e {
        GanError::Diverged { .. } | GanError::Io(_) => runtime(e),
        _ => usage(e),
    }
}

fn gcode_err(e: GCodeError) -> CliError {
    match e {
        GCodeError::Io(_) => runtime(e),
        _ => usage(e),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing.

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn load_gray(path: &Path) -> Result<GrayImage, CliError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let format = ImageFormat::from_extension(ext).ok_or_else(|| {
        CliError::Usage(format!("{}: expected a .pgm or .png image", path.display()))
    })?;
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    load_image(&bytes, format).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// All images in a directory in name order, as forgery samples.
fn forgery_dir(dir: &Path, input_size: usize) -> Result<Vec<Sample>, CliError> {
    let listing = std::fs::read_dir(dir)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = listing
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| ImageFormat::from_extension(e).is_some())
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no images found in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| Ok(gray_to_sample(&load_gray(p)?, input_size, false)))
        .collect()
}

/// A labeled dataset as verifier samples, plus its per-label counts.
fn dataset_samples(root: &Path, input_size: usize) -> Result<(Vec<Sample>, usize, usize), CliError> {
    let entries = load_dataset(root).map_err(usage)?;
    let genuine = entries.iter().filter(|e| e.label == Label::Genuine).count();
    let forged = entries.len() - genuine;
    let samples = entries
        .iter()
        .map(|e| gray_to_sample(&e.image, input_size, e.label == Label::Genuine))
        .collect();
    Ok((samples, genuine, forged))
}

fn resolve_profile(name: &str) -> Result<DeviceProfile, CliError> {
    match builtin_profile(name) {
        Some(profile) => Ok(profile),
        None => load_profile(Path::new(name)).map_err(usage),
    }
}

fn metrics_line(m: &Metrics) -> String {
    format!(
        "accuracy {:.2}%  precision {:.3}  recall {:.3}  f1 {:.3}",
        100.0 * m.accuracy(),
        m.precision(),
        m.recall(),
        m.f1()
    )
}

fn precision_flag(f32_weights: bool) -> WeightPrecision {
    if f32_weights {
        WeightPrecision::F32
    } else {
        WeightPrecision::F64
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelArg {
    Genuine,
    Forged,
}

impl From<LabelArg> for Label {
    fn from(l: LabelArg) -> Label {
        match l {
            LabelArg::Genuine => Label::Genuine,
            LabelArg::Forged => Label::Forged,
        }
    }
}

fn parse_method(s: &str) -> Result<AttackMethod, String> {
    AttackMethod::parse(s).ok_or_else(|| format!("`{s}` is not one of idraw2, lineus, cgan"))
}

fn print_attack(r: &AttackReport) {
    println!("{}: {}/{} forgeries accepted ({:.1}%)", r.method, r.n_success, r.n_total, r.percent);
}

fn print_defense(d: &DefenseReport) {
    println!(
        "{}: before {}/{} ({:.1}%), after {}/{} ({:.1}%), defense {:+.1} points",
        d.before.method,
        d.before.n_success,
        d.before.n_total,
        d.before.percent,
        d.after.n_success,
        d.after.n_total,
        d.after.percent,
        d.delta_points,
    );
}

// ---------------------------------------------------------------------------
// Corpus and image stages.

#[derive(Args)]
struct SynthArgs {
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    writers: usize,
    /// Genuine signatures per writer.
    #[arg(long, default_value_t = 4)]
    genuine: usize,
    /// Forged signatures per writer.
    #[arg(long, default_value_t = 4)]
    forged: usize,
    /// Canvas side in pixels.
    #[arg(long, default_value_t = 128)]
    canvas: usize,
    /// Control-point jitter std-dev in pixels (forgery strength).
    #[arg(long, default_value_t = 2.5)]
    jitter: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    strokes_min: usize,
    #[arg(long, default_value_t = 5)]
    strokes_max: usize,
    #[arg(long, default_value_t = 4)]
    control_points_min: usize,
    #[arg(long, default_value_t = 7)]
    control_points_max: usize,
}

fn cmd_synth(a: SynthArgs) -> Result<(), CliError> {
    let spec = SyntheticSignatureSpec {
        strokes: a.strokes_min..=a.strokes_max,
        control_points: a.control_points_min..=a.control_points_max,
        canvas: a.canvas,
        jitter: a.jitter,
        seed: a.seed,
    };
    spec.validate().map_err(harness_err)?;
    let n = synth_corpus(&spec, a.writers, (a.genuine, a.forged), &a.out).map_err(harness_err)?;
    println!("wrote {n} images to {}", a.out.display());
    Ok(())
}

#[derive(Args)]
struct PreprocessArgs {
    /// Input image (PGM or PNG).
    #[arg(long = "in")]
    input: PathBuf,
    /// Output image (always PGM).
    #[arg(long)]
    out: PathBuf,
    /// Target side in pixels.
    #[arg(long, default_value_t = 32)]
    size: usize,
    /// Binarize with Otsu's threshold after resizing.
    #[arg(long)]
    binarize: bool,
}

fn cmd_preprocess(a: PreprocessArgs) -> Result<(), CliError> {
    if a.size == 0 {
        return Err(CliError::Usage("--size must be at least 1".into()));
    }
    let img = load_gray(&a.input)?;
    let mut resized = resize_bilinear(&img, a.size);
    if a.binarize {
        resized = binarize_otsu(&resized).to_gray();
    }
    write_file(&a.out, save_pgm(&resized))
}

#[derive(Args)]
struct VectorizeArgs {
    /// Input image (PGM or PNG).
    #[arg(long = "in")]
    input: PathBuf,
    /// Output stroke drawing (text).
    #[arg(long)]
    out: PathBuf,
    /// Polyline simplification tolerance in pixels.
    #[arg(long, default_value_t = 0.75)]
    epsilon: f64,
}

fn cmd_vectorize(a: VectorizeArgs) -> Result<(), CliError> {
    if !(a.epsilon.is_finite() && a.epsilon >= 0.0) {
        return Err(CliError::Usage(format!("--epsilon {} must be non-negative", a.epsilon)));
    }
    let img = load_gray(&a.input)?;
    let skeleton = thin(&binarize_otsu(&img));
    let drawing = simplify_drawing(&extract_polylines(&skeleton), a.epsilon);
    write_file(&a.out, drawing_to_text(&drawing))?;
    println!(
        "{} strokes, {} points -> {}",
        drawing.strokes.len(),
        drawing.point_count(),
        a.out.display()
    );
    Ok(())
}

#[derive(Args)]
struct CompileArgs {
    /// Input stroke drawing (text).
    #[arg(long = "in")]
    input: PathBuf,
    /// Device profile: a builtin name (idraw2, lineus) or a profile file.
    #[arg(long)]
    profile: String,
    /// Output G-code file.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_compile(a: CompileArgs) -> Result<(), CliError> {
    let drawing = drawing_from_text(&read_text(&a.input)?).map_err(usage)?;
    let profile = resolve_profile(&a.profile)?;
    let program = compile(&drawing, &profile);
    let text = emit(&program, &profile).map_err(gcode_err)?;
    write_file(&a.out, text)?;
    println!("{} commands -> {}", program.commands.len(), a.out.display());
    Ok(())
}

#[derive(Args)]
struct SimulateArgs {
    /// Input G-code file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Device profile: a builtin name (idraw2, lineus) or a profile file.
    #[arg(long)]
    profile: String,
    /// Raster resolution in dots per inch.
    #[arg(long, default_value_t = 96.0)]
    dpi: f64,
    /// Output image (PGM).
    #[arg(long)]
    out: PathBuf,
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    if !(a.dpi.is_finite() && a.dpi > 0.0) {
        return Err(CliError::Usage(format!("--dpi {} must be positive", a.dpi)));
    }
    let program = parse(&read_text(&a.input)?).map_err(gcode_err)?;
    let profile = resolve_profile(&a.profile)?;
    let page = simulate(&program, &profile, a.dpi).map_err(gcode_err)?;
    write_file(&a.out, save_pgm(&page.to_gray()))
}

// ---------------------------------------------------------------------------
// Verifier stages.

#[derive(Args)]
struct TrainArgs {
    /// Labeled dataset root (dataset.tsv, or genuine/ and forged/ subdirs).
    #[arg(long)]
    data: PathBuf,
    /// Output checkpoint file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    input_size: usize,
    /// Rotation augmentation bound in degrees (0 disables).
    #[arg(long, default_value_t = 0.0)]
    augment_max_deg: f64,
    #[arg(long, default_value_t = 2)]
    conv_layers: usize,
    #[arg(long, default_value_t = 16)]
    filters: usize,
    #[arg(long, default_value_t = 1)]
    mlp_layers: usize,
    #[arg(long, default_value_t = 64)]
    mlp_neurons: usize,
    /// Early-stopping patience in epochs.
    #[arg(long, default_value_t = 25)]
    patience: usize,
    #[arg(long, default_value_t = 500)]
    max_epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Store checkpoint weights as f32 instead of f64.
    #[arg(long)]
    f32_weights: bool,
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    if !(0.0..=180.0).contains(&a.augment_max_deg) {
        return Err(CliError::Usage(format!(
            "--augment-max-deg {} out of [0, 180]",
            a.augment_max_deg
        )));
    }
    let entries = load_dataset(&a.data).map_err(usage)?;
    let mut images: Vec<GrayImage> = entries.iter().map(|e| e.image.clone()).collect();
    let mut labels: Vec<bool> = entries.iter().map(|e| e.label == Label::Genuine).collect();
    if a.augment_max_deg > 0.0 {
        let spec = AugmentationSpec::new(a.augment_max_deg, a.seed);
        images.extend(augment(&images, &spec));
        labels.extend(labels.clone());
    }
    let samples: Vec<Sample> = images
        .iter()
        .zip(&labels)
        .map(|(img, &genuine)| gray_to_sample(img, a.input_size, genuine))
        .collect();
    let n = samples.len();

    let split = split_dataset(samples, a.seed).map_err(verify_err)?;
    let config = ModelConfig {
        input_size: a.input_size,
        conv_layers: a.conv_layers,
        filters: a.filters,
        mlp_layers: a.mlp_layers,
        mlp_neurons: a.mlp_neurons,
        seed: a.seed,
    };
    let settings = TrainSettings {
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        max_epochs: a.max_epochs,
        ..TrainSettings::default()
    };
    let model = train(&config, &split, EarlyStopPolicy { patience: a.patience }, &settings)
        .map_err(verify_err)?;
    save_model(&model, &a.out, precision_flag(a.f32_weights)).map_err(runtime)?;
    println!(
        "trained on {n} samples, stopped after {} epochs (best {})",
        model.history.len(),
        model.best_epoch
    );
    println!("validation: {}", metrics_line(&model.history[model.best_epoch].val));
    println!("saved {}", a.out.display());
    Ok(())
}

#[derive(Clone, Copy, ValueEnum)]
enum GridKind {
    /// {1,2,3} conv layers x {16,32,64} filters.
    Conv,
    /// {1,2} dense layers x {16,32,64,128,256} neurons.
    Mlp,
}

#[derive(Args)]
struct GridsearchArgs {
    /// Labeled dataset root.
    #[arg(long)]
    data: PathBuf,
    /// Which sweep to run.
    #[arg(long, value_enum, default_value_t = GridKind::Conv)]
    grid: GridKind,
    /// Conv stem depth for the dense sweep.
    #[arg(long, default_value_t = 2)]
    conv_layers: usize,
    /// Conv stem width for the dense sweep.
    #[arg(long, default_value_t = 16)]
    filters: usize,
    #[arg(long, default_value_t = 32)]
    input_size: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 25)]
    patience: usize,
    #[arg(long, default_value_t = 500)]
    max_epochs: usize,
    /// Write the TSV table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_gridsearch(a: GridsearchArgs) -> Result<(), CliError> {
    let (samples, _, _) = dataset_samples(&a.data, a.input_size)?;
    let split = split_dataset(samples, a.seed).map_err(verify_err)?;
    let grid = match a.grid {
        GridKind::Conv => GridSpec::conv_sweep(),
        GridKind::Mlp => GridSpec::mlp_sweep(a.conv_layers, a.filters),
    };
    let settings = TrainSettings { max_epochs: a.max_epochs, ..TrainSettings::default() };
    let result = grid_search(
        &grid,
        &split,
        a.input_size,
        a.seed,
        EarlyStopPolicy { patience: a.patience },
        &settings,
    )
    .map_err(verify_err)?;
    let table = to_tsv(&result);
    match &a.out {
        Some(path) => write_file(path, table)?,
        None => print!("{table}"),
    }
    Ok(())
}

#[derive(Args)]
struct EvalArgs {
    /// Verifier checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Labeled dataset root.
    #[arg(long)]
    data: PathBuf,
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let model = load_model(&a.model).map_err(usage)?;
    let (samples, genuine, forged) = dataset_samples(&a.data, model.config.input_size)?;
    let metrics = evaluate(&model, &samples).map_err(verify_err)?;
    println!("{} samples ({genuine} genuine, {forged} forged)", samples.len());
    println!("{}", metrics_line(&metrics));
    Ok(())
}

#[derive(Args)]
struct FinetuneArgs {
    /// Verifier checkpoint to start from.
    #[arg(long)]
    model: PathBuf,
    /// Extra labeled images to tune on.
    #[arg(long)]
    data: PathBuf,
    /// Original training dataset to mix in (recommended).
    #[arg(long)]
    base_data: Option<PathBuf>,
    /// Output checkpoint file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long, default_value_t = 0.005)]
    learning_rate: f64,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    /// Store checkpoint weights as f32 instead of f64.
    #[arg(long)]
    f32_weights: bool,
}

fn cmd_finetune(a: FinetuneArgs) -> Result<(), CliError> {
    let model = load_model(&a.model).map_err(usage)?;
    let input_size = model.config.input_size;
    let (extra, genuine, forged) = dataset_samples(&a.data, input_size)?;
    let base = match &a.base_data {
        Some(root) => dataset_samples(root, input_size)?.0,
        None => Vec::new(),
    };
    let settings = TrainSettings {
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        ..TrainSettings::default()
    };
    let tuned = fine_tune(&model, &base, &extra, &settings, a.epochs).map_err(verify_err)?;
    save_model(&tuned, &a.out, precision_flag(a.f32_weights)).map_err(runtime)?;
    println!(
        "tuned {} epoch(s) on {} extra samples ({genuine} genuine, {forged} forged) + {} base",
        a.epochs,
        extra.len(),
        base.len()
    );
    println!("saved {}", a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// GAN stages.

#[derive(Args)]
struct GanTrainArgs {
    /// Labeled dataset root.
    #[arg(long)]
    data: PathBuf,
    /// Output checkpoint file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Upsampling doublings from the 8x8 seed (3 -> 64 px, 5 -> 256 px).
    #[arg(long, default_value_t = 3)]
    upsample_layers: usize,
    #[arg(long, default_value_t = 128)]
    gen_filters: usize,
    #[arg(long, default_value_t = 128)]
    disc_filters: usize,
    /// Write the per-epoch loss table (TSV) here.
    #[arg(long)]
    losses: Option<PathBuf>,
    /// Store checkpoint weights as f32 instead of f64.
    #[arg(long)]
    f32_weights: bool,
}

fn cmd_gan_train(a: GanTrainArgs) -> Result<(), CliError> {
    let config = GanConfig {
        upsample_layers: a.upsample_layers,
        gen_filters: a.gen_filters,
        disc_filters: a.disc_filters,
        ..GanConfig::desk_default(a.seed)
    };
    config.validate().map_err(gan_err)?;
    let (data, _, _) = dataset_samples(&a.data, config.output_side())?;
    let state = train_gan(&data, &config, a.epochs).map_err(gan_err)?;
    save_gan(&state, &config, &a.out, precision_flag(a.f32_weights)).map_err(runtime)?;
    if let Some(path) = &a.losses {
        write_file(path, losses_tsv(&state))?;
    }
    match (state.gen_loss_history.last(), state.disc_loss_history.last()) {
        (Some(g), Some(d)) => {
            println!("trained {} epochs: gen loss {g:.4}, disc loss {d:.4}", state.epoch)
        }
        _ => println!("trained 0 epochs (initialization only)"),
    }
    println!("saved {}", a.out.display());
    Ok(())
}

#[derive(Args)]
struct GanSampleArgs {
    /// GAN checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Class to condition on.
    #[arg(long, value_enum, default_value_t = LabelArg::Genuine)]
    label: LabelArg,
    /// Number of images to sample.
    #[arg(long, default_value_t = 25)]
    n: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_gan_sample(a: GanSampleArgs) -> Result<(), CliError> {
    let (state, config) = load_gan(&a.model).map_err(usage)?;
    let label: Label = a.label.into();
    let images = generate(&state, &config, label, a.n).map_err(gan_err)?;
    std::fs::create_dir_all(&a.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", a.out.display())))?;
    for (i, img) in images.iter().enumerate() {
        let name = format!("{}_{i:04}.pgm", label.as_str());
        write_file(&a.out.join(name), save_pgm(img))?;
    }
    println!("wrote {} {} images to {}", images.len(), label.as_str(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// Attack, defense, pipeline.

#[derive(Args)]
struct AttackArgs {
    /// Verifier checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Directory of forgery images.
    #[arg(long)]
    forgeries: PathBuf,
    /// How the forgeries were produced: idraw2, lineus, or cgan.
    #[arg(long, value_parser = parse_method)]
    method: AttackMethod,
}

fn cmd_attack(a: AttackArgs) -> Result<(), CliError> {
    let model = load_model(&a.model).map_err(usage)?;
    let forgeries = forgery_dir(&a.forgeries, model.config.input_size)?;
    let report = run_attack(&model, &forgeries, a.method).map_err(harness_err)?;
    print_attack(&report);
    Ok(())
}

#[derive(Args)]
struct DefendArgs {
    /// Verifier checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// The verifier's original training dataset root.
    #[arg(long)]
    train_data: PathBuf,
    /// Directory of forgeries for the one-epoch tune.
    #[arg(long)]
    tune: PathBuf,
    /// Directory of held-out forgeries to measure the attack on.
    #[arg(long)]
    attack: PathBuf,
    /// How the forgeries were produced: idraw2, lineus, or cgan.
    #[arg(long, value_parser = parse_method)]
    method: AttackMethod,
    #[arg(long, default_value_t = 0.005)]
    learning_rate: f64,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
}

fn cmd_defend(a: DefendArgs) -> Result<(), CliError> {
    let model = load_model(&a.model).map_err(usage)?;
    let input_size = model.config.input_size;
    let (train_set, _, _) = dataset_samples(&a.train_data, input_size)?;
    let tune_set = forgery_dir(&a.tune, input_size)?;
    let attack_set = forgery_dir(&a.attack, input_size)?;
    let settings = TrainSettings {
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        ..TrainSettings::default()
    };
    let report = run_defense(&model, &train_set, &tune_set, &attack_set, a.method, &settings)
        .map_err(harness_err)?;
    print_defense(&report);
    Ok(())
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline config file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override: ingest an existing dataset root instead of synthesizing.
    #[arg(long)]
    cedar_root: Option<PathBuf>,
}

fn cmd_pipeline(a: PipelineArgs) -> Result<(), CliError> {
    let mut config = PipelineConfig::load(&a.config).map_err(harness_err)?;
    if let Some(out) = a.out {
        config.out_dir = out;
    }
    if let Some(root) = a.cedar_root {
        config.cedar_root = Some(root);
    }
    let outcome = full_pipeline(&config).map_err(harness_err)?;
    println!(
        "baseline (epoch {}): {}",
        outcome.best_epoch,
        metrics_line(&outcome.baseline_val)
    );
    for r in &outcome.attacks {
        print_attack(r);
    }
    for d in &outcome.defenses {
        print_defense(d);
    }
    println!("report bundle in {}", config.out_dir.display());
    Ok(())
}
