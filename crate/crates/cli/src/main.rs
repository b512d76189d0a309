//! `embadapt`: adapt frozen multimodal embeddings with contrastive projection
//! heads and compare them against raw and PCA baselines.
//!
//! Exit codes: 0 success, 1 error, 2 usage error, 3 some comparison cells
//! failed (the failures are listed as JSON on stderr and in the run manifest).

mod run_manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use embadapt::data::{DatasetManifest, MANIFEST_VERSION};
use embadapt::eval::{benchmark_timing, run_comparison, timing_csv, Arm, ClassifierKind, CompareConfig};
use embadapt::pipeline::PIPELINE_FILE;
use embadapt::rng::{derive_seed, STREAM_FOLDS};
use embadapt::{
    adapt, apply, generate_synthetic, load_dataset, save_dataset, save_embeddings, AdaptedPipeline, Mode,
    Nonlinearity, SynthSpec, TrainConfig,
};
use serde_json::json;

use run_manifest::{manifest_path_for, FileHash, RunManifest};

const EXIT_CELL_FAILURES: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "embadapt", version, about = "Task-specific adaptation of frozen multimodal embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic multimodal dataset (manifest plus CSV files).
    Synth(SynthArgs),
    /// Train contrastive projection heads and save the fitted pipeline.
    Adapt(AdaptArgs),
    /// Apply a saved pipeline and export the projected embeddings as CSV.
    Project(ProjectArgs),
    /// Cross-validated comparison of projection arms across classifiers.
    Compare(CompareArgs),
    /// Time adaptation and a raw-embedding classifier fit.
    Bench(BenchArgs),
    /// Re-run the command recorded in a run manifest and check its output hashes.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Output directory for dataset.toml, labels.csv and modality_<j>.csv.
    #[arg(long)]
    out: PathBuf,
    /// Number of samples.
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Number of modalities, each of width --dim.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    modalities: u64,
    /// Width of every modality.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(2..))]
    dim: u64,
    /// Leading coordinates of each modality that carry the label signal [default: dim/2].
    #[arg(long)]
    signal_dims: Option<usize>,
    /// How the label is embedded in the signal block.
    #[arg(long, value_enum, default_value_t = NonlinearityArg::XorRotate)]
    nonlinearity: NonlinearityArg,
    /// Standard deviation of the distractor coordinates.
    #[arg(long, default_value_t = 1.0)]
    noise_sigma: f64,
    /// Distance between the two levels of a signal coordinate.
    #[arg(long, default_value_t = 1.0)]
    signal_offset: f64,
    /// Standard deviation of the jitter on signal coordinates.
    #[arg(long, default_value_t = 0.15)]
    signal_jitter: f64,
    /// Fraction of positive labels (rounded to an exact count).
    #[arg(long, default_value_t = 0.5)]
    class_balance: f64,
    /// Seed for labels, rotations and samples.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write into a non-empty output directory, overwriting files of the same name.
    #[arg(long)]
    force: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum NonlinearityArg {
    None,
    XorRotate,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    /// One head over the concatenated modalities.
    Single,
    /// One head per modality, outputs concatenated.
    Permod,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Single => Mode::Single,
            ModeArg::Permod => Mode::PerModality,
        }
    }
}

/// Projection-head hyperparameters. Defaults follow the reference setup.
#[derive(Args, Debug, Clone)]
struct TrainArgs {
    /// Adam step size.
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    /// Minibatch size; all pairs inside a batch contribute to the loss.
    #[arg(long, default_value_t = 128)]
    batch_size: usize,
    /// Training epochs per head.
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    /// Temperature dividing the pair inner products.
    #[arg(long, default_value_t = 0.1)]
    temperature: f64,
    /// Number of ReLU hidden layers.
    #[arg(long, default_value_t = 1)]
    hidden_layers: usize,
    /// Hidden layer width [default: 2 x projection size].
    #[arg(long)]
    hidden_width: Option<usize>,
    /// Output size K of each head; must be smaller than the head's input.
    #[arg(long, default_value_t = 128)]
    projection_size: usize,
    /// Leave out the (i, i) pairs [default: included].
    #[arg(long)]
    no_self_pairs: bool,
    /// Leave head outputs unnormalized [default: L2-normalized rows].
    #[arg(long)]
    no_normalize: bool,
    /// Weight pairs so positive and negative pairs contribute equally in total [default: off].
    #[arg(long)]
    balance_pairs: bool,
}

impl TrainArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            temperature: self.temperature,
            hidden_layers: self.hidden_layers,
            hidden_width: self.hidden_width,
            projection_size: self.projection_size,
            include_self_pairs: !self.no_self_pairs,
            normalize_outputs: !self.no_normalize,
            balance_pairs: self.balance_pairs,
            seed,
        }
    }
}

#[derive(Args, Debug)]
struct AdaptArgs {
    /// Dataset manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    /// Head layout.
    #[arg(long, value_enum, default_value_t = ModeArg::Permod)]
    mode: ModeArg,
    /// Output directory for the pipeline, training logs and run manifest.
    #[arg(long)]
    out: PathBuf,
    /// Base seed; head j of a per-modality pipeline uses seed XOR j.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 8)]
    threads: usize,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    /// Pipeline directory written by `adapt`.
    #[arg(long)]
    pipeline: PathBuf,
    /// Dataset manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    /// Output CSV (`id,dim_0,...`).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Dataset manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    /// Arms to evaluate.
    #[arg(long, value_delimiter = ',', default_values_t = Arm::ALL.map(|a| a.name().to_owned()),
          value_parser = clap::builder::PossibleValuesParser::new(Arm::ALL.map(|a| a.name())))]
    arms: Vec<String>,
    /// Downstream classifiers.
    #[arg(long, value_delimiter = ',', default_values_t = ClassifierKind::ALL.map(|c| c.name().to_owned()),
          value_parser = clap::builder::PossibleValuesParser::new(ClassifierKind::ALL.map(|c| c.name())))]
    classifiers: Vec<String>,
    /// Number of stratified folds.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    k: u64,
    /// Base seed for folds, projections and classifiers.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output report CSV.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 8)]
    threads: usize,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Dataset manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 8)]
    threads: usize,
    /// Seed for head initialization and shuffling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output timing CSV.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// A run manifest written by any other command.
    run: PathBuf,
}

/// What a command produced, for its run manifest.
struct Outcome {
    config: serde_json::Value,
    seeds: serde_json::Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    failures: Vec<serde_json::Value>,
    manifest_path: PathBuf,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(argv: Vec<String>) -> Result<ExitCode> {
    let cli = match Cli::try_parse_from(std::iter::once("embadapt".to_owned()).chain(argv.iter().cloned())) {
        Ok(cli) => cli,
        Err(e) => {
            e.print()?;
            return Ok(ExitCode::from(e.exit_code() as u8));
        }
    };
    if let Command::Replay(args) = &cli.command {
        return replay(&args.run);
    }
    let start = Instant::now();
    let (name, outcome) = match cli.command {
        Command::Synth(a) => ("synth", synth(a)?),
        Command::Adapt(a) => ("adapt", with_threads(a.threads, || cmd_adapt(a))?),
        Command::Project(a) => ("project", project(a)?),
        Command::Compare(a) => ("compare", with_threads(a.threads, || compare(a))?),
        Command::Bench(a) => ("bench", bench(a)?),
        Command::Replay(_) => unreachable!(),
    };
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        command: name.to_owned(),
        argv,
        config: outcome.config,
        seeds: outcome.seeds,
        inputs: outcome.inputs.iter().map(|p| FileHash::of(p)).collect::<Result<_>>()?,
        outputs: outcome.outputs.iter().map(|p| FileHash::of(p)).collect::<Result<_>>()?,
        wall_seconds: start.elapsed().as_secs_f64(),
        failures: outcome.failures,
    };
    manifest.write(&outcome.manifest_path)?;
    eprintln!("{name}: wrote {} ({:.2}s)", outcome.manifest_path.display(), manifest.wall_seconds);
    if manifest.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{}", serde_json::to_string(&json!({ "failures": manifest.failures }))?);
        Ok(ExitCode::from(EXIT_CELL_FAILURES))
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads == 0 {
        bail!("--threads must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build()?.install(f)
}

/// The manifest file plus every file it references.
fn dataset_inputs(manifest: &Path) -> Result<Vec<PathBuf>> {
    let m = DatasetManifest::read(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut paths = vec![manifest.to_path_buf(), base.join(&m.labels)];
    paths.extend(m.modalities.iter().map(|e| base.join(&e.path)));
    Ok(paths)
}

fn pipeline_files(dir: &Path, n: usize) -> Vec<PathBuf> {
    std::iter::once(dir.join(PIPELINE_FILE))
        .chain((0..n).map(|j| dir.join(format!("projection_{j}.txt"))))
        .collect()
}

fn synth(a: SynthArgs) -> Result<Outcome> {
    if a.out.exists() && fs::read_dir(&a.out)?.next().is_some() && !a.force {
        bail!("{} is not empty (use --force to overwrite)", a.out.display());
    }
    let m = a.modalities as usize;
    let d = a.dim as usize;
    let spec = SynthSpec {
        n_samples: a.n as usize,
        dims: vec![d; m],
        signal_dims: vec![a.signal_dims.unwrap_or((d / 2).max(2)); m],
        noise_sigma: a.noise_sigma,
        signal_offset: a.signal_offset,
        signal_jitter: a.signal_jitter,
        class_balance: a.class_balance,
        nonlinearity: match a.nonlinearity {
            NonlinearityArg::None => Nonlinearity::None,
            NonlinearityArg::XorRotate => Nonlinearity::XorRotate,
        },
        seed: a.seed,
    };
    let ds = generate_synthetic(&spec)?;
    let manifest = save_dataset(&ds, &a.out)?;
    Ok(Outcome {
        config: json!({ "spec": spec, "manifest_format_version": MANIFEST_VERSION }),
        seeds: json!({ "base": a.seed }),
        inputs: vec![],
        outputs: dataset_inputs(&manifest)?,
        failures: vec![],
        manifest_path: manifest_path_for(&a.out, true),
    })
}

fn cmd_adapt(a: AdaptArgs) -> Result<Outcome> {
    let ds = load_dataset(&a.manifest)?;
    let mode = Mode::from(a.mode);
    let config = a.train.config(a.seed);
    let adapted = adapt(&ds, mode, &config)?;
    adapted.pipeline.save(&a.out)?;
    let mut outputs = pipeline_files(&a.out, adapted.pipeline.projections().len());
    for (j, log) in adapted.logs.iter().enumerate() {
        let path = a.out.join(format!("training_log_{j}.csv"));
        fs::write(&path, log.to_csv()).with_context(|| format!("writing {}", path.display()))?;
        outputs.push(path);
    }
    let head_seeds: Vec<u64> = match mode {
        Mode::Single => vec![a.seed],
        Mode::PerModality => (0..ds.n_modalities() as u64).map(|j| a.seed ^ j).collect(),
    };
    Ok(Outcome {
        config: json!({ "mode": mode, "train": config, "threads": a.threads }),
        seeds: json!({ "base": a.seed, "heads": head_seeds }),
        inputs: dataset_inputs(&a.manifest)?,
        outputs,
        failures: vec![],
        manifest_path: manifest_path_for(&a.out, true),
    })
}

fn project(a: ProjectArgs) -> Result<Outcome> {
    let pipeline = AdaptedPipeline::load(&a.pipeline)?;
    let ds = load_dataset(&a.manifest)?;
    let projected = apply(&pipeline, &ds)?;
    save_embeddings(&projected, ds.sample_ids(), &a.out)?;
    let mut inputs = pipeline_files(&a.pipeline, pipeline.projections().len());
    inputs.extend(dataset_inputs(&a.manifest)?);
    Ok(Outcome {
        config: json!({ "mode": pipeline.mode(), "output_dim": pipeline.output_dim() }),
        seeds: json!(null),
        inputs,
        outputs: vec![a.out.clone()],
        failures: vec![],
        manifest_path: manifest_path_for(&a.out, false),
    })
}

fn compare(a: CompareArgs) -> Result<Outcome> {
    let ds = load_dataset(&a.manifest)?;
    let config = CompareConfig {
        arms: a.arms.iter().map(|s| s.parse()).collect::<embadapt::Result<_>>()?,
        classifiers: a.classifiers.iter().map(|s| s.parse()).collect::<embadapt::Result<_>>()?,
        train: a.train.config(a.seed),
        k: a.k as usize,
        seed: a.seed,
    };
    let report = run_comparison(&ds, &config)?;
    fs::write(&a.out, report.to_csv()).with_context(|| format!("writing {}", a.out.display()))?;
    let failures = report
        .failures()
        .into_iter()
        .map(|(arm, classifier, fold, reason)| {
            json!({ "arm": arm, "classifier": classifier, "fold": fold, "reason": reason })
        })
        .collect();
    Ok(Outcome {
        config: json!({ "compare": report.meta.config, "threads": a.threads }),
        seeds: json!({
            "base": a.seed,
            "folds": derive_seed(a.seed, &[STREAM_FOLDS]),
            "projections": report.projections,
        }),
        inputs: dataset_inputs(&a.manifest)?,
        outputs: vec![a.out.clone()],
        failures,
        manifest_path: manifest_path_for(&a.out, false),
    })
}

fn bench(a: BenchArgs) -> Result<Outcome> {
    let ds = load_dataset(&a.manifest)?;
    let config = a.train.config(a.seed);
    let records = benchmark_timing(&ds, &config, a.threads)?;
    fs::write(&a.out, timing_csv(&records)).with_context(|| format!("writing {}", a.out.display()))?;
    for r in &records {
        eprintln!("{:>20}  {} threads  {:.3}s", r.arm, r.threads, r.wall_seconds);
    }
    Ok(Outcome {
        config: json!({ "train": config, "threads": a.threads }),
        seeds: json!({ "base": a.seed }),
        inputs: dataset_inputs(&a.manifest)?,
        outputs: vec![a.out.clone()],
        failures: vec![],
        manifest_path: manifest_path_for(&a.out, false),
    })
}

/// Re-runs a recorded command and compares output hashes. Timing CSVs are
/// wall-clock measurements and are exempt from the comparison.
fn replay(run_path: &Path) -> Result<ExitCode> {
    let recorded = RunManifest::read(run_path)?;
    let mut argv = recorded.argv.clone();
    if recorded.command == "synth" && !argv.iter().any(|a| a == "--force") {
        argv.push("--force".to_owned());
    }
    for input in &recorded.inputs {
        if FileHash::of(&input.path)? != *input {
            bail!("input {} changed since the recorded run", input.path.display());
        }
    }
    let code = run(argv)?;
    if recorded.command == "bench" {
        return Ok(code);
    }
    let mut mismatched = Vec::new();
    for output in &recorded.outputs {
        if FileHash::of(&output.path)? != *output {
            mismatched.push(output.path.display().to_string());
        }
    }
    if !mismatched.is_empty() {
        bail!("outputs differ from the recorded run: {}", mismatched.join(", "));
    }
    eprintln!("replay: {} outputs reproduced", recorded.outputs.len());
    Ok(code)
}
