mod commands;
mod inputs;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "skinbench", version, about = "Skin detection toolkit and comparison harness")]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "SKINBENCH_WORKERS", default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a labeled manifest.
    Train(TrainArgs),
    /// Run one detector over a manifest or image directory.
    Detect(DetectArgs),
    /// Run a weighted-vote ensemble.
    Ensemble(EnsembleArgs),
    /// Score predictions against ground truth and write a CSV report.
    Eval(EvalArgs),
    /// Merge reports into a ranked method-by-dataset table.
    Compare(CompareArgs),
    /// Print a published ensemble configuration.
    Preset(PresetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TrainMethod {
    Bayes,
    Spl,
    Gmm,
    Cheddad,
    Lda,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    method: TrainMethod,
    /// Labeled training manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Histogram bins per channel (bayes, spl).
    #[arg(long, default_value_t = skinbench_core::models::DEFAULT_BINS)]
    bins: u32,
    /// Mixture components per class (gmm).
    #[arg(long, default_value_t = 16)]
    components: usize,
    /// Pixels sampled per class (gmm).
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Central probability mass of the skin interval (cheddad).
    #[arg(long, default_value_t = skinbench_core::rules::DEFAULT_MASS)]
    mass: f64,
    /// Model whose probability map feeds the texture features (lda).
    #[arg(long)]
    base_model: Option<PathBuf>,
    /// Seed for every random choice (gmm initialization and sampling).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
pub struct ModelArgs {
    /// Trained model files; repeat for methods needing several.
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    /// Model providing the SA base map (defaults to the histogram posterior).
    #[arg(long)]
    base_model: Option<PathBuf>,
}

#[derive(Args)]
pub struct DetectArgs {
    #[arg(long)]
    method: String,
    #[command(flatten)]
    models: ModelArgs,
    /// Threshold; defaults to the method's published setting.
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Manifest file or directory of images.
    #[arg(long)]
    input: PathBuf,
    /// Directory for the output masks.
    #[arg(long)]
    out: PathBuf,
    /// Also write probability maps here.
    #[arg(long)]
    dump_prob: Option<PathBuf>,
}

#[derive(Args)]
pub struct EnsembleArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Override the preset's w_tau.
    #[arg(long, requires = "preset")]
    wtau: Option<f64>,
    /// External map directory for a member, as NAME=DIR.
    #[arg(long = "map-dir")]
    map_dirs: Vec<String>,
    #[command(flatten)]
    models: ModelArgs,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Manifest with ground truth (and group ids or face/nonface labels).
    #[arg(long)]
    manifest: PathBuf,
    /// Directory of predicted masks named `<id>.png`.
    #[arg(long, required_unless_present = "sweep")]
    pred: Option<PathBuf>,
    /// Directory of probability maps named `<id>.png`, for --sweep.
    #[arg(long, requires = "sweep")]
    prob: Option<PathBuf>,
    /// Comma-separated thresholds to sweep over the probability maps.
    #[arg(long, value_delimiter = ',', requires = "prob")]
    sweep: Option<Vec<f64>>,
    /// Average metrics per group instead of over all pixels.
    #[arg(long)]
    group_average: bool,
    /// Average precision of the face/nonface ranking by skin fraction.
    #[arg(long)]
    ap: bool,
    /// Method name written to the report.
    #[arg(long)]
    method: Option<String>,
    /// Dataset name written to the report (default: manifest stem).
    #[arg(long)]
    dataset: Option<String>,
    /// Threshold recorded in the report for a single prediction set.
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
pub struct CompareArgs {
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct PresetArgs {
    /// vote1, vote2, vote3 or vote4.
    name: String,
    #[arg(long)]
    wtau: Option<f64>,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::FAILURE;
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Detect(a) => commands::detect(a),
        Command::Ensemble(a) => commands::ensemble(a),
        Command::Eval(a) => commands::eval(a),
        Command::Compare(a) => commands::compare(a),
        Command::Preset(a) => commands::preset(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
