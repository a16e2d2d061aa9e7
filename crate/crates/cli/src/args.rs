use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "sauna",
    version,
    about = "Soft-label transforms, losses and metrics for binary segmentation"
)]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "SAUNA_THREADS")]
    pub threads: Option<usize>,

    /// Suppress progress and summary output on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a binary mask into a SAUNA field.
    Transform(TransformArgs),
    /// Score a prediction field against a target field.
    Loss(LossArgs),
    /// Binarize predictions and report per-image metrics as CSV.
    Eval(EvalArgs),
    /// Render a field file as a heatmap PNG.
    Render(RenderArgs),
    /// Write a synthetic vessel corpus.
    Synth(SynthArgs),
    /// Train the pixel model under each loss/label variant and compare.
    TrainDemo(TrainDemoArgs),
    /// Run the property and gradient self-check suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Mask image (8-bit grayscale PNG or binary PGM).
    #[arg(long)]
    pub mask: PathBuf,
    /// Output field file.
    #[arg(long)]
    pub out: PathBuf,
    /// Drop the thickness map (output equals the boundary map).
    #[arg(long)]
    pub no_thickness: bool,
    /// Drop the boundary map (output equals the thickness map).
    #[arg(long)]
    pub no_boundary: bool,
    /// Also write a heatmap PNG.
    #[arg(long, value_name = "PNG")]
    pub render: Option<PathBuf>,
    /// Pixels strictly above this intensity are foreground.
    #[arg(long, default_value_t = 127)]
    pub threshold: u8,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Prediction field file.
    #[arg(long)]
    pub pred: PathBuf,
    /// Target field file.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub weight_gjml: f64,
    #[arg(long, default_value_t = 1.0)]
    pub weight_sfl1: f64,
    /// Write the JSON record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction field files, paired in order with --gt.
    #[arg(long, required = true)]
    pub pred: Vec<PathBuf>,
    /// Ground-truth masks.
    #[arg(long, required = true)]
    pub gt: Vec<PathBuf>,
    /// Prediction values strictly above this are foreground.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub threshold: f64,
    /// Intensity threshold for reading the masks.
    #[arg(long, default_value_t = 127)]
    pub mask_threshold: u8,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Field file.
    #[arg(long)]
    pub field: PathBuf,
    /// Output PNG.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Side length in pixels.
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 3)]
    pub min_branches: usize,
    #[arg(long, default_value_t = 8)]
    pub max_branches: usize,
    /// Smallest branch half-width in pixels.
    #[arg(long, default_value_t = 1.0)]
    pub min_thickness: f64,
    /// Largest branch half-width in pixels.
    #[arg(long, default_value_t = 6.0)]
    pub max_thickness: f64,
    #[arg(long, default_value_t = 0.1)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub blur_radius: usize,
}

#[derive(Debug, Args)]
pub struct TrainDemoArgs {
    /// Directory receiving table.csv and curves.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub n_train: usize,
    #[arg(long, default_value_t = 10)]
    pub n_test: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = sauna_core::trainer::EXPERIMENT_LEARNING_RATE)]
    pub lr: f64,
    /// Variants to train, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "hard-l1,full,no-thickness,no-boundary,only-gjml,only-sfl1"
    )]
    pub variants: Vec<String>,
    /// Side length of the synthetic images.
    #[arg(long, default_value_t = 128)]
    pub size: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Trial count for every randomized suite (quick mode).
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<FaultArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FaultArg {
    GjmlSign,
}
