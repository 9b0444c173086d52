use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vigil", version, about = "Driver distraction classification and fatigue detection")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Default, Args)]
pub struct Global {
    /// Seed for every random choice; required by commands that draw random numbers.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `key = value` configuration file (model, training, fatigue and augmentation keys).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for data-parallel work.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a labelled synthetic image corpus and its manifest.
    GenSynth(GenSynthArgs),
    /// Train a classifier on a manifest.
    Train(TrainArgs),
    /// Score a trained model and print per-class metrics as CSV.
    Eval(EvalArgs),
    /// Emit one JSON line per frame from images and/or landmarks.
    Detect(DetectArgs),
    /// Write augmented copies of a manifest's images.
    Augment(AugmentArgs),
    /// Time single-image inference.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub classes: usize,
    #[arg(long, default_value_t = 200)]
    pub per_class: usize,
    /// Square image side in pixels.
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    /// Also write `landmarks.txt` with this many frames.
    #[arg(long)]
    pub landmark_frames: Option<usize>,
    /// Probability that a synthetic eye episode is a closure.
    #[arg(long, default_value_t = 0.2)]
    pub closed_prob: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Arch {
    /// Stem plus five separable blocks, for small inputs.
    Desk,
    /// Full thirteen-block stack.
    Mobilenet,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output weight file.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch CSV log; defaults to the weight path with a `.csv` extension.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Arch::Desk)]
    pub arch: Arch,
    /// Width multiplier.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// `constant`, `step <factor> <period>`, `exponential [decay]` or `piecewise <epoch>:<lr>,...`.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub l1: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// `ce` or `bce`.
    #[arg(long)]
    pub loss: Option<String>,
    /// Suppress per-epoch progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    /// Score every entry instead of the validation split.
    #[arg(long)]
    pub all: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Directory of PPM/PGM frames, taken in file-name order.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Landmark file with one block per frame.
    #[arg(long)]
    pub landmarks: Option<PathBuf>,
    /// Classifier weights; required with `--frames`.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Frame spacing used for timestamps when no landmark file is given.
    #[arg(long, default_value_t = 33)]
    pub frame_ms: i64,
    /// Write JSON lines here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Augmented variants per source image.
    #[arg(long, default_value_t = 1)]
    pub multiplier: usize,
    /// Policy file with augmentation ranges; otherwise the augmentation keys of `--config`.
    #[arg(long)]
    pub policy: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Weight file; without it a freshly initialized model is timed.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Width multiplier of the fresh model.
    #[arg(long, default_value_t = 0.25)]
    pub alpha: f64,
    /// Input side of the fresh model.
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,
    #[arg(long, default_value_t = 10)]
    pub warmup: usize,
    /// Also write the report as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
