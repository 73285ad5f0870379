use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "unlock",
    version,
    about = "Pseudo-labels, object-pool mixing, fusion and evaluation for occlusion-aware segmentation"
)]
pub struct Cli {
    /// Worker threads for per-image stages; 0 uses every core.
    #[arg(long, global = true, env = "UNLOCK_JOBS", default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate synthetic scenes, ground truth and simulated predictions.
    Synth(SynthArgs),
    /// Compute class-wise thresholds for every branch.
    Thresholds(ThresholdsArgs),
    /// Generate omni pseudo-labels.
    PseudoLabel(PseudoLabelArgs),
    /// Object pool operations.
    Pool {
        #[command(subcommand)]
        command: PoolCommand,
    },
    /// Paste pool objects into pseudo-labeled images.
    Mix(MixArgs),
    /// Fuse branch predictions into the five segmentation outputs.
    Fuse(FuseArgs),
    /// Score fused outputs against ground truth.
    Eval(EvalArgs),
    /// Run every stage and evaluate when ground truth is present.
    Pipeline(PipelineArgs),
}

#[derive(Subcommand, Debug)]
pub enum PoolCommand {
    /// Build the object pool from strictly thresholded amodal predictions.
    Build(PoolBuildArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoisePreset {
    /// Predictions equal the ground truth.
    Zero,
    /// Moderate boundary, score, semantic and detection noise.
    Typical,
    /// Zero noise except a low-scoring rider class present in every scene.
    Rare,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = NoisePreset::Typical)]
    pub noise: NoisePreset,
    /// JSON noise settings; replaces the preset.
    #[arg(long)]
    pub noise_config: Option<PathBuf>,
    /// JSON scene settings.
    #[arg(long)]
    pub scene_config: Option<PathBuf>,
}

/// Pipeline settings: a JSON file plus per-key overrides.
#[derive(Args, Debug, Default, Clone)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub semantic_fix: Option<f64>,
    #[arg(long)]
    pub semantic_per: Option<f64>,
    #[arg(long)]
    pub instance_fix: Option<f64>,
    #[arg(long)]
    pub instance_per: Option<f64>,
    #[arg(long)]
    pub amodal_fix: Option<f64>,
    #[arg(long)]
    pub amodal_per: Option<f64>,
    #[arg(long)]
    pub strict_fix: Option<f64>,
    #[arg(long)]
    pub strict_per: Option<f64>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub capacity: Option<usize>,
    #[arg(long)]
    pub confidence_floor: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ThresholdsArgs {
    /// Prediction manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Also write the thresholds to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug)]
pub struct PseudoLabelArgs {
    /// Prediction manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug)]
pub struct PoolBuildArgs {
    /// Prediction manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Strict fixed cutoff.
    #[arg(long)]
    pub fix: Option<f64>,
    /// Strict top fraction.
    #[arg(long)]
    pub per: Option<f64>,
    #[arg(long)]
    pub capacity: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct MixArgs {
    /// Pseudo-label manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Pool directory.
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FuseArgs {
    /// Prediction manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub confidence_floor: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    All,
    Miou,
    Pq,
    Apq,
    Ap,
    Aap,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Directory holding the fused manifest.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory holding the ground-truth manifest.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalMode::All)]
    pub mode: EvalMode,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Directory holding the prediction manifest and, optionally, ground truth.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory; defaults to `<data>/run`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}
