use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "rdlimit",
    version,
    about = "Theoretical rate-distortion limits of transform coding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate of uniform quantization vs. the Gaussian R(D) over a variance grid.
    GapCurve(GapCurveArgs),
    /// Reverse water-filling of a distortion budget over given variances.
    Waterfill(WaterfillArgs),
    /// Monte Carlo check of the Gaussian test channel's mutual information.
    ChannelVerify(ChannelVerifyArgs),
    /// Rate overestimate from coding a correlated Gaussian pair independently.
    Correlation(CorrelationArgs),
    /// Rate-distortion curve of the simulated codec.
    RdSweep(SweepArgs),
    /// Uniform quantizer vs. test channel vs. test channel with context.
    Ablation(SweepArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// CSV destination; a `.manifest.json` echo is written next to it.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct GapCurveArgs {
    #[command(flatten)]
    pub out: OutputArgs,
    /// Distortion D (default: uniform rounding noise, 1/12).
    #[arg(long)]
    pub distortion: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub min_variance: f64,
    #[arg(long, default_value_t = 1e3)]
    pub max_variance: f64,
    #[arg(long, default_value_t = 121)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct WaterfillArgs {
    #[command(flatten)]
    pub out: OutputArgs,
    /// Comma-separated source variances.
    #[arg(long, value_delimiter = ',', required = true)]
    pub variances: Vec<f64>,
    /// Total distortion budget summed over all sources.
    #[arg(long)]
    pub budget: f64,
}

#[derive(Debug, Args)]
pub struct ChannelVerifyArgs {
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long)]
    pub variance: f64,
    #[arg(long)]
    pub distortion: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CorrelationArgs {
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long, default_value_t = 1.0)]
    pub variance: f64,
    #[arg(long)]
    pub distortion: f64,
    /// Comma-separated correlation coefficients.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,0.95,0.99"
    )]
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Identity,
    Dct,
    Klt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ContextArg {
    None,
    Avg,
    Lsq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantizerArg {
    TestChannel,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SyntheticArg {
    Iid,
    Ar1,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub out: OutputArgs,
    /// Binary PGM inputs; results are averaged over them per budget.
    #[arg(long, num_args = 1.., conflicts_with = "synthetic")]
    pub input: Vec<PathBuf>,
    /// Use a generated Gaussian field instead of files.
    #[arg(long, value_enum)]
    pub synthetic: Option<SyntheticArg>,
    #[arg(long, default_value = "256x256")]
    pub size: String,
    #[arg(long, default_value_t = 1.0)]
    pub variance: f64,
    #[arg(long, default_value_t = 0.9)]
    pub ar_coeff: f64,
    #[arg(long, value_enum, default_value = "dct")]
    pub transform: TransformArg,
    #[arg(long, default_value_t = 8)]
    pub block_size: usize,
    /// Load a fitted KLT basis instead of fitting one on the inputs.
    #[arg(long)]
    pub klt_basis: Option<PathBuf>,
    /// Store the KLT basis used for the run.
    #[arg(long)]
    pub save_klt: Option<PathBuf>,
    /// Store the context model fitted on the first input.
    #[arg(long)]
    pub save_context: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "none")]
    pub context: ContextArg,
    #[arg(long, value_enum, default_value = "test-channel")]
    pub quantizer: QuantizerArg,
    /// Per-latent mean distortion.
    #[arg(long, conflicts_with = "budget_sweep")]
    pub budget: Option<f64>,
    /// Comma-separated, strictly increasing per-latent distortions.
    #[arg(long)]
    pub budget_sweep: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
