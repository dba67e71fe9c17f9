use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "plp", version, about = "Perfusion weights, consistency experiments and synthetic phantoms")]
#[command(args_override_self = true)]
pub struct Cli {
    /// JSON object of flag values; explicit flags take precedence.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Arterial input function utilities.
    Aif {
        #[command(subcommand)]
        action: AifAction,
    },
    /// Weight vectors of one estimator, plus quality metrics.
    Weights(WeightsArgs),
    /// Conditioning or cutoff surfaces over the gamma AIF family.
    Surface(SurfaceArgs),
    /// TSVD volume and flow weights at several explicit ranks.
    Panorama(PanoramaArgs),
    /// Synthetic phantom utilities.
    Phantom {
        #[command(subcommand)]
        action: PhantomAction,
    },
    /// Parameter maps from pixel data.
    Map {
        #[command(subcommand)]
        action: MapAction,
    },
    /// Weight consistency under image-reduction schedules.
    Schedule(ScheduleArgs),
    /// Residual functions and perfusion parameters of every pixel.
    Recover(RecoverArgs),
}

#[derive(Debug, Subcommand)]
pub enum AifAction {
    /// Sample the gamma-variate AIF t^a·exp(-b·t) on a uniform grid.
    Gen {
        #[command(flatten)]
        gamma: GammaArgs,
        #[arg(long, default_value = "-")]
        output: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum PhantomAction {
    /// Generate pixel data and ground truth from a JSON description.
    Gen {
        #[arg(long, value_name = "JSON")]
        spec: PathBuf,
        #[arg(long, default_value = "-")]
        output: String,
        /// Ground-truth CSV (pixel,Vb,Fb,Tmtt).
        #[arg(long)]
        truth: Option<String>,
        /// Overrides the seed in the description.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum MapAction {
    /// First-principal-component map.
    Fpc {
        #[command(flatten)]
        data: DataArgs,
        /// Sampling interval used when the pixel file has no `# t=` line.
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// Mask file with one 0/1 entry per pixel.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long, default_value = "-")]
        output: String,
    },
}

#[derive(Debug, Clone, Args)]
pub struct GammaArgs {
    #[arg(long, default_value_t = 3.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0.666666666666667)]
    pub b: f64,
    /// Number of samples.
    #[arg(long, default_value_t = 60)]
    pub n: usize,
    /// Sampling interval in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
}

/// AIF from a CSV file, or the gamma AIF from its parameters.
#[derive(Debug, Clone, Args)]
pub struct AifSource {
    #[arg(long)]
    pub aif: Option<PathBuf>,
    #[command(flatten)]
    pub gamma: GammaArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Pixel series file (P,N header then P rows). Its `# t=` line, when
    /// present, sets the grid; otherwise --n/--d do.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodFamily {
    Tsvd,
    Tikhonov,
    Exact,
    Axel,
    Patlak,
    Basis,
    Fpc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstraintArg {
    Identity,
    Difference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisKindArg {
    Direct,
    Convolved,
}

#[derive(Debug, Clone, Args)]
pub struct MethodOptions {
    /// TSVD cutoff as a fraction of the largest singular value.
    #[arg(long, default_value_t = 0.2)]
    pub cutoff: f64,
    /// Explicit TSVD rank; overrides --cutoff.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Tikhonov strength; defaults to the singular value at the TSVD cutoff.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = ConstraintArg::Identity)]
    pub constraint: ConstraintArg,
    #[arg(long, default_value_t = 8)]
    pub basis_size: usize,
    #[arg(long, value_enum, default_value_t = BasisKindArg::Direct)]
    pub basis_kind: BasisKindArg,
    /// Fraction of samples treated as the tail.
    #[arg(long, default_value_t = 0.25)]
    pub tail: f64,
}

#[derive(Debug, Clone, Args)]
pub struct WeightsArgs {
    #[arg(long, value_enum)]
    pub method: MethodFamily,
    #[command(flatten)]
    pub source: AifSource,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub options: MethodOptions,
    #[arg(long, default_value = "-")]
    pub output: String,
    /// Metrics JSON (sign changes, tail divergence, correlations).
    #[arg(long)]
    pub metrics: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurfaceKindArg {
    Cond,
    Cutoff,
}

#[derive(Debug, Clone, Args)]
pub struct SurfaceArgs {
    #[arg(value_enum)]
    pub kind: SurfaceKindArg,
    /// Comma list or start:stop:count.
    #[arg(long, default_value = "0:5:20")]
    pub a_values: String,
    /// Comma list or start:stop:count.
    #[arg(long, default_value = "0.05:1.6:20")]
    pub b_values: String,
    #[arg(long, default_value_t = 60)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2)]
    pub cutoff: f64,
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Clone, Args)]
pub struct PanoramaArgs {
    #[command(flatten)]
    pub source: AifSource,
    #[arg(long, value_delimiter = ',', default_value = "1,6,12")]
    pub ranks: Vec<usize>,
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    /// Weight method tag (e.g. fpc, tsvd-volume) or family name.
    #[arg(long)]
    pub method: String,
    /// Comma list of subsample:K[@FIRST], truncate:M, interp:I+J/L+R.
    #[arg(long, value_delimiter = ',', required = true)]
    pub strategies: Vec<String>,
    #[command(flatten)]
    pub source: AifSource,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub options: MethodOptions,
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecoverMethod {
    Tsvd,
    Tikhonov,
    Exact,
}

#[derive(Debug, Clone, Args)]
pub struct RecoverArgs {
    #[arg(long, value_enum, default_value_t = RecoverMethod::Tsvd)]
    pub method: RecoverMethod,
    #[command(flatten)]
    pub source: AifSource,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub options: MethodOptions,
    #[arg(long, default_value = "-")]
    pub output: String,
}
