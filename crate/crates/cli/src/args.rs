use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "evmanifold",
    version,
    about = "Regression manifolds for non-stationary bivariate extremes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a non-stationary bivariate scenario as two margin CSVs.
    Simulate(SimulateArgs),
    /// Decompose one series into trend and seasonal parts and stationarize it.
    Stationarize(StationarizeArgs),
    /// Fit the dependence models and write a run summary.
    Fit(FitArgs),
    /// Evaluate a regression manifold on a (q, x) grid.
    Manifold(ManifoldArgs),
    /// Rank the fitted models of several run summaries by AIC and BIC.
    Compare(CompareArgs),
    /// Run the whole pipeline and write every artifact.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Logistic,
    Hr,
    Ct,
    Semiparam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CadenceArg {
    Weekly,
    Yearly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BlockArg {
    Month,
    Year,
}

/// Dependence parameters; which ones are required depends on the model.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Linear trend added over the whole series (data scale).
    #[arg(long, default_value_t = 1.0)]
    pub trend_amp: f64,
    /// Amplitude of the annual sinusoid.
    #[arg(long, default_value_t = 0.5)]
    pub season_amp: f64,
    #[arg(long, value_enum, default_value = "weekly")]
    pub cadence: CadenceArg,
    /// Reduce both margins to calendar-block maxima before writing.
    #[arg(long, value_enum)]
    pub block: Option<BlockArg>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Decomposition settings shared by every command that stationarizes.
#[derive(Debug, Clone, Default, Args)]
pub struct TsArgs {
    /// Long running-window length in years.
    #[arg(long)]
    pub window_years: Option<f64>,
    /// Short window for the seasonal standard deviation, in days.
    #[arg(long)]
    pub short_window_days: Option<f64>,
    /// The running std is smoothed over window / divisor.
    #[arg(long)]
    pub smoothing_divisor: Option<u32>,
    #[arg(long)]
    pub extra_smoothing: bool,
    /// Skip the seasonal components (yearly-data path).
    #[arg(long)]
    pub no_seasonality: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StationarizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub ts: TsArgs,
    /// JSON file with default settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Inputs and settings shared by `fit` and `analyze`.
#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Covariate margin CSV (`date,value`).
    #[arg(long)]
    pub x: PathBuf,
    /// Response margin CSV (`date,value`).
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Radial threshold level for the pseudo-angles.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Take calendar-block maxima of the stationarized series.
    #[arg(long, value_enum)]
    pub block: Option<BlockArg>,
    /// Parameter count charged to the semiparametric model in AIC/BIC.
    #[arg(long)]
    pub k: Option<usize>,
    /// Gauss-Hermite nodes for spectral moments.
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    /// Name used for this run's models in `compare`.
    #[arg(long)]
    pub label: Option<String>,
    #[command(flatten)]
    pub ts: TsArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Metropolis iterations for the credible band.
    #[arg(long)]
    pub mcmc_iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Comma-separated quantile levels for the manifold.
    #[arg(long)]
    pub q_grid: Option<String>,
    /// Comma-separated Fréchet-scale covariate values for the manifold.
    #[arg(long)]
    pub x_grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ManifoldArgs {
    #[arg(long, value_enum, required_unless_present = "summary", conflicts_with = "summary")]
    pub model: Option<ModelArg>,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Run summary whose fitted σ is used instead of --model.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Comma-separated quantile levels.
    #[arg(long)]
    pub q_grid: Option<String>,
    /// Comma-separated covariate values; overrides --x-min/--x-max/--x-count.
    #[arg(long)]
    pub x_grid: Option<String>,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub x_count: Option<usize>,
    /// Also emit the large-x approximation (logistic model only).
    #[arg(long)]
    pub approx: bool,
    #[arg(long, conflicts_with = "summary")]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "manifold.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Run summaries written by `fit` or `analyze`.
    #[arg(required = true)]
    pub summaries: Vec<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}
