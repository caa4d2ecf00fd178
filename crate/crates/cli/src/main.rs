//! `avqual`: synthetic data, feature ranking, feature-count sweeps, single
//! model training/scoring and significance reports.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "avqual", version, about = "Audiovisual quality modeling pipeline")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic bitstream dataset over the condition grid
    Synth(SynthArgs),
    /// Rank features by leave-one-out Random Forest importance
    Rank(RankArgs),
    /// Cross-validate one algorithm on the top-1..top-k features
    Sweep(SweepArgs),
    /// Fit a single model and save it as JSON
    Train(TrainArgs),
    /// Score a CSV with a saved model
    Predict(PredictArgs),
    /// Fisher-z significance tables from sweep CSVs
    Compare(CompareArgs),
    /// Re-emit comparison and summary from a sweep directory
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Grid {
    Full,
    Tiny,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Rf,
    Bg,
    Mlp,
    Gp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Pooling {
    Pooled,
    Perfold,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BaselineArg {
    PerAlgorithm,
    Global,
}

#[derive(Args, Debug, Clone)]
pub struct SeedArgs {
    /// Master seed; the QOE_SEED environment variable takes precedence
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Dataset CSV; without it the synthetic grid is generated from the seed
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Synthetic grid used when no --input is given
    #[arg(long, value_enum, default_value_t = Grid::Full)]
    pub grid: Grid,
}

#[derive(Args, Debug, Clone)]
pub struct ForestArgs {
    /// Trees per ensemble
    #[arg(long, default_value_t = 166)]
    pub trees: usize,
    /// Feature fraction (default 0.4 for rf, 1.0 for bg)
    #[arg(long)]
    pub max_features: Option<f64>,
    /// Row fraction per tree (default 0.8 for rf, 0.4 for bg)
    #[arg(long)]
    pub max_sample: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[command(flatten)]
    pub forest: ForestArgs,
    /// MLP training epochs
    #[arg(long, default_value_t = 440)]
    pub epochs: usize,
    #[arg(long, default_value_t = 4)]
    pub batch_size: usize,
    /// MLP hidden units (default: one per input feature)
    #[arg(long)]
    pub hidden: Option<usize>,
    /// GP population size
    #[arg(long, default_value_t = 5000)]
    pub population: usize,
    #[arg(long, default_value_t = 200)]
    pub generations: usize,
    #[arg(long, default_value_t = 20)]
    pub tournament: usize,
    #[arg(long, default_value_t = 0.001)]
    pub parsimony: f64,
    #[arg(long, default_value_t = 0.0)]
    pub stopping_fitness: f64,
    /// GP row subsample per generation
    #[arg(long, default_value_t = 0.8)]
    pub gp_max_samples: f64,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Grid::Full)]
    pub grid: Grid,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Output CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Output ranking CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Largest feature count (default: all features)
    #[arg(long)]
    pub kmax: Option<usize>,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Feature ranking CSV; computed by leave-one-out ranking when absent
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Folds (default 10 for rf/bg, 4 for mlp/gp)
    #[arg(long)]
    pub folds: Option<usize>,
    /// MOS stratification bins
    #[arg(long, default_value_t = 5)]
    pub bins: usize,
    #[arg(long, value_enum, default_value_t = Pooling::Pooled)]
    pub metric_pooling: Pooling,
    /// Use N - d in the RMSE denominators
    #[arg(long, default_value_t = 0)]
    pub dof_correction: usize,
    /// RMSE* margin when the data has no CI column
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum, default_value_t = BaselineArg::PerAlgorithm)]
    pub baseline: BaselineArg,
    /// Sample size assumed by the significance tests
    #[arg(long, default_value_t = 160)]
    pub significance_n: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub algo: Algo,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Restrict to the top-k features of this ranking
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    #[arg(long, requires = "ranking")]
    pub k: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output model JSON
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with (at least) the model's feature columns
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Sweep CSVs named sweep_<algo>.csv
    #[arg(long = "sweep", required = true)]
    pub sweeps: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = BaselineArg::PerAlgorithm)]
    pub baseline: BaselineArg,
    #[arg(long, default_value_t = 160)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory written by `sweep`
    #[arg(long)]
    pub dir: PathBuf,
    /// Check the recorded input hash instead of rewriting anything
    #[arg(long)]
    pub verify: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
