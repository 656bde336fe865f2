use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dualcl::datasets::GeneratorKind;
use dualcl::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "dualcl", version, about = "Gradient-based competitive learning experiments")]
pub struct Cli {
    /// Plain-text `key = value` file; flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for repetitions and sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset as CSV plus a JSON sidecar.
    Generate(GenerateArgs),
    /// Train one model over one or more seeds and write a run bundle.
    Train(TrainArgs),
    /// Train several models on the same data and plot their metrics.
    Compare(CompareArgs),
    /// Clustering accuracy against dimensionality on hypercube data.
    Highdim(HighdimArgs),
    /// Compare a recorded trajectory against the gradient-flow predictions.
    Analyze(AnalyzeArgs),
    /// Rank hyperparameter combinations by final quantization error.
    GridSearch(GridArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Spiral,
    Moons,
    Circles,
    Madelon,
}

impl From<KindArg> for GeneratorKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Spiral => GeneratorKind::Spiral,
            KindArg::Moons => GeneratorKind::Moons,
            KindArg::Circles => GeneratorKind::Circles,
            KindArg::Madelon => GeneratorKind::Madelon,
        }
    }
}

impl FromStr for KindArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Vcl,
    Dcl,
    #[value(name = "deep-dcl", alias = "deep_dcl", alias = "deep")]
    DeepDcl,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Vcl => ModelKind::Vcl,
            ModelArg::Dcl => ModelKind::Dcl,
            ModelArg::DeepDcl => ModelKind::DeepDcl,
        }
    }
}

impl FromStr for ModelArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// Synthetic dataset to generate.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Number of samples.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of features (hypercube data only).
    #[arg(long)]
    pub features: Option<usize>,
    /// Number of clusters (hypercube data only).
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Base seed for data generation and initialization.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Read samples from a CSV file instead of generating them.
    #[arg(long, value_name = "CSV", conflicts_with = "kind")]
    pub data: Option<PathBuf>,
    /// Skip standardization of the features.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Number of prototypes.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Weight of the edge-norm term.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Repetitions with consecutive seeds.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Record metrics every this many epochs.
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Keep the initial Voronoi partition fixed during training.
    #[arg(long)]
    pub freeze_assignment: bool,
    /// Add a per-output bias to the dual layer.
    #[arg(long)]
    pub dcl_bias: bool,
    /// Encoder widths of the deep model, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub encoder: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelRates {
    /// Learning rate of the vanilla layer.
    #[arg(long)]
    pub lr_vcl: Option<f64>,
    /// Learning rate of the dual layer.
    #[arg(long)]
    pub lr_dcl: Option<f64>,
    /// Learning rate of the deep dual model.
    #[arg(long)]
    pub lr_deep: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output CSV path; the sidecar is written next to it with a .json extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Bundle directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub rates: ModelRates,
    /// Models to compare, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub models: Option<Vec<ModelArg>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HighdimArgs {
    /// Feature counts to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<usize>>,
    /// Samples per dataset.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub rates: ModelRates,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub models: Option<Vec<ModelArg>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Run bundle directory written by `train` or `compare`.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Seed whose trajectory is analyzed; defaults to the first one.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to `<bundle>/analysis`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Learning rates to try, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lrs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    #[arg(long)]
    pub out: PathBuf,
}
