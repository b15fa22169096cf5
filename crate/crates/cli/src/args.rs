use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stacktab::{BaseModel, Stacking};

/// Exact tests for stacked square contingency tables under
/// quasi-independence and quasi-symmetry.
#[derive(Debug, Parser)]
#[command(name = "stacktab", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the Markov basis of a model.
    Basis(BasisArgs),
    /// Print the model matrix.
    Matrix(MatrixArgs),
    /// Fit a model to a table and report G².
    Fit(FitArgs),
    /// Monte Carlo exact test (goodness of fit or nested models).
    Test(TestArgs),
    /// Enumerate the fiber of a small table and compute the exact p-value.
    Enumerate(EnumerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Ind,
    Qi,
    Qs,
}

impl From<ModelArg> for BaseModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Ind => BaseModel::Independence,
            ModelArg::Qi => BaseModel::QuasiIndependence,
            ModelArg::Qs => BaseModel::QuasiSymmetry,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StackArg {
    Single,
    M0,
    M1,
    M2,
}

impl From<StackArg> for Stacking {
    fn from(s: StackArg) -> Self {
        match s {
            StackArg::Single => Stacking::Single,
            StackArg::M0 => Stacking::M0,
            StackArg::M1 => Stacking::M1,
            StackArg::M2 => Stacking::M2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisFormat {
    Text,
    Json,
    /// `count cells` header followed by one move per line.
    Matrix,
}

/// Model given by flags alone, for commands without an input table.
#[derive(Debug, Args)]
pub struct ModelFlags {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long = "stack", value_enum, default_value = "single")]
    pub stack: StackArg,
    /// Table size.
    #[arg(long = "I", visible_alias = "size", default_value_t = 3)]
    pub size: usize,
    /// Number of layers; defaults to 1 for a single table and 2 otherwise.
    #[arg(long = "H", visible_alias = "layers")]
    pub layers: Option<usize>,
}

impl ModelFlags {
    pub fn layers(&self) -> usize {
        self.layers
            .unwrap_or(if self.stack == StackArg::Single { 1 } else { 2 })
    }
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    /// Also list the moves in text output.
    #[arg(long)]
    pub list: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: BasisFormat,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

/// Input tables and output options shared by the data commands.
#[derive(Debug, Args)]
pub struct InputFlags {
    /// CSV files; layers of several files are stacked in order.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Omit the timestamp so identical runs give identical output.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputFlags,
    /// Stacking; `single` on a multi-layer table fits each layer.
    #[arg(long = "stack", value_enum, default_value = "single")]
    pub stack: StackArg,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputFlags,
    /// Null model stacking; defaults to `single` for one layer, `m0` otherwise.
    #[arg(long, value_enum)]
    pub null: Option<StackArg>,
    /// Alternative model stacking for a nested test.
    #[arg(long, value_enum, conflicts_with = "gof")]
    pub alt: Option<StackArg>,
    /// Test the null model against the saturated model.
    #[arg(long)]
    pub gof: bool,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long = "burnin", visible_alias = "burn-in", default_value_t = 50_000)]
    pub burn_in: u64,
    #[arg(long = "thin", default_value_t = 50)]
    pub thinning: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub input: InputFlags,
    /// Stacking; defaults to `single` for one layer, `m0` otherwise.
    #[arg(long = "stack", value_enum)]
    pub stack: Option<StackArg>,
    /// Search-node budget.
    #[arg(long, default_value_t = stacktab::fiber::DEFAULT_NODE_CAP)]
    pub cap: u64,
}
