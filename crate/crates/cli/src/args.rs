use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "mixcoef", version, about = "Estimate mixing coefficients and run dependence tests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a simulated sample path, one value per line
    Simulate(SimulateArgs),
    /// Estimate mixing coefficients or their l1 norm
    #[command(subcommand)]
    Estimate(EstimateCommand),
    /// Run a hypothesis test
    #[command(subcommand)]
    Test(TestCommand),
    /// Exact quantities for a finite Markov chain
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Iid,
    Chain,
    Ma,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub process: Process,
    #[arg(long)]
    pub length: usize,
    #[arg(long)]
    pub seed: u64,
    /// Chain file (`states=` line plus transition rows)
    #[arg(long, required_if_eq("process", "chain"))]
    pub file: Option<PathBuf>,
    /// Moving-average order
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "generate"])))]
pub struct InputArgs {
    /// Sample file, one value per line
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Generate the sample instead: `iid`, `ma:<q>`, `chain:<file>` or
    /// `two-state:<p>,<q>`
    #[arg(long)]
    pub generate: Option<String>,
    /// Length of a generated sample
    #[arg(long, requires = "generate")]
    pub length: Option<usize>,
    /// Seed for the generator and the heuristic solver
    #[arg(long)]
    pub seed: Option<u64>,
    /// Map input values affinely onto [0, 1] instead of rejecting them
    #[arg(long)]
    pub rescale: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Default,
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverArg {
    Exact,
    Heuristic,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScheduleArgs {
    /// Schedule config (TOML); overrides the preset
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Default)]
    pub preset: Preset,
    /// Pin the block length n_t
    #[arg(long)]
    pub n: Option<u32>,
    /// Pin the grid level ell_t
    #[arg(long)]
    pub ell: Option<u32>,
    /// Pin the number of gaps M_t
    #[arg(long = "M")]
    pub max_gap: Option<u32>,
    /// Blocks per estimate; omit to use the consistency budgets
    #[arg(long)]
    pub t_budget: Option<u64>,
    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    pub solver: SolverArg,
    /// Time index t at which schedule values are taken
    #[arg(long, default_value_t = 1)]
    pub time: u64,
}

#[derive(Debug, Args)]
pub struct Common {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EstimateCommand {
    /// Alpha estimates for gap m, or for gaps 1..M with their sum
    Alpha(FixedArgs),
    /// Beta estimates for gap m, or for gaps 1..M with their sum
    Beta(FixedArgs),
    /// Weak sequential estimate of the l1 norm
    L1Weak(SequentialArgs),
    /// Strong sequential estimate of the l1 norm
    L1Strong(SequentialArgs),
}

#[derive(Debug, Args)]
pub struct FixedArgs {
    #[command(flatten)]
    pub common: Common,
    /// Single gap; omit to estimate every gap up to M_t
    #[arg(long)]
    pub m: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SequentialArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub horizon: u64,
    #[arg(long, value_enum, default_value_t = KindArg::Alpha)]
    pub kind: KindArg,
}

#[derive(Debug, Subcommand)]
pub enum TestCommand {
    /// Are the coefficients bounded by a rate function?
    Rate(RateArgs),
    /// Is the l1 norm at most gamma?
    Threshold(ThresholdArgs),
    /// Is the sample consistent with independence?
    Independence(IndependenceArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("rate").required(true).args(["gamma", "gamma_file"])))]
pub struct RateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Constant rate function
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Rate function file: `m gamma` lines and an optional `tail=` rule
    #[arg(long)]
    pub gamma_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KindArg::Alpha)]
    pub kind: KindArg,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = KindArg::Alpha)]
    pub kind: KindArg,
}

#[derive(Debug, Args)]
pub struct IndependenceArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Exact finite-level alpha and beta for gap m
    Coeffs(OracleArgs),
    /// Exact dependence matrix for split j
    Matrix(MatrixArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group(ArgGroup::new("chain").required(true).args(["chain_file", "two_state"])))]
pub struct OracleArgs {
    #[arg(long)]
    pub chain_file: Option<PathBuf>,
    /// Two-state chain `p,q` on midpoints of the extreme atoms
    #[arg(long)]
    pub two_state: Option<String>,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub ell: u32,
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[arg(long)]
    pub j: u32,
}
