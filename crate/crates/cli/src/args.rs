use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epsopt_core::bounds::BoundChoice;
use epsopt_core::exact::ZTestVariant;

#[derive(Debug, Parser)]
#[command(name = "epsopt", version, about = "Trial sample sizes for epsilon-optimal treatment choice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regret bounds of the empirical-success rule for a trial design.
    Bound(BoundArgs),
    /// Smallest balanced design whose regret bound meets epsilon.
    Size(SizeArgs),
    /// Exact maximum regret and sample sizes for binary two-arm trials.
    Exact(ExactArgs),
    /// Reproduce a reference table as CSV.
    Tables(TablesArgs),
    /// Split a budget across covariate groups.
    Allocate(AllocateArgs),
    /// Monte Carlo regret of the empirical-success rule.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct RangeArg {
    /// Outcome range [default: 0 1]
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub range: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct DesignSource {
    /// Design document (TOML).
    pub document: Option<PathBuf>,
    /// Number of treatments of a balanced covariate-free design.
    #[arg(long, requires = "n", conflicts_with = "document")]
    pub treatments: Option<usize>,
    /// Subjects per arm of a balanced covariate-free design.
    #[arg(long, requires = "treatments")]
    pub n: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub source: DesignSource,
    #[command(flatten)]
    pub range: RangeArg,
    /// Share of the target population outside the sampled subpopulation.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Regret target to check the bounds against.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundFlag {
    Prop1,
    Prop2,
    Prop2Balanced,
    Best,
}

impl From<BoundFlag> for BoundChoice {
    fn from(b: BoundFlag) -> Self {
        match b {
            BoundFlag::Prop1 => BoundChoice::Prop1,
            BoundFlag::Prop2 => BoundChoice::Prop2,
            BoundFlag::Prop2Balanced => BoundChoice::Prop2Balanced,
            BoundFlag::Best => BoundChoice::BestOfBoth,
        }
    }
}

#[derive(Debug, Args)]
pub struct SizeArgs {
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub treatments: usize,
    #[command(flatten)]
    pub range: RangeArg,
    #[arg(long, value_enum, default_value = "best")]
    pub bound: BoundFlag,
    #[arg(long)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleFlag {
    Es,
    Ztest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum VariantFlag {
    #[default]
    Pooled,
    Unpooled,
}

impl From<VariantFlag> for ZTestVariant {
    fn from(v: VariantFlag) -> Self {
        match v {
            VariantFlag::Pooled => ZTestVariant::Pooled,
            VariantFlag::Unpooled => ZTestVariant::Unpooled,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long, value_enum, default_value = "es")]
    pub rule: RuleFlag,
    /// Subjects per arm; reports the maximum regret.
    #[arg(long, conflicts_with_all = ["epsilon", "delta"])]
    pub n: Option<u64>,
    /// Regret target; reports the smallest sufficient n.
    #[arg(long, conflicts_with = "delta")]
    pub epsilon: Option<f64>,
    /// Effect size for conventional power sizing of the z-test.
    #[arg(long)]
    pub delta: Option<f64>,
    /// z-test size.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Type II error for power sizing.
    #[arg(long, default_value_t = 0.2)]
    pub beta: f64,
    #[arg(long, value_enum, default_value = "pooled")]
    pub ztest_variant: VariantFlag,
    /// Largest n tried when searching for a sample size.
    #[arg(long, default_value_t = 20_000)]
    pub n_max: u64,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    /// Table number: 1, 2 or 3.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
    pub which: u8,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pooled")]
    pub ztest_variant: VariantFlag,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    /// Covariate group probabilities, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub probs: Vec<f64>,
    /// Total number of subjects.
    #[arg(long)]
    pub budget: u64,
    #[arg(long, default_value_t = 2)]
    pub treatments: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistFlag {
    /// Outcomes in {0, 1}.
    Bernoulli,
    /// Every outcome equals the mean.
    Point,
    /// Outcomes at the ends of the range.
    TwoPoint,
    /// Beta law rescaled to the range, with shape parameters summing to 2.
    Beta,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: DesignSource,
    #[command(flatten)]
    pub range: RangeArg,
    /// Stratum means: treatments separated by ',', groups by ';'.
    #[arg(long)]
    pub means: String,
    #[arg(long, value_enum, default_value = "bernoulli")]
    pub dist: DistFlag,
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
