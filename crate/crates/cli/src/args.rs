use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ppos_core::check::StatisticKind;
use ppos_core::{PposMethod, PredictiveMode, RuleKind};

#[derive(Parser, Debug)]
#[command(
    name = "ppos",
    version,
    about = "Interim analysis of sequential experiments with predictive probability of success"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate stopping rules on the day-prefix of each experiment
    Analyze(AnalyzeArgs),
    /// Simulate a corpus and tabulate each rule's operating characteristics
    Simulate(SimulateArgs),
    /// Predictive check of the model against observed streams
    Check(CheckArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Generative,
    Paper,
}

impl From<ModeArg> for PredictiveMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Generative => PredictiveMode::GenerativeAggregate,
            ModeArg::Paper => PredictiveMode::PaperFormula,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    MonteCarlo,
    ClosedForm,
}

impl From<MethodArg> for PposMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::MonteCarlo => PposMethod::MonteCarlo,
            MethodArg::ClosedForm => PposMethod::ClosedForm,
        }
    }
}

fn parse_rule(s: &str) -> Result<RuleKind, String> {
    s.parse().map_err(|e: ppos_core::Error| e.to_string())
}

fn parse_statistic(s: &str) -> Result<StatisticKind, String> {
    s.parse().map_err(|e: ppos_core::Error| e.to_string())
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// One-sided significance level of the final analysis
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Planned number of periods (default 14; simulate defaults to the corpus horizon)
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Mean of a normal prior on the effect (flat prior if omitted)
    #[arg(long, requires = "prior_var", allow_negative_numbers = true)]
    pub prior_mean: Option<f64>,
    /// Variance of a normal prior on the effect
    #[arg(long, requires = "prior_mean")]
    pub prior_var: Option<f64>,
    /// Predictive distribution of the final mean
    #[arg(long, value_enum, default_value_t = ModeArg::Generative)]
    pub predictive_mode: ModeArg,
}

#[derive(Args, Debug, Clone)]
pub struct RuleArgs {
    /// Rule to evaluate: heuristic, always-valid or ppos (repeatable; default all)
    #[arg(long = "rule", value_parser = parse_rule)]
    pub rules: Vec<RuleKind>,
    /// Heuristic: fail when the lower interval endpoint is below this
    #[arg(long = "l", default_value_t = 0.0, allow_negative_numbers = true)]
    pub lower_fail: f64,
    /// Heuristic: succeed when the lower interval endpoint is above this
    #[arg(long = "m", default_value_t = 0.0, allow_negative_numbers = true)]
    pub lower_success: f64,
    /// Heuristic: credible interval level
    #[arg(long, default_value_t = 0.9)]
    pub interval_level: f64,
    /// Always-valid: stop for success when the p-value is below this
    #[arg(long, default_value_t = 0.05)]
    pub p_success: f64,
    /// Always-valid: stop for failure when the p-value is above this
    #[arg(long, default_value_t = 0.95)]
    pub p_fail: f64,
    /// Always-valid: mixing variance (defaults to sigma squared)
    #[arg(long)]
    pub mixture_variance: Option<f64>,
    /// PPoS: stop for success above this
    #[arg(long, default_value_t = 0.9)]
    pub gamma_success: f64,
    /// PPoS: stop for failure below this
    #[arg(long, default_value_t = 0.1)]
    pub gamma_failure: f64,
    /// PPoS: Monte-Carlo draws per estimate
    #[arg(long, default_value_t = 10_000)]
    pub mc_draws: u64,
    /// PPoS estimator
    #[arg(long, value_enum, default_value_t = MethodArg::MonteCarlo)]
    pub ppos_method: MethodArg,
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    /// Stream file (CSV with header experiment_id,day,estimate,sigma, or JSON)
    #[arg(long)]
    pub input: PathBuf,
    /// Interim day
    #[arg(long, default_value_t = 7)]
    pub day: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report to this directory
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Run log (JSON lines); defaults to runs.jsonl in the output directory
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub rules: RuleArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    /// Corpus configuration (JSON); the default corpus is used if omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the number of experiments
    #[arg(long)]
    pub n_experiments: Option<usize>,
    /// Override the interim day
    #[arg(long)]
    pub day: Option<usize>,
    /// Override the corpus seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Histogram bins in the plot data
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub rules: RuleArgs,
}

#[derive(Args, Debug, Clone)]
pub struct CheckArgs {
    /// Full-horizon stream file
    #[arg(long)]
    pub input: PathBuf,
    /// Decisions already taken (analyze report, CSV or JSON); recomputed if omitted
    #[arg(long)]
    pub decisions: Option<PathBuf>,
    /// Check statistic: agreement, stop-success-rate or mean-statistic
    #[arg(long, value_parser = parse_statistic, default_value = "agreement")]
    pub statistic: StatisticKind,
    /// Number of replicated corpora
    #[arg(long, default_value_t = 500)]
    pub replicates: usize,
    /// Interim day the decisions are taken at
    #[arg(long, default_value_t = 7)]
    pub day: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub rules: RuleArgs,
}
