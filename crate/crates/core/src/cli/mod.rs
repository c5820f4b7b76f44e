//! Command-line front end: one subcommand per pipeline stage, each writing headed CSV
//! (and SVG/text) files into an output directory.

mod analysis;
mod collect;
mod output;
mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::harness::{ContextMode, DEFAULT_ENDPOINT, DEFAULT_KEY_ENV};

pub use analysis::{cmd_bias, cmd_cfa, cmd_pca, cmd_reliability};
pub use collect::cmd_administer;
pub use output::{config_hash, fmt_num, parse_num, Header, InputMeta, TOOL};
pub use report::{cmd_report, write_cfa_summary, write_reliability_csv, NON_INTERPRETABLE_NOTE};

/// Exit code when some queries failed and the matrix is partial.
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "llm-psychometrics", version, about = "Psychometric checks for language-model questionnaire responses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Administer a questionnaire through a chat transport and record the answers
    Administer(AdministerArgs),
    /// Agree bias per respondent and a percentile test against a reference sample
    Bias(BiasArgs),
    /// PCA with varimax rotation and simple-structure diagnostics
    Pca(PcaArgs),
    /// Confirmatory factor analysis with fit indices
    Cfa(CfaArgs),
    /// Cronbach's alpha and omega_h, gated on model fit
    Reliability(ReliabilityArgs),
    /// Merge stage outputs into one summary table
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    NoContext,
    InContext,
}

impl From<RegimeArg> for ContextMode {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::NoContext => ContextMode::NoContext,
            RegimeArg::InContext => ContextMode::InContext,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    OpenaiCompatible,
    AgreeBot,
    RandomBot,
    Simulator,
}

impl TransportArg {
    pub fn name(self) -> &'static str {
        match self {
            TransportArg::OpenaiCompatible => "openai-compatible",
            TransportArg::AgreeBot => "agree-bot",
            TransportArg::RandomBot => "random-bot",
            TransportArg::Simulator => "simulator",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AdministerArgs {
    /// Builtin questionnaire (bfi2, ipip-bffm) or a TOML definition
    #[arg(long, default_value = "bfi2")]
    pub questionnaire: String,
    #[arg(long, value_enum, default_value = "no-context")]
    pub regime: RegimeArg,
    /// Persona JSONL file, `builtin` for the shipped set, or `none` for an empty persona
    #[arg(long, default_value = "builtin")]
    pub personas: String,
    /// Record this code as the answer to the first item instead of asking it
    #[arg(long)]
    pub seed_answer: Option<u8>,
    #[arg(long, value_enum)]
    pub transport: TransportArg,
    /// Completed questionnaires to collect
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 1)]
    pub max_tokens: u32,
    /// Respondents administered concurrently (default: available cores)
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Row label carried into every downstream output (default: transport or remote model name)
    #[arg(long)]
    pub label: Option<String>,
    /// Attempts per query before the answer is recorded as missing
    #[arg(long, default_value_t = 3)]
    pub max_attempts: u32,
    /// Chat-completion endpoint for the remote transport
    #[arg(long, default_value = DEFAULT_ENDPOINT)]
    pub endpoint: String,
    /// Remote model name
    #[arg(long, default_value = "gpt-4-0613")]
    pub remote_model: String,
    /// Environment variable holding the API token
    #[arg(long, default_value = DEFAULT_KEY_ENV)]
    pub api_key_env: String,
    /// Concurrent remote requests
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    /// Request answer-token probabilities from the remote model
    #[arg(long)]
    pub logprobs: bool,
    /// Simulator: loading of each item on its facet (or on the general factor)
    #[arg(long, default_value_t = 0.7)]
    pub sim_loading: f64,
    /// Simulator: sub-facet loading; switches to a hierarchical generating model
    #[arg(long)]
    pub sim_sub_loading: Option<f64>,
    /// Simulator: noise standard deviation
    #[arg(long, default_value_t = 0.5)]
    pub sim_noise: f64,
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    /// Response matrix CSV, e.g. `responses.csv` from `administer`
    #[arg(long)]
    pub responses: PathBuf,
    #[arg(long, default_value = "bfi2")]
    pub questionnaire: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Row label (default: the label recorded in the response file)
    #[arg(long)]
    pub label: Option<String>,
    /// Regime of the responses (default: the regime recorded in the response file)
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    /// Seed recorded in output headers (default: the seed recorded in the response file)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available cores)
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct BiasArgs {
    #[command(flatten)]
    pub input: AnalysisArgs,
    /// Human response CSV whose per-respondent biases form the reference distribution
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Keep only reference respondents who answered every item
    #[arg(long)]
    pub reference_complete_only: bool,
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
}

#[derive(Debug, Clone, Args)]
pub struct PcaArgs {
    #[command(flatten)]
    pub input: AnalysisArgs,
    /// Components to retain (default: number of facets)
    #[arg(long)]
    pub ncomp: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CfaArgs {
    #[command(flatten)]
    pub input: AnalysisArgs,
    /// `all`, builtin model names, or model syntax files (comma separated or repeated)
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub model: Vec<String>,
    /// Fit the correlation matrix instead of the covariance matrix
    #[arg(long)]
    pub correlation: bool,
    /// Add a small ridge to a non-positive-definite sample covariance instead of reporting NA
    #[arg(long)]
    pub ridge: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReliabilityArgs {
    #[command(flatten)]
    pub input: AnalysisArgs,
    /// Model whose general factor defines omega_h
    #[arg(long, default_value = "single_component")]
    pub omega_model: String,
    #[arg(long)]
    pub correlation: bool,
    #[arg(long)]
    pub ridge: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory searched recursively for stage outputs
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Files written by a command and how the process should exit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageOutput {
    pub files: Vec<PathBuf>,
    pub messages: Vec<String>,
    pub exit_code: i32,
}

pub fn run(cli: &Cli) -> Result<StageOutput> {
    match &cli.command {
        Command::Administer(a) => cmd_administer(a),
        Command::Bias(a) => cmd_bias(a),
        Command::Pca(a) => cmd_pca(a),
        Command::Cfa(a) => cmd_cfa(a),
        Command::Reliability(a) => cmd_reliability(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Process exit code for an error: 2 for usage errors, 1 otherwise.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => 2,
        _ => 1,
    }
}

pub(crate) fn jobs_or_default(jobs: Option<usize>) -> usize {
    jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)).max(1)
}
