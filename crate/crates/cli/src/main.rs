//! `xenodiv` command-line front end.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "xenodiv", version, about = "Structure-aware diversity analysis of finite string generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cores, rankings, deviance statistics and a per-trajectory table.
    Analyze(AnalyzeArgs),
    /// Per-step core and orientation states along one trajectory.
    Dynamics(DynamicsArgs),
    /// Score candidate interventions and attach Boltzmann weights.
    Score(ScoreArgs),
    /// Draw trajectories from the reward-tilted distribution.
    Sample(SampleArgs),
    /// Diversity/fairness non-dominance reproduction for a baseline core.
    Pareto(ParetoArgs),
    /// Run the built-in identity checks.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every command. Serialized into each report.
#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Model document (JSON prefix tree).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Structure system document (JSON list).
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Space-separated prompt tokens; empty means the root.
    #[arg(long, default_value = "")]
    pub prompt: String,
    /// Score configuration (JSON); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file, written atomically; stdout when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Disable data-parallel evaluation. Output is identical either way.
    #[arg(long)]
    #[serde(skip)]
    pub sequential: bool,
}

impl Common {
    pub fn exec(&self) -> xenodiv::Exec {
        if self.sequential {
            xenodiv::Exec::Sequential
        } else {
            xenodiv::Exec::Parallel
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Second model; adds a before/after homogenization comparison.
    #[arg(long)]
    pub after: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct DynamicsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Terminal string, e.g. "b <eos>". The prompt is the starting prefix.
    #[arg(long)]
    pub trajectory: String,
}

#[derive(Args, Debug, Serialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Candidate interventions (JSON list).
    #[arg(long)]
    pub candidates: PathBuf,
    /// Target/avoid/conserve structure systems (JSON).
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Draw one candidate from the Boltzmann weights; needs --seed.
    #[arg(long)]
    pub draw: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Explicit reward table (JSON object from terminal string to reward)
    /// replacing the stay reward.
    #[arg(long)]
    pub rewards: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Tilt strength; overrides beta_r from the configuration.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Use self-normalized importance sampling with this many proposals
    /// instead of exact enumeration.
    #[arg(long, value_name = "PROPOSALS")]
    pub importance_sampling: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct ParetoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Number of structures.
    pub n: usize,
    /// Comma-separated baseline core, e.g. "0.6,0.1".
    pub baseline: String,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Dynamics(a) => commands::dynamics(a),
        Command::Score(a) => commands::score(a),
        Command::Sample(a) => commands::sample(a),
        Command::Pareto(a) => commands::pareto(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xenodiv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
