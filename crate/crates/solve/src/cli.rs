//! Command-line surface.
//!
//! Exit codes: 0 on success, 1 for usage, configuration and runtime errors,
//! 2 when an exhaustive operation exceeds its size guard, 3 when a bound
//! check fails.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands;
use crate::error::SolveError;

#[derive(Debug, Parser)]
#[command(name = "residual-solve", version, about = "Train, evaluate and verify residual-trained value functions")]
pub struct Cli {
    /// Worker threads for per-instance commands; 0 uses every core.
    #[arg(long, global = true, env = "RESIDUAL_SOLVE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random instances.
    Gen(GenArgs),
    /// Train a value network; writes a checkpoint and a metrics CSV.
    Train(TrainArgs),
    /// Decode one assignment per instance.
    Solve(SolveArgs),
    /// Optimality gap of greedy decoding against the random policy.
    Eval(EvalArgs),
    /// Exact optimal values by exhaustive dynamic programming.
    Oracle(OracleArgs),
    /// Check that the root error never exceeds the total residual.
    VerifyBound(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InstanceFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Problem family, e.g. knapsack_guarded or mwis.
    #[arg(long)]
    pub family: String,
    /// Number of variables.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generator setting as `key=value` with a TOML value, e.g. `edge_prob=0.2` or `profit=[0,10]`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long, value_enum, default_value_t = InstanceFormat::Jsonl)]
    pub format: InstanceFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// TOML or JSON training config; omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Metrics CSV; defaults to the checkpoint path with extension `metrics.csv`.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop once this step is reached; the checkpoint can be resumed.
    #[arg(long)]
    pub stop_after: Option<u64>,
    /// Overrides `steps` from the config.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ValuesArg {
    /// `zero`, `oracle`, or the path of a checkpoint.
    #[arg(long, default_value = "oracle")]
    pub values: String,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// JSON-lines instance file.
    #[arg(long)]
    pub instances: PathBuf,
    #[command(flatten)]
    pub values: ValuesArg,
    /// Include the per-variable decision trace.
    #[arg(long)]
    pub trace: bool,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub instances: PathBuf,
    #[command(flatten)]
    pub values: ValuesArg,
    /// Seed of the random-policy baseline.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub instances: PathBuf,
    /// Emit every feasible key's value and optimal bit.
    #[arg(long)]
    pub table: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub instances: PathBuf,
    #[command(flatten)]
    pub values: ValuesArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let recorded: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, recorded) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, args: Vec<String>) -> Result<(), SolveError> {
    if let Some(threads) = cli.threads {
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let ctx = commands::RunContext::start(args);
    match &cli.command {
        Command::Gen(a) => commands::gen(a, &ctx),
        Command::Train(a) => commands::train(a, &ctx),
        Command::Solve(a) => commands::solve(a, &ctx),
        Command::Eval(a) => commands::eval(a, &ctx),
        Command::Oracle(a) => commands::oracle(a, &ctx),
        Command::VerifyBound(a) => commands::verify_bound(a, &ctx),
    }
}
