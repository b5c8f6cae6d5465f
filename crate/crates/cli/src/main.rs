use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netshare::measurement::PointerModel;

mod commands;
mod manifest;

#[derive(Debug, Parser)]
#[command(
    name = "netshare",
    version,
    about = "Network nonlocality sharing in the extended bilocal scenario"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Directory for data files and summaries.
    #[arg(long, global = true, default_value = "out")]
    pub output_dir: PathBuf,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Format of tabular data files.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepModeArg {
    Passive,
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizeModeArg {
    Passive,
    Active,
    #[value(name = "mixed-2d")]
    Mixed2d,
}

fn pointer(s: &str) -> Result<PointerModel, String> {
    match s.parse::<PointerModel>()? {
        PointerModel::Explicit => Err("explicit pointers need F and are not available here".to_string()),
        model => Ok(model),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate all four values over a grid of equal precisions G1 = G2 = G.
    Sweep(SweepArgs),
    /// Compare closed forms against the full pipeline on random configurations.
    Verify(VerifyArgs),
    /// Optimize measurement angles or precisions.
    Optimize(OptimizeArgs),
    /// Critical visibility and the noisy double-violation region.
    Noise(NoiseArgs),
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct SweepArgs {
    /// Pointer of Alice's first observer (optimal or square).
    #[arg(long, value_parser = pointer, default_value = "optimal")]
    pub pointer1: PointerModel,
    /// Pointer of Charlie's first observer (optimal or square).
    #[arg(long, value_parser = pointer, default_value = "optimal")]
    pub pointer2: PointerModel,
    /// Precision grid `start:stop:step`.
    #[arg(long, default_value = "0:1:0.01")]
    pub g: String,
    #[arg(long, value_enum, default_value_t = SweepModeArg::Passive)]
    pub mode: SweepModeArg,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Largest accepted absolute deviation (strict).
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct OptimizeArgs {
    #[arg(long, value_enum, default_value_t = OptimizeModeArg::Passive)]
    pub mode: OptimizeModeArg,
    /// Precision of both first observers (passive and active modes).
    #[arg(long, default_value_t = 0.8)]
    pub g: f64,
    /// Pointer of Alice's first observer (default: square for mixed-2d, optimal otherwise).
    #[arg(long, value_parser = pointer)]
    pub pointer1: Option<PointerModel>,
    /// Pointer of Charlie's first observer (default: optimal).
    #[arg(long, value_parser = pointer)]
    pub pointer2: Option<PointerModel>,
    /// Grid points per precision axis for mixed-2d.
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct NoiseArgs {
    /// Pointer of both first observers (optimal or square).
    #[arg(long, value_parser = pointer, default_value = "optimal")]
    pub pointer: PointerModel,
    /// Override for Charlie's first observer.
    #[arg(long, value_parser = pointer)]
    pub pointer2: Option<PointerModel>,
    /// Visibility step of the boundary scan.
    #[arg(long, default_value_t = 0.01)]
    pub resolution: f64,
    /// Visibility of the Alice–Bob source for the reported window.
    #[arg(long, default_value_t = 1.0)]
    pub v1: f64,
    /// Visibility of the Bob–Charlie source for the reported window.
    #[arg(long, default_value_t = 1.0)]
    pub v2: f64,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Verification(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Verification(_) => 2,
        }
    }
}

impl From<netshare::Error> for Failure {
    fn from(e: netshare::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(format!("i/o error: {e}"))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(Failure::Invalid("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Invalid(e.to_string()))?;
    }
    std::fs::create_dir_all(&cli.global.output_dir)?;
    match &cli.command {
        Command::Sweep(args) => commands::sweep(&cli.global, args),
        Command::Verify(args) => commands::verify(&cli.global, args),
        Command::Optimize(args) => commands::optimize(&cli.global, args),
        Command::Noise(args) => commands::noise(&cli.global, args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Invalid(msg) => eprintln!("error: {msg}"),
                Failure::Verification(msg) => eprintln!("FAIL: {msg}"),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
