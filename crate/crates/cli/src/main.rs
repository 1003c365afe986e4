//! `psqi`: perturbation-based signal quality indices from the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use psqi_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "psqi",
    version,
    about = "Perturbation-based signal quality indices"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Master seed; every random draw derives from it
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Minimum global SNR of perturbations, in dB
    #[arg(
        long,
        global = true,
        default_value_t = 25.0,
        allow_negative_numbers = true
    )]
    pub gamma_db: f64,
    /// Minimum per-sample SNR of perturbations, in dB
    #[arg(
        long,
        global = true,
        default_value_t = 10.0,
        allow_negative_numbers = true
    )]
    pub beta_db: f64,
    /// CMA-ES population size
    #[arg(long, global = true, default_value_t = 5)]
    pub population: usize,
    /// CMA-ES generations
    #[arg(long, global = true, default_value_t = 2)]
    pub iterations: usize,
    /// Window length in seconds
    #[arg(long, global = true, default_value_t = 10.0)]
    pub window_s: f64,
    #[arg(long, global = true, value_enum, default_value_t = Task::Rpeaks)]
    pub task: Task,
    /// Classifier command line for `--task external`
    #[arg(long, global = true)]
    pub external_cmd: Option<String>,
    /// Worker threads (default: available processors)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file (directory for `synth`); standard output if omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// R-peak detection scored by tolerance-F1
    Rpeaks,
    /// External binary classifier scored by accuracy
    External,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic annotated ECG-like corpus
    Synth(commands::SynthArgs),
    /// pSQI of every window in a dataset
    Score { dataset: PathBuf },
    /// Monotonicity bins, Spearman correlations and margins from a score table
    Evaluate(commands::EvaluateArgs),
    /// Optimal margin over a grid of global and local SNR settings
    Sweep(commands::SweepArgs),
    /// Export the feature table of every window
    Features { dataset: PathBuf },
    /// Write the worst-case perturbed version of one window
    Perturb {
        dataset: PathBuf,
        /// Window id or zero-based position in the dataset
        #[arg(long)]
        window: String,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{message}")]
    Data { message: String },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(Error::Config(_)) => 1,
            CliError::Data { .. } => 2,
            CliError::Core(e) => match e {
                Error::Parse { .. }
                | Error::AnnotationMissing(_)
                | Error::File { .. }
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::InvalidSignal(_)
                | Error::SignalTooShort { .. }
                | Error::UnsupportedSignal(_)
                | Error::Range(_)
                | Error::LengthMismatch(..)
                | Error::InfeasibleMargin { .. }
                | Error::UndefinedMargin(_)
                | Error::UndefinedCorrelation(_) => 2,
                _ => 3,
            },
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match (g.task, &g.external_cmd) {
        (Task::External, None) => {
            return Err(CliError::Usage(
                "--task external needs --external-cmd".into(),
            ))
        }
        (Task::Rpeaks, Some(_)) => {
            return Err(CliError::Usage(
                "--external-cmd only applies to --task external".into(),
            ))
        }
        _ => {}
    }
    let cfg = output::psqi_config(g);
    cfg.snr.validate()?;
    cfg.cma.validate()?;
    if let Some(jobs) = g.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Synth(args) => commands::synth(g, args),
        Command::Score { dataset } => commands::score(g, dataset),
        Command::Evaluate(args) => commands::evaluate(g, args),
        Command::Sweep(args) => commands::sweep(g, args),
        Command::Features { dataset } => commands::features(g, dataset),
        Command::Perturb { dataset, window } => commands::perturb(g, dataset, window),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(Error::ClassifierFailure { stderr, .. }) = &e {
                if !stderr.trim().is_empty() {
                    eprintln!("classifier stderr:\n{}", stderr.trim_end());
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
