//! `fockprint`: generate pattern datasets, train and evaluate regressors,
//! invert single-photon statistics analytically, and simulate single states.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error,
//! 4 learner non-convergence after all retries.

/// `println!` that exits quietly once stdout is closed (e.g. piped to `head`).
macro_rules! say {
    ($($t:tt)*) => { $crate::emit(format_args!($($t)*), true) };
}

/// `print!` counterpart of [`say!`].
macro_rules! say_raw {
    ($($t:tt)*) => { $crate::emit(format_args!($($t)*), false) };
}

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Config;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }
}

impl From<fockprint::Error> for CliError {
    fn from(e: fockprint::Error) -> Self {
        use fockprint::Error as E;
        let code = match e {
            E::Io { .. } | E::Format(_) | E::CorruptRecord { .. } => 3,
            E::NonConvergence { .. } => 4,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "fockprint", version, about = "Linear-optical pattern simulation and learned state characterization")]
pub struct Cli {
    /// Flat key = value file supplying defaults for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate random states and write a JSON Lines pattern dataset.
    Generate(GenerateArgs),
    /// Fit a model on a dataset and write it as JSON.
    Train(TrainArgs),
    /// Score a model on a dataset.
    Eval(EvalArgs),
    /// Recover an N = 1 state from its vacuum and single-photon probabilities.
    TomoAnalytic(TomoArgs),
    /// Print the output pattern of one state.
    Simulate(SimulateArgs),
    /// Render saved JSON reports as tables.
    Report(ReportArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    #[value(alias = "tomography")]
    Tomo,
    #[value(alias = "entanglement")]
    Ent,
}

impl std::str::FromStr for KindArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <KindArg as ValueEnum>::from_str(s, true)
    }
}

impl From<KindArg> for fockprint::ExperimentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Tomo => fockprint::ExperimentKind::Tomography,
            KindArg::Ent => fockprint::ExperimentKind::Entanglement,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LearnerArg {
    Svr,
    Ert,
}

impl std::str::FromStr for LearnerArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <LearnerArg as ValueEnum>::from_str(s, true)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Rbf,
    Linear,
    #[value(alias = "polynomial")]
    Poly,
}

impl std::str::FromStr for KernelArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <KernelArg as ValueEnum>::from_str(s, true)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Json,
}

impl std::str::FromStr for FormatArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <FormatArg as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Highest photon number of the unknown state(s).
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Reference amplitude |α| [default: 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Largest output photon number kept as a feature [default: 5].
    #[arg(long)]
    pub s_max: Option<u32>,
    /// Dataset path [default: dataset.jsonl].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also export the samples as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model path [default: model.json].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reject datasets of another kind.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// [default: svr]
    #[arg(long, value_enum)]
    pub learner: Option<LearnerArg>,
    /// SVR kernel [default: rbf].
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// SVR box constraint [default: 1].
    #[arg(long)]
    pub c: Option<f64>,
    /// SVR tube half-width [default: 0.1].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Kernel γ [default: 1 / (features · variance)].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Polynomial degree [default: 3].
    #[arg(long)]
    pub degree: Option<u32>,
    /// Polynomial offset [default: 1].
    #[arg(long)]
    pub coef0: Option<f64>,
    /// KKT tolerance [default: 0.001].
    #[arg(long)]
    pub tol: Option<f64>,
    /// SMO iteration budget in passes over the dual [default: 100].
    #[arg(long)]
    pub max_passes: Option<usize>,
    /// Retries with a doubled budget after non-convergence [default: 2].
    #[arg(long)]
    pub retries: Option<u32>,
    /// ERT tree count [default: 100].
    #[arg(long)]
    pub trees: Option<usize>,
    /// ERT candidate features per split [default: all].
    #[arg(long)]
    pub max_features: Option<usize>,
    /// ERT minimum samples to split [default: 2].
    #[arg(long)]
    pub min_split: Option<usize>,
    /// ERT depth limit [default: none].
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Keep principal components up to this explained-variance ratio.
    #[arg(long)]
    pub pca: Option<f64>,
    /// Standardize features [default: on for SVR or PCA].
    #[arg(long)]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Stdout format [default: text].
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["probs", "state"])))]
pub struct TomoArgs {
    /// P_vac,P_1000,P_0100,P_0010,P_0001
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub probs: Option<Vec<f64>>,
    /// r0,r1,phi1: derive the probabilities from this state.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub state: Option<Vec<f64>>,
    /// r0,r1,phi1 to report the fidelity against.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub truth: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// tomo: single-mode unknown state; ent: two-mode state [default: tomo].
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Inline `r=..;phi=..` (comma-separated lists), or `@path` to a file
    /// with `r = ..` and `phi = ..` lines.
    #[arg(long, conflicts_with = "random")]
    pub state: Option<String>,
    /// Draw a random state with this N instead.
    #[arg(long)]
    pub random: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// [default: 4]
    #[arg(long)]
    pub s_max: Option<u32>,
    /// Recompute by direct operator expansion and print the largest deviation.
    #[arg(long)]
    pub oracle_check: bool,
    /// Skip zero-probability configurations.
    #[arg(long)]
    pub nonzero: bool,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// JSON reports written by `eval --json`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

pub(crate) fn emit(args: std::fmt::Arguments<'_>, newline: bool) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let r = out.write_fmt(args).and_then(|_| if newline { out.write_all(b"\n") } else { Ok(()) });
    if let Err(e) = r {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(3);
    }
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("FOCKPRINT_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::config(format!("FOCKPRINT_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(CliError::config("FOCKPRINT_THREADS must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Generate(a) => commands::generate(a, &cfg),
        Command::Train(a) => commands::train(a, &cfg),
        Command::Eval(a) => commands::eval(a, &cfg),
        Command::TomoAnalytic(a) => commands::tomo_analytic(a, &cfg),
        Command::Simulate(a) => commands::simulate(a, &cfg),
        Command::Report(a) => commands::report(a, &cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
