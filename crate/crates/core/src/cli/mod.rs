//! The `somor` command line.

mod commands;
pub mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_ARGUMENT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

/// Environment variable capping the worker count.
pub const WORKERS_ENV: &str = "SOMOR_WORKERS";

pub const RUN_MANIFEST: &str = "run.json";

#[derive(Parser, Debug)]
#[command(name = "somor", version, about = "Projector-free IRKA for sparse second-order index-3 systems")]
pub struct Cli {
    /// Worker threads (also capped by SOMOR_WORKERS).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a benchmark model (six Matrix Market files and a manifest).
    Generate(GenerateArgs),
    /// Reduce a model with IRKA or dense balanced truncation.
    Reduce(ReduceArgs),
    /// Frequency response of a model and/or a reduced model.
    Freqresp(FreqrespArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
    /// Run IRKA and balanced truncation side by side.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dsms,
    Tcom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Irka,
    Bt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotFormat {
    Svg,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    /// Chain length for tcom (n1 = 3g + 1).
    #[arg(long)]
    pub g: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct IrkaFlags {
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Frequency band LO:HI (rad/s).
    #[arg(long)]
    pub band: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// key=value configuration file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[arg(long = "model-dir")]
    pub model_dir: PathBuf,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[command(flatten)]
    pub irka: IrkaFlags,
    /// Largest n1 accepted by the dense balanced-truncation path.
    #[arg(long = "dense-cap")]
    pub dense_cap: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FreqrespArgs {
    #[arg(long = "model-dir")]
    pub model_dir: Option<PathBuf>,
    /// Reduced-model JSON written by `reduce`.
    #[arg(long)]
    pub reduced: Option<PathBuf>,
    #[arg(long)]
    pub band: Option<String>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_enum)]
    pub plot: Option<PlotFormat>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// tiny | small
    #[arg(long, default_value = "small")]
    pub tier: String,
    /// Also check this model directory (dense checks only when n1 <= 200).
    #[arg(long = "model-dir")]
    pub model_dir: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long = "model-dir")]
    pub model_dir: PathBuf,
    #[command(flatten)]
    pub irka: IrkaFlags,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long = "dense-cap")]
    pub dense_cap: Option<usize>,
    #[arg(long, value_enum)]
    pub plot: Option<PlotFormat>,
    #[arg(long)]
    pub out: PathBuf,
}

/// One per CLI run, written as `run.json` in the output directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub timings: BTreeMap<String, f64>,
    pub status: String,
    pub exit_code: i32,
    #[serde(default)]
    pub summary: serde_json::Value,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            status: "ok".into(),
            ..Self::default()
        }
    }

    pub fn load(path: impl AsRef<Path>) -> crate::Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parameter(_) | Error::DenseCap { .. } => EXIT_ARGUMENT,
        Error::Io(_) | Error::Json(_) | Error::Manifest(_) | Error::MatrixMarket { .. } => EXIT_FAILURE,
        _ => EXIT_NUMERICAL,
    }
}

fn configure_workers(flag: Option<usize>) {
    let env_cap = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
    let n = match (flag, env_cap) {
        (Some(f), Some(e)) => Some(f.min(e)),
        (f, e) => f.or(e),
    };
    if let Some(n) = n.filter(|&n| n > 0) {
        // Fails only when the pool already exists, e.g. in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ARGUMENT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_workers(cli.workers);
    commands::dispatch(cli.command)
}

pub fn run_from_env() -> i32 {
    run(std::env::args_os())
}
