//! Batch front end. Every stage reads a flat directory, keys files on their
//! stem, and writes its outputs plus a `manifest.json` atomically.
//!
//! Exit codes: 0 success, 1 data error, 2 config or usage error.

mod config;
mod stages;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{load_config, MaskConfig, PipelineConfig, SweepConfig};

/// Failure of a CLI stage, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit 2.
    Config(String),
    /// Unreadable or inconsistent inputs, or a numerical failure; exit 1.
    Data(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 1,
        }
    }

    fn data(msg: impl ToString) -> Self {
        CliError::Data(vec![msg.to_string()])
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::data(e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nullmap",
    version,
    about = "Null-space hallucination maps for linear imaging"
)]
pub struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Overrides `noise.seed` from the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Tp,
    Plstv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    NullHm,
    Error,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate undersampled k-space measurements of every input image.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Reconstruct every measurement in a simulate output directory.
    Reconstruct {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        meas: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Take lambda from a `sweep.json` written by `sweep-lambda`.
        #[arg(long)]
        sweep: Option<PathBuf>,
    },
    /// Split images into measurement-space and null-space components.
    Project {
        #[arg(long)]
        input: PathBuf,
        /// Mask file (`mask.json`).
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Hallucination maps for each reconstruction against its truth.
    Halmap {
        #[arg(long)]
        recon: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        meas: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Specific maps of arbitrary maps, with supports from reference images.
    Shm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// SSIM tables, region SSIM, centroid scatter and SSIM PDFs.
    Analyze {
        #[arg(long)]
        recon: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Output directory of `halmap`; enables region SSIM and centroids.
        #[arg(long)]
        halmap: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "null-hm")]
        regions: MapKind,
        /// Label written to the method column.
        #[arg(long, default_value = "recon")]
        method: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Pick the PLS-TV lambda with the lowest mean RMSE.
    SweepLambda {
        #[arg(long)]
        meas: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Candidate lambdas; overrides `sweep.candidates`.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long)]
        output: PathBuf,
    },
}

/// Parses `args` (program name first), runs the stage, reports errors on
/// stderr and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Config(msg) => eprintln!("config error: {msg}"),
                CliError::Data(msgs) => {
                    for m in msgs {
                        eprintln!("error: {m}");
                    }
                }
            }
            e.exit_code()
        }
    }
}

/// Runs an already parsed command.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Simulate { input, output } => stages::simulate(&cfg, cli.seed, input, output),
        Command::Reconstruct {
            method,
            meas,
            output,
            sweep,
        } => stages::reconstruct(&cfg, cli.seed, *method, meas, sweep.as_deref(), output),
        Command::Project { input, mask, output } => stages::project(&cfg, input, mask, output),
        Command::Halmap {
            recon,
            truth,
            meas,
            output,
        } => stages::halmap(&cfg, recon, truth, meas, output),
        Command::Shm {
            input,
            reference,
            output,
        } => stages::shm(&cfg, input, reference, output),
        Command::Analyze {
            recon,
            truth,
            halmap,
            regions,
            method,
            output,
        } => stages::analyze(&cfg, recon, truth, halmap.as_deref(), *regions, method, output),
        Command::SweepLambda {
            meas,
            truth,
            lambdas,
            output,
        } => stages::sweep(&cfg, meas, truth, lambdas.as_deref(), output),
    })
}
