//! `boundcut`: spectral clustering with error-bound kernels, pairwise bound
//! reports, oracle risk measurement and convergence experiments.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BandwidthArgs, BoundsArgs, ClusterArgs, KernelArg};
use config::Experiment;
use error::CliError;

const THREADS_ENV: &str = "BOUNDCUT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "boundcut", version, about)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; BOUNDCUT_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (labels for `cluster`, the JSON report otherwise).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectral clustering of a CSV point set.
    Cluster {
        /// CSV with one point per row; a header ending in `label` marks ground truth.
        #[arg(long)]
        input: PathBuf,
        /// Number of clusters.
        #[arg(long, default_value_t = 2)]
        q: usize,
        #[arg(long, value_enum, default_value = "g")]
        kernel: KernelArg,
        /// Exponent α of the G kernel K/(f̂(x)^α f̂(y)^(1-α)).
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        bandwidth: BandwidthArgs,
    },
    /// Pairwise error bounds of a labelled CSV point set.
    Bounds {
        /// CSV with one point per row; a header ending in `label` marks the labels.
        #[arg(long)]
        input: PathBuf,
        /// One label per line; defaults to the input's label column.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Kernels to report; H, G and V when omitted.
        #[arg(long = "kernel", value_enum)]
        kernels: Vec<KernelArg>,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        bandwidth: BandwidthArgs,
        /// Also write the similarity matrix of the single requested kernel.
        #[arg(long)]
        emit_matrix: Option<PathBuf>,
    },
    /// Risk of a classifier trained on a sample from a configured model.
    Risk {
        /// JSON config with the model, classifier and training size.
        #[arg(long)]
        config: PathBuf,
    },
    /// Convergence experiment.
    Converge {
        #[arg(long, value_enum)]
        experiment: Option<Experiment>,
        #[arg(long)]
        config: PathBuf,
    },
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => match flag {
            Some(0) => Err(CliError::Usage("--threads must be positive".into())),
            other => Ok(other),
        },
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = thread_count(cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {t} threads: {e}")))?;
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Cluster {
            input,
            q,
            kernel,
            alpha,
            bandwidth,
        } => commands::cluster(ClusterArgs {
            input,
            q: *q,
            kernel: *kernel,
            alpha: *alpha,
            bandwidth,
            seed: cli.seed,
            out,
        }),
        Command::Bounds {
            input,
            labels,
            kernels,
            alpha,
            bandwidth,
            emit_matrix,
        } => commands::bounds(BoundsArgs {
            input,
            labels: labels.as_deref(),
            kernels,
            alpha: *alpha,
            bandwidth,
            emit_matrix: emit_matrix.as_deref(),
            seed: cli.seed,
            out,
        }),
        Command::Risk { config } => commands::risk(config, cli.seed, out),
        Command::Converge { experiment, config } => commands::converge(*experiment, config, cli.seed, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
