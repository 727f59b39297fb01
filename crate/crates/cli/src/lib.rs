//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code: 0 on success, 1 when a
//! command fails, 2 on usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tdnnas::search::Method;

mod commands;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tdnnas", version, about = "Architecture search over factored TDNN supernets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand that reads a configuration.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Root seed of the run (overrides `search.seed`).
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Data sources; without them the task described by the configuration is
/// generated in memory.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Training dataset file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Test dataset file.
    #[arg(long)]
    pub test: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the train and test datasets of the configured task.
    GenData {
        #[command(flatten)]
        common: Common,
    },
    /// Run a search method, derive and retrain its architecture.
    Search {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// Search method (overrides `search.method`).
        #[arg(long, value_parser = parse_method)]
        method: Option<Method>,
        /// Penalty weight (overrides `search.eta`).
        #[arg(long)]
        eta: Option<f64>,
        /// Label of the run in reports.
        #[arg(long)]
        system: Option<String>,
    },
    /// Derive an architecture from a supernet checkpoint.
    Derive {
        #[command(flatten)]
        common: Common,
        /// Supernet checkpoint written by `search`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train one architecture from scratch.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// Spec file to train.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Best of N uniformly sampled architectures.
    RandomSearch {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// Number of samples (overrides `search.random_samples`).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Train and rank every architecture of a small space.
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// Largest space to enumerate (overrides `search.oracle_cap`).
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Evaluate a trained model on a dataset.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Tabulate run records as CSV and markdown.
    Report {
        /// Run record files.
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// Directory for report.csv and report.md.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: tdnnas::Error| e.to_string())
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match commands::execute(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_FAILURE
        }
    }
}
