//! The `probqual` command line: `toy`, `sweep`, `aep`, `imha` and `inspect`.
//!
//! Every command takes `--seed`, `--out-dir` and `--config`. A config file
//! is TOML with the command's settings as top-level keys, or a manifest
//! written by an earlier run (its `config` object is reused). Flags given
//! on the command line override the file. Each run writes its tables as
//! CSV plus `manifest.json` into the output directory.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 numerical certification
//! failure, 1 anything else.

mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{AepSettings, ImhaSettings, InspectSettings, SweepSettings, ToySettings};
pub use output::{sha256_file, RunManifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Lib(#[from] crate::Error),

    #[error("cannot read config: {0}")]
    Config(String),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Lib(e) if e.is_certification() => 3,
            CliError::Lib(
                crate::Error::Input(_)
                | crate::Error::Parse(_)
                | crate::Error::UnknownSymbol(_)
                | crate::Error::NotNormalized { .. }
                | crate::Error::MissingContext(_)
                | crate::Error::SupportMismatch(_),
            ) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "probqual", version, about = "Probability-quality trade-off experiments at desk scale")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for tables and the manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// TOML settings or a previous manifest.json.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Toy world, banded corpora and the Simpson's-paradox check.
    Toy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: commands::ToyFlags,
    },
    /// Adaptor by temperature sweep on an aligned autoregressive world.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: commands::SweepFlags,
    },
    /// Typical-set exceedance against the Chebyshev and Chernoff bounds.
    Aep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: commands::AepFlags,
    },
    /// Sample a globally normalized adaptor with an IMHA chain.
    Imha {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: commands::ImhaFlags,
    },
    /// Step-by-step trace of one string under an adaptor.
    Inspect {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: commands::InspectFlags,
    },
}

/// Run a parsed command. Returns the manifest that was written.
pub fn execute(cli: Cli) -> Result<RunManifest, CliError> {
    match cli.command {
        Command::Toy { common, flags } => commands::toy(&common, flags),
        Command::Sweep { common, flags } => commands::sweep(&common, flags),
        Command::Aep { common, flags } => commands::aep(&common, flags),
        Command::Imha { common, flags } => commands::imha(&common, flags),
        Command::Inspect { common, flags } => commands::inspect(&common, flags),
    }
}

/// Parse `args` (program name first), run, report errors on stderr and
/// return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
