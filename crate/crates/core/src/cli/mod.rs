//! Command-line driver: parameter sweeps and CSV output.

mod commands;
mod config;
mod csv;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use thiserror::Error;

use crate::imex::ImexError;
use crate::models::ModelError;
use crate::modeq::ModeqError;

pub use commands::{run_command, simulate_paths, Outcome};
pub use config::{
    log_grid, parse_config_text, resolve, Cli, Command, CommandKind, CommonArgs, InitData,
    RunConfig, SimulateArgs, StepSize, SymbolArgs,
};
pub use csv::{format_num, write_atomic, Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Name of the environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "SPLITSTAB_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid {field}: {reason}")]
    Config { field: String, reason: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Modeq(#[from] ModeqError),
    #[error(transparent)]
    Imex(#[from] ImexError),
}

fn model_is_config(e: &ModelError) -> bool {
    matches!(
        e,
        ModelError::EpsOutOfDomain { .. }
            | ModelError::InvalidParameter { .. }
            | ModelError::UnknownSplitting(_)
    )
}

fn modeq_is_config(e: &ModeqError) -> bool {
    match e {
        ModeqError::InvalidParams { .. } | ModeqError::EmptyScan => true,
        ModeqError::Model(m) => model_is_config(m),
        ModeqError::SingularImplicit { .. } | ModeqError::Mat(_) => false,
    }
}

fn imex_is_config(e: &ImexError) -> bool {
    match e {
        ImexError::TooFewCells(_)
        | ImexError::IncommensurateDx(_)
        | ImexError::UnresolvedMode { .. }
        | ImexError::GridMismatch { .. }
        | ImexError::InvalidTime(_) => true,
        ImexError::Model(m) => model_is_config(m),
        ImexError::Modeq(m) => modeq_is_config(m),
        _ => false,
    }
}

impl CliError {
    /// 2 for bad input, 4 for numerical failure, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        let config = match self {
            CliError::Config { .. } => true,
            CliError::Io { .. } => return EXIT_IO,
            CliError::Model(e) => model_is_config(e),
            CliError::Modeq(e) => modeq_is_config(e),
            CliError::Imex(e) => imex_is_config(e),
        };
        if config {
            EXIT_CONFIG
        } else {
            EXIT_NUMERICAL
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize =
            v.trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Config {
                    field: THREADS_ENV.to_string(),
                    reason: format!("expected a positive integer, got `{v}`"),
                })?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Config {
        field: THREADS_ENV.to_string(),
        reason: e.to_string(),
    })
}

/// Parses arguments, runs the command and returns the process exit code.
/// CSV goes to `stdout` when no output path is given; diagnostics go to
/// `stderr`.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let result = thread_pool().and_then(|pool| run_command(&cli.command, &pool, stdout, stderr));
    match result {
        Ok(Outcome::Completed) => EXIT_OK,
        Ok(Outcome::BlowUp) => EXIT_BLOWUP,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
