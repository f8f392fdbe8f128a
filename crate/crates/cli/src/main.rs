//! `gsmtl`: generate datasets, fit models, run benchmarks and export S matrices.
//!
//! Exit codes: 0 success, 2 usage, 3 config, 4 data, 5 convergence or numerical
//! failure, 6 I/O.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "gsmtl", version, about = "Group-structured latent-subspace multi-task learning")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config; default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed (overrides `seed` in the config; default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a generated dataset, its planted groups and the ground-truth model.
    Generate,
    /// Fit one method on the configured dataset and write L, S and the objective trace.
    Fit,
    /// Grid-search every method on every dataset over the configured seeds.
    Benchmark,
    /// Write |S| as CSV and PGM together with support similarity statistics.
    ExportSmatrix {
        /// Matrix CSV holding S (defaults to `export.s_matrix` in the config).
        #[arg(long)]
        s_matrix: Option<PathBuf>,
        /// Groups file over the tasks (defaults to `export.groups` in the config).
        #[arg(long)]
        groups: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::Data(_) => 4,
            CliError::Numerical(_) => 5,
            CliError::Io(_) => 6,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (label, msg) = match self {
            CliError::Config(m) => ("config error", m),
            CliError::Data(m) => ("data error", m),
            CliError::Numerical(m) => ("solver error", m),
            CliError::Io(m) => ("I/O error", m),
        };
        write!(f, "{label}: {msg}")
    }
}

impl From<gsmtl::Error> for CliError {
    fn from(e: gsmtl::Error) -> Self {
        use gsmtl::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParameter(_) | E::InvalidGroups(_) => CliError::Config(msg),
            E::DimensionMismatch { .. } | E::InvalidLabel { .. } | E::InvalidData(_) | E::Parse { .. } => {
                CliError::Data(msg)
            }
            E::NonFinite(_)
            | E::Degenerate(_)
            | E::NoConvergence { .. }
            | E::DescentViolation { .. }
            | E::Singular(_) => CliError::Numerical(msg),
            E::Io { .. } => CliError::Io(msg),
        }
    }
}

pub struct Context {
    pub config: config::RunConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub verbose: bool,
}

impl Context {
    pub fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => config::RunConfig::load(p)?,
        None => config::RunConfig::default(),
    };
    let ctx = Context {
        out: cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        seed: cli.seed.or(config.seed).unwrap_or(0),
        verbose: cli.verbose,
        config,
    };
    match cli.command {
        Command::Generate => commands::generate(&ctx),
        Command::Fit => commands::fit(&ctx),
        Command::Benchmark => commands::benchmark(&ctx),
        Command::ExportSmatrix { s_matrix, groups } => commands::export_smatrix(&ctx, s_matrix, groups),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gsmtl: {e}");
            ExitCode::from(e.code())
        }
    }
}
