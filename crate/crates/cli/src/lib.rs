//! Pipeline front end: census → dissipative region → certificates →
//! attractor checks → basin estimates, plus standalone surgery runs.
//!
//! All outputs are machine-readable (JSON/CSV); wall-clock timings live in a
//! separate file so reports are byte-identical across runs with one seed.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_EMPTY_CENSUS: i32 = 2;
pub const EXIT_CONFIG: i32 = 64;
pub const EXIT_INTEGRATION: i32 = 65;
pub const EXIT_SURGERY: i32 = 66;

#[derive(Debug, Parser)]
#[command(name = "flow3", version, about = "Nonsingular 3D flow analysis pipeline")]
pub struct Cli {
    /// Analysis config (TOML).
    #[arg(long, global = true, default_value = "flow3.toml")]
    pub config: PathBuf,

    /// Override the RNG seed from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory (overrides OUTPUT_DIR and the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Emit a single JSON summary line on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    /// Worker threads (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Periodic-orbit census: writes catalog.json and catalog.csv.
    Orbits,
    /// Full pipeline: census, region, certificates, attractor checks, basin.
    Analyze,
    /// Basin and trapped-set estimates with plot data files.
    Basin,
    /// Cocycle surgery on explicit saddle data.
    Surgery {
        /// Saddle parameters (TOML: lambda, mu, gamma, tau, [budget]).
        #[arg(long)]
        params: PathBuf,
    },
    /// Render an existing report.json as a human-readable summary.
    Report,
}

/// Resolve the output directory: --out > OUTPUT_DIR > config.
pub fn resolve_out_dir(cli: &Cli, cfg_dir: &str) -> PathBuf {
    if let Some(o) = &cli.out {
        return o.clone();
    }
    if let Ok(env) = std::env::var("OUTPUT_DIR") {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    PathBuf::from(cfg_dir)
}

pub fn run(cli: Cli) -> i32 {
    if cli.threads > 0 {
        // a failure here just means a pool already exists; keep going
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let code = match &cli.command {
        Command::Surgery { params } => commands::surgery::run(&cli, params),
        Command::Orbits => commands::orbits::run(&cli),
        Command::Analyze => commands::analyze::run(&cli),
        Command::Basin => commands::basin::run(&cli),
        Command::Report => commands::report::run(&cli),
    };
    match code {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Pipeline error with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] config::ConfigError),
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("surgery failure: {0}")]
    Surgery(String),
    #[error("io failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Integration(_) => EXIT_INTEGRATION,
            CliError::Surgery(_) => EXIT_SURGERY,
            CliError::Io(_) => EXIT_INTEGRATION,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
