//! Runner for `toda-core`: subcommands, config merging, CSV/JSON output and
//! the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod io;
pub mod parallel;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{execute, Artifact};
pub use config::{DarbouxArgs, EnsembleArgs, FlowArgs, OdeArgs, SelftestArgs, SeriesArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {err}", err.name())]
    Numerical {
        #[from]
        err: toda_core::Error,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("selftest failed: {0}")]
    SelftestFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) | CliError::SelftestFailed(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "toda", version, about = "Toda lattice experiments and self-test")]
pub struct Cli {
    /// JSON file with parameters for the subcommand; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving result.csv or result.json plus meta.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral flow of a finite lattice: weights times e^{t p(λ)}.
    Flow(FlowArgs),
    /// One Darboux step, or n steps approximating the flow.
    Darboux(DarbouxArgs),
    /// Direct integration of the Flaschka equations.
    Ode(OdeArgs),
    /// β-ensemble sampling and the before/after invariance report.
    Ensemble(EnsembleArgs),
    /// Envelope-series checks.
    SeriesCheck(SeriesArgs),
    /// Runs the acceptance suite.
    Selftest(SelftestArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Flow(_) => "flow",
            Command::Darboux(_) => "darboux",
            Command::Ode(_) => "ode",
            Command::Ensemble(_) => "ensemble",
            Command::SeriesCheck(_) => "series-check",
            Command::Selftest(_) => "selftest",
        }
    }
}
