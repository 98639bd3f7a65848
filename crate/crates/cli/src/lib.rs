//! Command-line front end: single runs, paired 5x2 comparisons and report
//! rendering.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use evoml::analysis::AnalysisError;
use evoml::data::DataError;
use evoml::evolution::EvolutionError;
use evoml::FitnessMode;
use thiserror::Error;

pub mod commands;
pub mod config;

pub use commands::{cmd_compare, cmd_run, render_dir};
pub use config::{resolve, Extra, RunConfig, SearchFlags};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("insufficient budget: no generation completed within {0} s")]
    InsufficientBudget(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report error: {0}")]
    Report(String),
    #[error(transparent)]
    Analysis(AnalysisError),
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::InsufficientBudget(_) => 3,
            _ => 1,
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Evolution(EvolutionError::InvalidConfig(m)) => CliError::Config(m),
            AnalysisError::Evolution(e @ EvolutionError::TooFewRows { .. }) => CliError::Config(e.to_string()),
            AnalysisError::Data(e) => CliError::Config(e.to_string()),
            other => CliError::Analysis(other),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "evoml", version, about = "Evolutionary pipeline search with dynamic or static fitness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one search and score the final pipeline on a held-out split.
    Run {
        #[command(flatten)]
        flags: SearchFlags,
        /// Fitness regime.
        #[arg(long)]
        mode: Option<FitnessMode>,
        /// Fraction of rows held out for the external score (default 0.5).
        #[arg(long = "test-fraction")]
        test_fraction: Option<f64>,
    },
    /// Paired 5x2 comparison of the dynamic and static regimes.
    Compare {
        #[command(flatten)]
        flags: SearchFlags,
        /// Modes to run; compare requires both.
        #[arg(long, value_delimiter = ',')]
        modes: Vec<FitnessMode>,
        /// Multiplier applied to Wilcoxon p-values (default 3).
        #[arg(long)]
        bonferroni: Option<f64>,
    },
    /// Render tables and plot data from stored JSON reports.
    Report {
        /// Directory holding the reports of a run or compare invocation.
        #[arg(value_name = "DIR")]
        dir: PathBuf,
    },
}

/// Executes a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            flags,
            mode,
            test_fraction,
        } => {
            let rc = resolve(
                &flags,
                &Extra {
                    mode,
                    test_fraction,
                    ..Extra::default()
                },
            )?;
            let r = cmd_run(&rc)?;
            println!(
                "{} [{}] generations={} internal={:.3} external={:.3} age={} -> {}",
                r.final_pipeline,
                r.mode,
                r.generations_completed,
                r.internal_score,
                r.external_score,
                r.age,
                rc.out.display()
            );
        }
        Command::Compare {
            flags,
            modes,
            bonferroni,
        } => {
            let rc = resolve(
                &flags,
                &Extra {
                    modes,
                    bonferroni,
                    ..Extra::default()
                },
            )?;
            let doc = cmd_compare(&rc)?;
            print!("{}", evoml::analysis::render_table(&doc));
        }
        Command::Report { dir } => {
            for p in render_dir(&dir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}
