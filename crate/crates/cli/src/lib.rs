//! Command-line front end for the `relinfo` library.
//!
//! Every run produces a JSON report (stdout or `--out`) and, with `--csv DIR`,
//! flat CSV tables. Exit codes: 0 success, 2 invalid input or usage, 3
//! numerical or estimation failure, 1 when output cannot be written.

pub mod commands;
pub mod config;
pub mod error;
pub mod input;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;

use config::{Experiment, ExperimentConfig};
use error::{CliError, CliResult};
use report::{Inputs, Provenance, Report, Table};

#[derive(Debug, Parser)]
#[command(name = "relinfo", version, about = "Relative information for hypothesis tests with missing data")]
pub struct Cli {
    /// Seed for all Monte Carlo draws.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo draws (default 10000 for binomial commands, 2000 for Cox).
    #[arg(long, global = true)]
    pub draws: Option<usize>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, global = true, env = "RELINFO_WORKERS")]
    pub workers: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write flat CSV tables into this directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub csv: Option<PathBuf>,
    /// Display standalone lod scores on the log10 scale.
    #[arg(long, global = true)]
    pub log10: bool,
    /// Replay an experiment from a configuration or a previous report.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["seed", "draws", "log10"])]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Experiment>,
}

impl Cli {
    /// The fully resolved experiment configuration.
    pub fn experiment_config(&self) -> CliResult<ExperimentConfig> {
        match (&self.config, &self.command) {
            (Some(path), None) => report::load_config(path),
            (None, Some(experiment)) => Ok(ExperimentConfig {
                seed: self.seed.unwrap_or(relinfo::mc::DEFAULT_SEED),
                draws: self.draws.unwrap_or_else(|| experiment.default_draws()),
                log10: self.log10,
                experiment: experiment.clone(),
            }),
            (Some(_), Some(_)) => Err(CliError::Config("give either --config or a subcommand, not both".into())),
            (None, None) => Err(CliError::Config("a subcommand or --config is required (see --help)".into())),
        }
    }
}

/// Runs a resolved experiment and assembles its report.
pub fn run_experiment(config: &ExperimentConfig, workers: usize, argv: Vec<String>) -> CliResult<(Report, Vec<Table>)> {
    let outcome = commands::execute(config, workers)?;
    let timestamp_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let report = Report {
        tool: report::TOOL.to_string(),
        version: report::VERSION.to_string(),
        command: config.experiment.name().to_string(),
        inputs: Inputs {
            argv,
            config: config.clone(),
        },
        results: outcome.results,
        provenance: Provenance {
            seed: config.seed,
            generator: relinfo::mc::GENERATOR_ID.to_string(),
            version: report::VERSION.to_string(),
            timestamp_unix,
            workers,
        },
        warnings: outcome.warnings,
    };
    Ok((report, outcome.tables))
}

fn execute(cli: &Cli, argv: Vec<String>) -> CliResult<()> {
    let config = cli.experiment_config()?;
    let (report, tables) = run_experiment(&config, cli.workers.unwrap_or(0), argv)?;
    if let Some(dir) = &cli.csv {
        report::write_tables(dir, &report.command, &tables)?;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let text = report.to_json();
    match &cli.out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| CliError::Write {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Write {
                path: "stdout".into(),
                message: e.to_string(),
            }),
            _ => Ok(()),
        },
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let argv = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
