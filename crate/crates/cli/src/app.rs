//! Argument handling for the `qoc` binary, callable in-process.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{load, run_check, run_fidelity, run_simulate, run_solve, Overrides};
use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qoc", version, about = "Optimal control of quantum state transfer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides output.directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Reserved; runs are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides optimizer.max_iterations.
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<usize>,
    /// Log every iteration to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the optimizer and write residuals, fidelity, controls and trajectory.
    Solve { config: PathBuf },
    /// Report the Lie-algebra rank of the control system.
    Check { config: PathBuf },
    /// Print the fidelity between the initial and target states.
    Fidelity { config: PathBuf },
    /// Propagate the initial state under a controls CSV.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        controls: PathBuf,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let overrides = Overrides {
        out: cli.out,
        formats: cli.format,
        max_iterations: cli.max_iter,
        seed: cli.seed,
    };
    match cli.command {
        Command::Solve { config } => {
            let report = run_solve(&load(&config, &overrides)?)?;
            println!(
                "converged: {}, iterations: {}, final fidelity: {}, final cost: {}",
                report.converged.unwrap_or(false),
                report.iterations,
                report.final_fidelity,
                report.final_cost
            );
            Ok(report.exit_code())
        }
        Command::Check { config } => {
            let s = run_check(&load(&config, &overrides)?)?;
            println!(
                "controllable: {} (dimension {} of {})",
                s.controllable, s.dimension, s.target_dimension
            );
            Ok(0)
        }
        Command::Fidelity { config } => {
            println!("{}", run_fidelity(&load(&config, &overrides)?)?);
            Ok(0)
        }
        Command::Simulate { config, controls } => {
            let report = run_simulate(&load(&config, &overrides)?, &controls)?;
            println!(
                "final fidelity: {}, final cost: {}",
                report.final_fidelity, report.final_cost
            );
            Ok(report.exit_code())
        }
    }
}

/// Parses `args` (including the program name) and runs the command;
/// returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 4 } else { 0 };
        }
    };
    let level = if cli.verbose { "debug" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
