//! Config parsing, run orchestration and report emission for the `qoc`
//! binary.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod svg;

pub use commands::{load, run_check, run_fidelity, run_simulate, run_solve, Overrides, RunReport};
pub use config::{parse_config, parse_config_str, Format, ProblemConfig};
pub use error::{CliError, CliResult};
