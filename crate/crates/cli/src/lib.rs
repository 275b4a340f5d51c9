//! Command-line front end: subcommands, report format and exit codes.

pub mod commands;
pub mod error;
pub mod report;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
pub use report::FitReport;
