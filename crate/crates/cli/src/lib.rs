//! Scenario files, verdict documents and the commands behind the `eahm` binary.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

pub use commands::{run_command, Command, CommandResult, VerdictDocument, EVAL_HEADER, FORMAT_VERSION};
pub use error::{CliError, Result};
pub use scenario::Scenario;
