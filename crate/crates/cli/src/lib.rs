//! Command-line front end: plan parsing, pipeline dispatch, and table
//! rendering for the citation indicator library.

pub mod plan;
pub mod run;
pub mod table;

pub use plan::{Command, CommandPlan, OutputFormat};
pub use run::{execute, CliError};
pub use table::{Cell, OutputTable};
