//! File formats, CSV output and the command-line interface.

pub mod cli;
pub mod csv;
pub mod format;
pub mod report;

pub use cli::run_cli;
pub use csv::{read_timeseries, write_timeseries};
pub use format::{load_network, load_scenario, parse_network, parse_scenario, serialize_network, Scenario};
pub use report::{RunReport, RunStatus};
