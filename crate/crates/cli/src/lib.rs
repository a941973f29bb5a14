//! Configuration-driven scenario runner for the Gaussian moment engine.
//!
//! A scenario is a TOML file naming a model, a task and its grids; running
//! it writes `<task>.csv` (or `.json`) and `manifest.json` to the output
//! directory.

pub mod config;
pub mod error;
pub mod runner;
pub mod table;
pub mod tasks;

pub use config::{validate_config, Diagnostic, OutputFormat, ScenarioConfig, Task};
pub use error::CliError;
pub use runner::{run_scenario, RunOptions, RunReport, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
pub use table::{Cell, ResultTable};
pub use tasks::{PointFailure, TaskOutput};
