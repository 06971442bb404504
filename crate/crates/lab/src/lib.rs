//! Configuration, scenario runs, CSV output and the command-line front end
//! for the `prandtl-core` solvers.

pub mod config;
pub mod error;
pub mod output;
pub mod scenario;

pub use config::{parse_config, RunConfig};
pub use error::{LabError, Result};
pub use scenario::{convergence_study, run_convergence, run_scenario, Axis, ScenarioResult, Status, Subcommand};
