//! Configuration, case registry and output writers for the `mdf` runner.

pub mod config;
pub mod runner;
pub mod vtk;

pub use config::{CaseKind, ConfigError, FlowChoice, RunConfig};
pub use runner::{run_case, CaseOutput, CaseRun, ErrorRow, RunError};
