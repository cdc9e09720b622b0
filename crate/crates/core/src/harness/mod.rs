//! Configuration, file formats, run orchestration and the validation suite
//! behind the command-line tool.

pub mod config;
pub mod io;
pub mod run;
mod scenario;
pub mod suite;

pub use config::{HyperInit, Mode, RunConfig};
pub use scenario::{gen_scenario, ScenarioSpec, SignalKind};
