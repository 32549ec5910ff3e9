//! Scenario-driven front end for `pseudomode-core`: JSON scenarios in, CSV
//! artifacts out.

pub mod cli;
pub mod commands;
pub mod error;
pub mod output;
pub mod presets;
pub mod scenario;

pub use commands::{compare, execute, Comparison, Outcome};
pub use error::{RunnerError, RunnerResult};
pub use scenario::Scenario;
