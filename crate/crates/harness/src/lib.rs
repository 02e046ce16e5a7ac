//! Scenario runner for the population-code simulations.
//!
//! Each scenario produces three files in the output directory: `trace.csv`,
//! a `trace.meta.json` sidecar embedding the fully-resolved configuration
//! and seed, and a `figure.svg` with the scenario's panels. Runs are
//! deterministic per seed: identical configuration and seed reproduce the
//! trace byte for byte.

pub mod config;
pub mod error;
pub mod plot;
pub mod scenario;
pub mod trace;

pub use config::{validate_config, Scenario, ScenarioConfig};
pub use error::HarnessError;
pub use scenario::run_scenario;
