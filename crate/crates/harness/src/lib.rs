//! Scenario configuration, execution and result files for the
//! superradiant Raman scattering simulations.

pub mod config;
pub mod output;
pub mod run;
pub mod scenarios;

pub use config::{load_config, parse_config, ConfigError, Metric, RunKind, ScenarioConfig, SweepSpec};
pub use output::{emit_outputs, load_record, RunRecord};
pub use run::{run_scenario, HarnessError, RunOutput};
