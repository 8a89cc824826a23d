//! Scenario-driven command line for the credit-growth model: parse a TOML
//! scenario, run one command, emit tables, CSV/JSON and plot data.

pub mod emit;
pub mod run;
pub mod scenario;

pub use emit::{emit_plot_data, write_outputs, EmitError, PlotKind};
pub use run::{run, ExitStatus, Results, RunReport, StatusKind};
pub use scenario::{parse_scenario, parse_scenario_for, print_scenario, Command, ConfigError, Format, ScenarioConfig};
