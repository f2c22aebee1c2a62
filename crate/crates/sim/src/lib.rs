//! Scenario presets, parameter sweeps, result files and the command line
//! front end for the delayed dispersive solver.

pub mod config;
pub mod emit;
pub mod error;
pub mod presets;
pub mod report;
pub mod runner;
pub mod sweep;
pub mod verify;

pub use config::{load_config, parse_config, render_config, AnalysisSettings};
pub use emit::{emit, format_number, read_meta, read_norms, Meta};
pub use error::{SimError, SimResult};
pub use presets::{preset, Preset};
pub use report::{report, Report};
pub use runner::{analyze, simulate, simulate_with, Analysis, RunResult};
pub use sweep::{parse_values, run_sweep, Axis, SweepValue};
pub use verify::{verify_table, VerifyRow};
