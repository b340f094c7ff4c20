//! Configuration, orchestration and reporting for the `lmm` command.

pub mod compare;
pub mod config;
pub mod output;
pub mod presets;

pub use compare::{build_report, compare_runs, compare_to_dir, run_plan, run_to_dir, ComparisonReport};
pub use config::{parse_config, preset_config, ConfigFile, Method, Resolved};
pub use output::{export_plotdata, read_record, write_record};
