//! Command-line harness around `bvlab-core`: strict TOML configs, run
//! orchestration, JSON/CSV reports, binary field snapshots and plot-data export.

pub mod config;
pub mod export;
pub mod report;
pub mod run;
pub mod sample;
pub mod snapshot;
pub mod vortices;

pub use config::{parse_config, RunConfig, Task};
pub use export::export_plotdata;
pub use report::Report;
pub use run::run;

/// Environment variable holding the default output root.
pub const OUTPUT_ENV: &str = "BVLAB_OUTPUT";
