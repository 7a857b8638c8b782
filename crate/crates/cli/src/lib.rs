//! Pipeline stages behind the `apdkit` binary. Each stage reads and writes
//! files in one run directory, so any stage can be rerun from its inputs.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{
    cmd_cluster, cmd_extract, cmd_pipeline, cmd_report, cmd_train, with_threads, RunPaths,
    TrainSummary,
};
pub use config::{resolve_arch, DataSource, DatasetConfig, Overrides, RunConfig};
pub use error::{CliError, CliResult};
