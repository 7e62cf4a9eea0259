//! Experiment harness, file formats and command line for `tomocume-core`.

pub mod config;
pub mod experiments;
pub mod io;
pub mod table;

pub use config::ExperimentConfig;
pub use table::MetricTable;
