//! Configuration, experiment orchestration, datasets, result output and the
//! command-line front end.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod experiment;
pub mod matrices;
pub mod output;

pub use config::{load_config, save_config, ExperimentConfig, MatrixMode, PerEntity};
pub use dataset::{ObservedDataset, Role};
pub use experiment::{run_correlation_experiment, run_sweep, SweepSpec};
pub use output::{save_results, Format, Table};
